#include "evd/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>

#include "evd/decision.hpp"
#include "evd/errors.hpp"
#include "evd/rng.hpp"

namespace evd {

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0)) {
    throw std::invalid_argument("learning_rate must be positive");
  }
  if (!(log_epsilon > 0.0 && log_epsilon <= 1e-3)) {
    throw std::invalid_argument("log_epsilon must lie in (0, 1e-3]");
  }
  if (!(nu >= 0.0 && nu <= 1.0)) {
    throw std::invalid_argument("nu outside [0,1]");
  }
  if (!(gamma >= 0.5 && gamma <= 1.0)) {
    throw std::invalid_argument("gamma outside [0.5,1]");
  }
  if (!(validation_fraction >= 0.0 && validation_fraction < 1.0)) {
    throw std::invalid_argument("validation_fraction outside [0,1)");
  }
  if (batch_size == 0) throw std::invalid_argument("batch_size must be >= 1");
  if (prototypes_per_class == 0) {
    throw std::invalid_argument("prototypes_per_class must be >= 1");
  }
}

namespace {

double clamp_unit(double v, double eps) {
  return std::min(std::max(v, eps), 1.0 - eps);
}

}  // namespace

double loss(std::span<const double> eu_singletons, std::size_t target,
            double log_epsilon) {
  if (target >= eu_singletons.size()) {
    throw std::invalid_argument("target class out of range");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < eu_singletons.size(); ++k) {
    const double e = clamp_unit(eu_singletons[k], log_epsilon);
    total -= k == target ? std::log(e) : std::log(1.0 - e);
  }
  return total;
}

std::vector<double> loss_grad(std::span<const double> eu_singletons,
                              std::size_t target, double log_epsilon) {
  if (target >= eu_singletons.size()) {
    throw std::invalid_argument("target class out of range");
  }
  std::vector<double> grad(eu_singletons.size());
  for (std::size_t k = 0; k < eu_singletons.size(); ++k) {
    const double e = clamp_unit(eu_singletons[k], log_epsilon);
    grad[k] = k == target ? -1.0 / e : 1.0 / (1.0 - e);
  }
  return grad;
}

namespace {

struct SampleEval {
  double loss = 0.0;
  bool correct = false;
};

// Forward pass + per-sample gradients, accumulated into the running sums.
SampleEval forward_backward(const std::vector<double>& row, int label,
                            const FeatureNet& net, const PrototypeBank& bank,
                            std::span<const double> original, double nu,
                            double log_eps, NetGradients* net_sum,
                            DsGradients* ds_sum) {
  Tensor input{net.input_shape, row};
  auto [features, ntrace] = net_forward(input, net);
  auto [mass, dtrace] = ds_forward(features, bank);
  const auto eu = singleton_expected_utilities(mass, original, nu);

  SampleEval eval;
  eval.loss = loss(eu, static_cast<std::size_t>(label), log_eps);
  eval.correct =
      std::max_element(eu.begin(), eu.end()) - eu.begin() == label;

  if (net_sum != nullptr) {
    const auto dE = loss_grad(eu, static_cast<std::size_t>(label), log_eps);
    const auto dm = decision_backward(mass, original, nu, dE);
    const DsGradients dsg = ds_backward(dtrace, features, bank, dm);
    const NetGradients ng = net_backward(ntrace, net, dsg.input);

    for (std::size_t i = 0; i < dsg.prototypes.size(); ++i) {
      ds_sum->prototypes[i] += dsg.prototypes[i];
    }
    for (std::size_t i = 0; i < dsg.eta.size(); ++i) {
      ds_sum->eta[i] += dsg.eta[i];
      ds_sum->xi[i] += dsg.xi[i];
    }
    for (std::size_t i = 0; i < dsg.membership_logits.size(); ++i) {
      ds_sum->membership_logits[i] += dsg.membership_logits[i];
    }
    for (std::size_t l = 0; l < ng.layers.size(); ++l) {
      for (std::size_t i = 0; i < ng.layers[l].weights.size(); ++i) {
        net_sum->layers[l].weights[i] += ng.layers[l].weights[i];
      }
      for (std::size_t i = 0; i < ng.layers[l].bias.size(); ++i) {
        net_sum->layers[l].bias[i] += ng.layers[l].bias[i];
      }
    }
  }
  return eval;
}

NetGradients zero_net_gradients(const FeatureNet& net) {
  NetGradients g;
  g.layers.resize(net.layers.size());
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    if (const auto* dense = std::get_if<DenseLayer>(&net.layers[l])) {
      g.layers[l].weights.assign(dense->weights.size(), 0.0);
      g.layers[l].bias.assign(dense->bias.size(), 0.0);
    } else if (const auto* conv = std::get_if<ConvLayer>(&net.layers[l])) {
      g.layers[l].weights.assign(conv->weights.size(), 0.0);
      g.layers[l].bias.assign(conv->bias.size(), 0.0);
    }
  }
  return g;
}

DsGradients zero_ds_gradients(const PrototypeBank& bank) {
  DsGradients g;
  g.prototypes.assign(bank.prototypes.size(), 0.0);
  g.eta.assign(bank.count, 0.0);
  g.xi.assign(bank.count, 0.0);
  g.membership_logits.assign(bank.membership_logits.size(), 0.0);
  g.input.assign(bank.feature_dim, 0.0);
  return g;
}

void apply_update(FeatureNet& net, PrototypeBank& bank,
                  const NetGradients& net_grad, const DsGradients& ds_grad,
                  double scale) {
  for (std::size_t i = 0; i < bank.prototypes.size(); ++i) {
    bank.prototypes[i] -= scale * ds_grad.prototypes[i];
  }
  for (std::size_t i = 0; i < bank.count; ++i) {
    bank.eta[i] -= scale * ds_grad.eta[i];
    bank.xi[i] -= scale * ds_grad.xi[i];
  }
  for (std::size_t i = 0; i < bank.membership_logits.size(); ++i) {
    bank.membership_logits[i] -= scale * ds_grad.membership_logits[i];
  }
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    auto update = [&](std::vector<double>& params,
                      const std::vector<double>& grads) {
      for (std::size_t i = 0; i < params.size(); ++i) {
        params[i] -= scale * grads[i];
      }
    };
    if (auto* dense = std::get_if<DenseLayer>(&net.layers[l])) {
      update(dense->weights, net_grad.layers[l].weights);
      update(dense->bias, net_grad.layers[l].bias);
    } else if (auto* conv = std::get_if<ConvLayer>(&net.layers[l])) {
      update(conv->weights, net_grad.layers[l].weights);
      update(conv->bias, net_grad.layers[l].bias);
    }
  }
}

}  // namespace

TrainResult train(const Dataset& data, FeatureNet& net, PrototypeBank& bank,
                  std::span<const double> original_utilities,
                  const TrainingConfig& config) {
  config.validate();
  if (!(*data.frame == *bank.frame)) {
    throw std::invalid_argument("dataset frame != bank frame");
  }

  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (!data.is_outlier(i)) labeled.push_back(i);
  }
  if (labeled.empty()) throw std::invalid_argument("no labeled samples");

  Rng rng(config.seed);
  rng.shuffle(labeled);
  const auto val_count = static_cast<std::size_t>(
      std::ceil(config.validation_fraction * static_cast<double>(labeled.size())));
  if (val_count >= labeled.size()) {
    throw std::invalid_argument("validation split leaves no training data");
  }
  std::vector<std::size_t> train_idx(labeled.begin(),
                                     labeled.end() - val_count);
  const std::vector<std::size_t> val_idx(labeled.end() - val_count,
                                         labeled.end());

  TrainResult result;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(train_idx);

    double train_loss = 0.0;
    std::size_t train_correct = 0;
    std::size_t cursor = 0;
    while (cursor < train_idx.size()) {
      const std::size_t batch_end =
          std::min(cursor + config.batch_size, train_idx.size());
      NetGradients net_sum = zero_net_gradients(net);
      DsGradients ds_sum = zero_ds_gradients(bank);
      for (std::size_t b = cursor; b < batch_end; ++b) {
        const std::size_t i = train_idx[b];
        const SampleEval eval = forward_backward(
            data.rows[i], data.labels[i], net, bank, original_utilities,
            config.nu, config.log_epsilon, &net_sum, &ds_sum);
        train_loss += eval.loss;
        train_correct += eval.correct ? 1 : 0;
      }
      const double scale =
          config.learning_rate / static_cast<double>(batch_end - cursor);
      apply_update(net, bank, net_sum, ds_sum, scale);
      cursor = batch_end;
    }

    EpochMetrics metrics;
    metrics.epoch = epoch;
    metrics.train_loss = train_loss / static_cast<double>(train_idx.size());
    metrics.train_acc = static_cast<double>(train_correct) /
                        static_cast<double>(train_idx.size());

    double val_loss = 0.0;
    std::size_t val_correct = 0;
    for (const std::size_t i : val_idx) {
      const SampleEval eval = forward_backward(
          data.rows[i], data.labels[i], net, bank, original_utilities,
          config.nu, config.log_epsilon, nullptr, nullptr);
      val_loss += eval.loss;
      val_correct += eval.correct ? 1 : 0;
    }
    if (!val_idx.empty()) {
      metrics.val_loss = val_loss / static_cast<double>(val_idx.size());
      metrics.val_acc = static_cast<double>(val_correct) /
                        static_cast<double>(val_idx.size());
    } else {
      metrics.val_loss = std::numeric_limits<double>::quiet_NaN();
      metrics.val_acc = std::numeric_limits<double>::quiet_NaN();
    }
    result.epochs.push_back(metrics);

    if (!std::isfinite(metrics.train_loss)) {
      throw DivergenceDetected("training loss is not finite at epoch " +
                               std::to_string(epoch));
    }
  }
  return result;
}

void write_metrics_csv(const TrainResult& result, std::ostream& out) {
  out << "epoch,train_loss,val_loss,train_acc,val_acc\n";
  char buf[160];
  for (const EpochMetrics& m : result.epochs) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g,%.17g\n", m.epoch,
                  m.train_loss, m.val_loss, m.train_acc, m.val_acc);
    out << buf;
  }
}

double tune_nu(const FeatureNet& net, const PrototypeBank& bank,
               const ExtendedUtilityMatrix& eum, const Dataset& validation,
               std::span<const double> nu_grid) {
  if (nu_grid.empty()) throw std::invalid_argument("empty nu grid");

  // Masses do not depend on nu; compute them once.
  std::vector<MassVector> masses;
  std::vector<int> labels;
  for (std::size_t i = 0; i < validation.size(); ++i) {
    if (validation.is_outlier(i)) continue;
    Tensor input{net.input_shape, validation.rows[i]};
    auto [features, ntrace] = net_forward(input, net);
    masses.push_back(ds_forward(features, bank).first);
    labels.push_back(validation.labels[i]);
  }
  if (masses.empty()) {
    throw std::invalid_argument("validation set has no labeled samples");
  }

  double best_nu = nu_grid.front();
  double best_au = -1.0;
  for (const double nu : nu_grid) {
    double total = 0.0;
    for (std::size_t i = 0; i < masses.size(); ++i) {
      const Decision d = decide(expected_utilities(masses[i], eum, nu));
      const auto row = eum.catalog()->index_of(d.act.members);
      total += eum.value(*row, static_cast<std::size_t>(labels[i]));
    }
    const double au = total / static_cast<double>(masses.size());
    if (au > best_au || (au == best_au && nu < best_nu)) {
      best_au = au;
      best_nu = nu;
    }
  }
  return best_nu;
}

std::vector<double> default_nu_grid() {
  std::vector<double> grid;
  for (int i = 0; i <= 10; ++i) grid.push_back(0.1 * i);
  return grid;
}

namespace {

struct ParamRef {
  double* value;
  std::string name;
};

std::vector<ParamRef> collect_params(FeatureNet& net, PrototypeBank& bank) {
  std::vector<ParamRef> params;
  auto add = [&](std::vector<double>& v, const std::string& base) {
    for (std::size_t i = 0; i < v.size(); ++i) {
      params.push_back({&v[i], base + "[" + std::to_string(i) + "]"});
    }
  };
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const std::string base = "layer" + std::to_string(l);
    if (auto* dense = std::get_if<DenseLayer>(&net.layers[l])) {
      add(dense->weights, base + ".weights");
      add(dense->bias, base + ".bias");
    } else if (auto* conv = std::get_if<ConvLayer>(&net.layers[l])) {
      add(conv->weights, base + ".weights");
      add(conv->bias, base + ".bias");
    }
  }
  add(bank.prototypes, "bank.prototypes");
  add(bank.eta, "bank.eta");
  add(bank.xi, "bank.xi");
  add(bank.membership_logits, "bank.membership_logits");
  return params;
}

}  // namespace

GradCheckReport gradient_check(FeatureNet net, PrototypeBank bank,
                               std::span<const double> original_utilities,
                               double nu, double log_epsilon,
                               const Dataset& samples, double step,
                               double tolerance) {
  std::vector<std::size_t> labeled;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (!samples.is_outlier(i)) labeled.push_back(i);
  }
  if (labeled.empty()) throw std::invalid_argument("no labeled samples");

  auto total_loss = [&]() {
    double total = 0.0;
    for (const std::size_t i : labeled) {
      const SampleEval eval = forward_backward(
          samples.rows[i], samples.labels[i], net, bank, original_utilities,
          nu, log_epsilon, nullptr, nullptr);
      total += eval.loss;
    }
    return total;
  };

  // Analytic gradient summed over the samples.
  NetGradients net_sum = zero_net_gradients(net);
  DsGradients ds_sum = zero_ds_gradients(bank);
  for (const std::size_t i : labeled) {
    forward_backward(samples.rows[i], samples.labels[i], net, bank,
                     original_utilities, nu, log_epsilon, &net_sum, &ds_sum);
  }

  // Flatten the analytic gradient in the same order collect_params walks
  // the parameters, by loading it into a shadow net/bank.
  std::vector<double> analytic;
  {
    FeatureNet g_net = net;
    PrototypeBank g_bank = bank;
    for (std::size_t l = 0; l < g_net.layers.size(); ++l) {
      if (auto* dense = std::get_if<DenseLayer>(&g_net.layers[l])) {
        dense->weights = net_sum.layers[l].weights;
        dense->bias = net_sum.layers[l].bias;
      } else if (auto* conv = std::get_if<ConvLayer>(&g_net.layers[l])) {
        conv->weights = net_sum.layers[l].weights;
        conv->bias = net_sum.layers[l].bias;
      }
    }
    g_bank.prototypes = ds_sum.prototypes;
    g_bank.eta = ds_sum.eta;
    g_bank.xi = ds_sum.xi;
    g_bank.membership_logits = ds_sum.membership_logits;
    for (const ParamRef& ref : collect_params(g_net, g_bank)) {
      analytic.push_back(*ref.value);
    }
  }

  GradCheckReport report;
  const auto params = collect_params(net, bank);
  report.parameters = params.size();
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double saved = *params[p].value;
    *params[p].value = saved + step;
    const double up = total_loss();
    *params[p].value = saved - step;
    const double down = total_loss();
    *params[p].value = saved;
    const double fd = (up - down) / (2.0 * step);
    // Components far below the loss scale carry mostly finite-difference
    // truncation noise; they compare absolutely through the 1e-3 floor.
    const double scale = std::max({std::abs(analytic[p]), std::abs(fd), 1e-3});
    const double err = std::abs(analytic[p] - fd) / scale;
    if (err > report.max_rel_error) {
      report.max_rel_error = err;
      report.worst_parameter = params[p].name;
    }
  }
  report.pass = report.max_rel_error < tolerance;
  return report;
}

}  // namespace evd
