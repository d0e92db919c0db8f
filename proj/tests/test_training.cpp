#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "evd/decision.hpp"
#include "evd/errors.hpp"
#include "evd/model.hpp"
#include "evd/training.hpp"
#include "test_util.hpp"

using namespace evd;

namespace {

Dataset blobs(double sep, double stddev, std::size_t per_class,
              std::uint64_t seed) {
  return make_blobs(3, per_class, 2, sep, stddev, 0, seed);
}

PrototypeBank bank_for(const Dataset& data, std::size_t per_class,
                       std::uint64_t seed) {
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.is_outlier(i)) continue;
    features.push_back(data.rows[i]);
    labels.push_back(data.labels[i]);
  }
  return init_prototypes(features, labels, data.frame, per_class, seed);
}

}  // namespace

TEST_CASE("loss worked values (natural log)") {
  SUBCASE("perfect prediction costs ~0") {
    CHECK(loss(std::vector<double>{1.0, 0.0, 0.0}, 0, 1e-7) ==
          doctest::Approx(0.0).epsilon(1e-5));
  }
  SUBCASE("split prediction") {
    CHECK(loss(std::vector<double>{0.5, 0.5, 0.0}, 0, 1e-7) ==
          doctest::Approx(1.3863).epsilon(1e-4));
  }
  SUBCASE("confident prediction") {
    CHECK(loss(std::vector<double>{0.97, 0.01, 0.01}, 0, 1e-7) ==
          doctest::Approx(0.0506).epsilon(1e-2));
  }
}

TEST_CASE("loss_grad worked values and finite differences") {
  SUBCASE("closed form") {
    const auto g = loss_grad(std::vector<double>{0.70, 0.10, 0.10}, 0, 1e-7);
    CHECK(g[0] == doctest::Approx(-1.4286).epsilon(1e-4));
    CHECK(g[1] == doctest::Approx(1.1111).epsilon(1e-4));
    CHECK(g[2] == doctest::Approx(1.1111).epsilon(1e-4));
  }
  SUBCASE("optimum gradients collapse up to the clamp") {
    const auto g = loss_grad(std::vector<double>{1.0, 0.0, 0.0}, 0, 1e-7);
    CHECK(std::abs(g[0]) < 1.1e7 * 1e-7 + 2.0);  // -1/(1-eps) before clamp
    CHECK(g[1] == doctest::Approx(1.0).epsilon(1e-6));
  }
  SUBCASE("matches finite differences") {
    Rng rng(2);
    const double step = 1e-6;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> eu(3);
      for (double& v : eu) v = 0.05 + 0.9 * rng.uniform();
      const std::size_t target = rng.below(3);
      const auto g = loss_grad(eu, target, 1e-7);
      for (std::size_t k = 0; k < 3; ++k) {
        const double saved = eu[k];
        eu[k] = saved + step;
        const double up = loss(eu, target, 1e-7);
        eu[k] = saved - step;
        const double down = loss(eu, target, 1e-7);
        eu[k] = saved;
        const double fd = (up - down) / (2 * step);
        worst = std::max(worst, std::abs(g[k] - fd) / std::max(1.0, std::abs(fd)));
      }
    }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("training on well-separated blobs reaches high precise accuracy") {
  // sigma 0.3, means 4 apart -> separation 4/0.3 in stddev units.
  const Dataset data = blobs(4.0 / 0.3, 0.3, 100, 7);
  FeatureNet net;
  net.input_shape = {2};
  PrototypeBank bank = bank_for(data, 2, 7);

  TrainingConfig config;
  config.learning_rate = 0.1;
  config.epochs = 50;
  config.seed = 7;
  config.nu = 0.5;
  config.validation_fraction = 0.2;

  const auto result = train(data, net, bank, identity_utilities(3), config);
  REQUIRE(result.epochs.size() == 50);
  CHECK(result.epochs.back().train_acc >= 0.95);
  CHECK(result.epochs.back().val_acc >= 0.9);
  CHECK(result.epochs.back().train_loss < result.epochs.front().train_loss);
}

TEST_CASE("zero-ish learning rate leaves parameters unchanged") {
  const Dataset data = blobs(6.0, 1.0, 20, 3);
  FeatureNet net;
  net.input_shape = {2};
  PrototypeBank bank = bank_for(data, 1, 3);
  const PrototypeBank before = bank;

  TrainingConfig config;
  config.learning_rate = 1e-300;  // validate() requires > 0
  config.epochs = 3;
  config.seed = 3;
  train(data, net, bank, identity_utilities(3), config);
  for (std::size_t i = 0; i < bank.prototypes.size(); ++i) {
    CHECK(bank.prototypes[i] == doctest::Approx(before.prototypes[i]).epsilon(1e-12));
  }
}

TEST_CASE("training is bitwise deterministic for a fixed seed") {
  const Dataset data = blobs(4.0, 1.0, 40, 11);
  TrainingConfig config;
  config.learning_rate = 0.1;
  config.epochs = 5;
  config.seed = 42;

  FeatureNet net_a, net_b;
  net_a.input_shape = net_b.input_shape = {2};
  PrototypeBank bank_a = bank_for(data, 2, 42);
  PrototypeBank bank_b = bank_for(data, 2, 42);
  const auto result_a = train(data, net_a, bank_a, identity_utilities(3), config);
  const auto result_b = train(data, net_b, bank_b, identity_utilities(3), config);

  CHECK(bank_a.prototypes == bank_b.prototypes);  // exact, not approximate
  CHECK(bank_a.eta == bank_b.eta);
  CHECK(bank_a.xi == bank_b.xi);
  CHECK(bank_a.membership_logits == bank_b.membership_logits);
  for (std::size_t e = 0; e < result_a.epochs.size(); ++e) {
    CHECK(result_a.epochs[e].train_loss == result_b.epochs[e].train_loss);
  }
}

TEST_CASE("one SGD step decreases a single sample's loss at small lr") {
  const Dataset data = blobs(2.0, 1.0, 30, 9);
  FeatureNet net;
  net.input_shape = {2};
  PrototypeBank bank = bank_for(data, 2, 9);

  // Single-sample dataset distilled from a mildly ambiguous point.
  Dataset one;
  one.frame = data.frame;
  one.dim = 2;
  one.rows = {data.rows[5]};
  one.labels = {data.labels[5]};

  auto sample_loss = [&](const FeatureNet& n, const PrototypeBank& b) {
    const auto mass = predict_mass(n, b, one.rows[0]);
    const auto eu = singleton_expected_utilities(mass, identity_utilities(3), 0.5);
    return loss(eu, one.labels[0], 1e-7);
  };

  const double before = sample_loss(net, bank);
  TrainingConfig config;
  config.learning_rate = 1e-4;
  config.epochs = 1;
  config.seed = 1;
  config.validation_fraction = 0.0;
  train(one, net, bank, identity_utilities(3), config);
  CHECK(sample_loss(net, bank) < before);
}

TEST_CASE("tune_nu") {
  const Dataset data = blobs(8.0, 0.5, 30, 21);
  FeatureNet net;
  net.input_shape = {2};
  PrototypeBank bank = bank_for(data, 1, 21);
  TrainingConfig config;
  config.learning_rate = 0.02;
  config.epochs = 50;
  config.seed = 21;
  train(data, net, bank, identity_utilities(3), config);
  const auto eum = extend_utility_matrix(identity_utilities(3),
                                         build_full_catalog(data.frame), 0.8);

  SUBCASE("single-point grid returns that point") {
    CHECK(tune_nu(net, bank, eum, data, std::vector<double>{0.3}) == 0.3);
  }
  SUBCASE("returned nu attains the best AU on the grid") {
    const auto grid = default_nu_grid();
    const double best = tune_nu(net, bank, eum, data, grid);
    auto au_at = [&](double nu) {
      double total = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.is_outlier(i)) continue;
        const auto mass = predict_mass(net, bank, data.rows[i]);
        const auto d = decide(expected_utilities(mass, eum, nu));
        total += eum.value(*eum.catalog()->index_of(d.act.members),
                           data.labels[i]);
        ++n;
      }
      return total / n;
    };
    const double best_au = au_at(best);
    for (const double nu : grid) CHECK(best_au >= au_at(nu) - 1e-12);
  }
  SUBCASE("identical decisions across the grid fall back to the smallest nu") {
    // On a confidently-classified set at gamma 0.5 every grid point yields
    // the same precise decisions, so the tie rule picks the grid minimum.
    const auto eum05 = extend_utility_matrix(
        identity_utilities(3), build_full_catalog(data.frame), 0.5);
    CHECK(tune_nu(net, bank, eum05, data, default_nu_grid()) == 0.0);
  }
}

TEST_CASE("gradient_check") {
  const Dataset data = blobs(3.0, 1.0, 10, 13);
  FeatureNet net;
  net.input_shape = {2};
  PrototypeBank bank = bank_for(data, 2, 13);

  SUBCASE("pass-through pipeline passes at a tight tolerance") {
    const auto report = gradient_check(net, bank, identity_utilities(3), 0.5,
                                       1e-7, data, 1e-6, 1e-6);
    CHECK(report.pass);
    CHECK(report.max_rel_error < 1e-6);
    CHECK(report.parameters ==
          bank.prototypes.size() + 2 * bank.count + bank.membership_logits.size());
  }

  SUBCASE("a corrupted analytic gradient is caught") {
    // Recompute the analytic gradient for one sample, double one entry and
    // compare against finite differences with the harness comparator.
    const auto mass_grad = [&](PrototypeBank b) {
      Tensor input{net.input_shape, data.rows[0]};
      auto [features, ntrace] = net_forward(input, net);
      auto [mass, dtrace] = ds_forward(features, b);
      const auto eu = singleton_expected_utilities(mass, identity_utilities(3), 0.5);
      const auto dE = loss_grad(eu, data.labels[0], 1e-7);
      const auto dm = decision_backward(mass, identity_utilities(3), 0.5, dE);
      return ds_backward(dtrace, features, b, dm);
    };
    const DsGradients g = mass_grad(bank);
    const double corrupted = 2.0 * g.eta[0];

    const double step = 1e-6;
    PrototypeBank probe = bank;
    auto loss_at = [&]() {
      const auto mass = predict_mass(net, probe, data.rows[0]);
      const auto eu = singleton_expected_utilities(mass, identity_utilities(3), 0.5);
      return loss(eu, data.labels[0], 1e-7);
    };
    probe.eta[0] += step;
    const double up = loss_at();
    probe.eta[0] -= 2 * step;
    const double down = loss_at();
    const double fd = (up - down) / (2 * step);

    CHECK(relative_error(g.eta[0], fd) < 1e-6);
    CHECK(relative_error(corrupted, fd) > 1e-4);  // the check must fail
  }
}
