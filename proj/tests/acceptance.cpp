// Acceptance suite: runs every contract criterion end to end and prints one
// pass/fail line per criterion. Exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "evd/act_select.hpp"
#include "evd/batch.hpp"
#include "evd/dataset.hpp"
#include "evd/decision.hpp"
#include "evd/evaluation.hpp"
#include "evd/mass.hpp"
#include "evd/model.hpp"
#include "evd/rng.hpp"
#include "evd/training.hpp"
#include "evd/utility.hpp"

namespace fs = std::filesystem;
using namespace evd;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string format(const char* fmt, ...) {
  char buf[512];
  va_list args;
  va_start(args, fmt);
  std::vsnprintf(buf, sizeof buf, fmt, args);
  va_end(args);
  return buf;
}

// ---- shared desk-scale fixtures ------------------------------------------

// 3-class 2-D blobs, adjacent means `separation` stddevs apart. Train and
// test are independent 300-sample draws; held-out draws use the benchmark
// seed + 1000 convention.
struct DeskSplit {
  Dataset train, test;
};

DeskSplit desk_split(double separation, std::uint64_t seed) {
  DeskSplit split;
  split.train = make_blobs(3, 100, 2, separation, 1.0, 0, seed);
  split.test = make_blobs(3, 100, 2, separation, 1.0, 0, seed + 1000);
  return split;
}

Model train_desk_model(const Dataset& data, double learning_rate,
                       std::size_t epochs, std::size_t prototypes) {
  Model model;
  model.frame = data.frame;
  model.net.input_shape = {2};
  model.config.learning_rate = learning_rate;
  model.config.epochs = epochs;
  model.config.batch_size = 1;
  model.config.prototypes_per_class = prototypes;
  model.config.seed = 7;
  model.config.nu = 0.5;
  model.config.gamma = 0.8;

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.is_outlier(i)) continue;
    features.push_back(data.rows[i]);
    labels.push_back(data.labels[i]);
  }
  model.bank = init_prototypes(features, labels, model.frame,
                               model.config.prototypes_per_class,
                               model.config.seed);
  train(data, model.net, model.bank, identity_utilities(3), model.config);
  return model;
}

double precise_accuracy(const Model& model, const Dataset& data) {
  std::size_t correct = 0, total = 0;
  const auto original = identity_utilities(model.frame->size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.is_outlier(i)) continue;
    const auto mass = predict_mass(model, data.rows[i]);
    const auto eu = singleton_expected_utilities(mass, original, 1.0);
    const auto best = std::max_element(eu.begin(), eu.end()) - eu.begin();
    correct += best == data.labels[i] ? 1 : 0;
    ++total;
  }
  return static_cast<double>(correct) / static_cast<double>(total);
}

// ---- criteria -------------------------------------------------------------

Outcome criterion_owa() {
  const double start = now_seconds();
  const auto w = meowa_weights(3, 0.8);
  double worst = std::abs(w.weights[0] - 0.6819);

  auto frame = make_frame({"w1", "w2", "w3"});
  const auto eum = extend_utility_matrix(identity_utilities(3),
                                         build_full_catalog(frame), 0.8);
  const std::map<SubsetMask, std::vector<double>> table = {
      {0b001, {1, 0, 0}},          {0b010, {0, 1, 0}},
      {0b100, {0, 0, 1}},          {0b011, {0.8, 0.8, 0}},
      {0b101, {0.8, 0, 0.8}},      {0b110, {0, 0.8, 0.8}},
      {0b111, {0.6819, 0.6819, 0.6819}}};
  for (const auto& [mask, row] : table) {
    const auto a = eum.catalog()->index_of(mask);
    if (!a) return {false, "catalog row missing"};
    for (std::size_t j = 0; j < 3; ++j) {
      worst = std::max(worst, std::abs(eum.value(*a, j) - row[j]));
    }
  }
  const double elapsed = now_seconds() - start;
  return {worst <= 1e-3 && elapsed < 1.0,
          format("g1=%.5f, max table error %.2e, %.3fs", w.weights[0], worst,
                 elapsed)};
}

Outcome criterion_expected_utility() {
  auto frame = make_frame({"w1", "w2", "w3"});
  const std::vector<std::pair<std::vector<double>, double>> masses = {
      {{0.70, 0.10, 0.10}, 0.10},
      {{0.97, 0.01, 0.01}, 0.01},
      {{0.50, 0.50, 0.00}, 0.00},
      {{0.40, 0.40, 0.00}, 0.20}};
  const std::vector<std::vector<double>> expected = {
      {0.70, 0.10, 0.10},
      {0.97, 0.01, 0.01},
      {0.50, 0.50, 0.00},
      {0.40, 0.40, 0.00}};
  const auto original = identity_utilities(3);
  double worst = 0.0;
  for (std::size_t row = 0; row < masses.size(); ++row) {
    const auto m = make_mass_vector(frame, masses[row].first, masses[row].second);
    const auto eu = singleton_expected_utilities(m, original, 1.0);
    for (std::size_t k = 0; k < 3; ++k) {
      worst = std::max(worst, std::abs(eu[k] - expected[row][k]));
    }
  }
  return {worst <= 1e-9, format("max error %.2e over 4 rows", worst)};
}

Outcome criterion_act_selection() {
  auto frame = make_frame({"w1", "w2", "w3", "w4"});
  const ConfusionMatrix cm{frame,
                           {557, 115, 24, 13,   //
                            107, 679, 32, 14,   //
                            13, 16, 663, 128,   //
                            25, 32, 145, 627}};
  const auto features = normalize_columns(cm);
  const auto tree = hac(features, Linkage::Ward);
  const auto acts = select_acts(tree, features);

  const bool right_acts = acts.size() == 2 && acts[0].members == 0b0011 &&
                          acts[1].members == 0b1100;
  double pair12_height = -1.0;
  for (const Merge& merge : tree.merges) {
    if (merge.members == 0b0011) pair12_height = merge.height;
  }
  const bool right_height = std::abs(pair12_height - 0.927) <= 0.002;
  return {right_acts && right_height,
          format("acts {w1+w2, w3+w4}=%s, merge height %.4f",
                 right_acts ? "yes" : "no", pair12_height)};
}

Outcome criterion_gradients() {
  const double start = now_seconds();
  Rng rng(4242);
  double worst = 0.0;
  std::string worst_param;

  for (int config = 0; config < 100; ++config) {
    // conv 2x2 (tanh) -> 2x2 sorted-weight pool -> DS with 4 prototypes
    // -> expected-utility layer -> loss. 5x5 input, 3 classes.
    FeatureNet net;
    net.input_shape = {5, 5, 1};
    ConvLayer conv;
    conv.kernel_h = conv.kernel_w = 2;
    conv.in_channels = 1;
    conv.out_channels = 2;
    conv.stride = 1;
    conv.activation = Activation::Tanh;
    net.layers.push_back(conv);
    PoolLayer pool;
    pool.window = 2;
    pool.weights = {0.4, 0.3, 0.2, 0.1};
    net.layers.push_back(pool);
    init_net_params(net, rng);

    auto frame = make_frame({"a", "b", "c"});
    PrototypeBank bank;
    bank.frame = frame;
    bank.feature_dim = 8;
    bank.count = 4;
    bank.prototypes.resize(32);
    for (double& v : bank.prototypes) v = rng.normal();
    bank.eta = {0.3 + rng.uniform(), 0.3 + rng.uniform(), 0.3 + rng.uniform(),
                0.3 + rng.uniform()};
    bank.xi = {rng.normal(), rng.normal(), rng.normal(), rng.normal()};
    bank.membership_logits.resize(12);
    for (double& v : bank.membership_logits) v = rng.normal();

    Dataset sample;
    sample.frame = frame;
    sample.dim = 25;
    std::vector<double> row(25);
    for (double& v : row) v = rng.normal();
    sample.rows.push_back(row);
    sample.labels.push_back(static_cast<int>(rng.below(3)));

    const double nu = rng.uniform();
    const auto report = gradient_check(net, bank, identity_utilities(3), nu,
                                       1e-7, sample, 1e-6, 1e-4);
    if (report.max_rel_error > worst) {
      worst = report.max_rel_error;
      worst_param = report.worst_parameter;
    }
  }
  const double elapsed = now_seconds() - start;
  return {worst < 1e-4 && elapsed < 30.0,
          format("max rel error %.2e (%s), %.1fs", worst, worst_param.c_str(),
                 elapsed)};
}

Outcome criterion_dempster_algebra() {
  auto frame = make_frame({"a", "b", "c"});
  Rng rng(77);

  auto random_general = [&](std::size_t focal_count) {
    std::map<SubsetMask, double> focal;
    focal[frame->omega()] = 0.25 + rng.uniform();
    double total = focal[frame->omega()];
    while (focal.size() < focal_count + 1) {
      const SubsetMask s = 1 + rng.below(frame->omega());
      const double w = 0.05 + rng.uniform();
      focal[s] += w;
      total += w;
    }
    for (auto& [s, v] : focal) v /= total;
    return make_mass(frame, std::move(focal));
  };
  auto diff = [](const GeneralMassFunction& a, const GeneralMassFunction& b) {
    double worst = 0.0;
    for (const auto& [s, v] : a.focal) worst = std::max(worst, std::abs(v - b.mass(s)));
    for (const auto& [s, v] : b.focal) worst = std::max(worst, std::abs(v - a.mass(s)));
    return worst;
  };

  double worst = 0.0;
  const auto neutral = vacuous(frame);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_general(3);
    const auto b = random_general(3);
    const auto c = random_general(2);
    worst = std::max(worst, diff(combine_dempster(a, b), combine_dempster(b, a)));
    worst = std::max(worst, diff(combine_dempster(combine_dempster(a, b), c),
                                 combine_dempster(a, combine_dempster(b, c))));
    worst = std::max(worst, diff(combine_dempster(a, neutral), a));
  }

  // Recursion vs product closed form for up to 20 prototype masses.
  double worst_form = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.below(20);
    std::vector<MassVector> masses;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = rng.uniform() * 0.95;
      std::vector<double> h(3);
      double total = 0.0;
      for (double& v : h) {
        v = 0.01 + rng.uniform();
        total += v;
      }
      for (double& v : h) v /= total;
      masses.push_back(prototype_mass(s, h, frame));
    }
    const auto combined = combine_prototypes(masses);
    std::vector<double> product(3, 1.0);
    double prod_omega = 1.0;
    for (const auto& m : masses) {
      for (std::size_t j = 0; j < 3; ++j) product[j] *= m.singletons[j] + m.omega;
      prod_omega *= m.omega;
    }
    double norm = prod_omega;
    for (std::size_t j = 0; j < 3; ++j) norm += product[j] - prod_omega;
    for (std::size_t j = 0; j < 3; ++j) {
      worst_form = std::max(
          worst_form,
          std::abs(combined.singletons[j] - (product[j] - prod_omega) / norm));
    }
    worst_form = std::max(worst_form,
                          std::abs(combined.omega - prod_omega / norm));
  }
  return {worst < 1e-12 && worst_form < 1e-12,
          format("algebra error %.2e, closed-form error %.2e", worst,
                 worst_form)};
}

Outcome criterion_omega_dominance() {
  auto frame = make_frame({"a", "b", "c"});
  const auto eum = extend_utility_matrix(identity_utilities(3),
                                         build_full_catalog(frame), 1.0);
  Rng rng(55);
  std::vector<Decision> decisions;
  std::vector<int> labels;
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> raw(4);
    double total = 0.0;
    for (double& v : raw) {
      v = -std::log(1.0 - rng.uniform());
      total += v;
    }
    MassVector m{frame, {raw[0] / total, raw[1] / total, raw[2] / total},
                 raw[3] / total};
    if (m.omega <= 0.0) continue;
    decisions.push_back(decide(expected_utilities(m, eum, 0.5)));
    labels.push_back(static_cast<int>(rng.below(3)));
  }
  std::size_t omega_count = 0;
  for (const Decision& d : decisions) {
    if (d.act.members == frame->omega()) ++omega_count;
  }
  const double au = average_utility(decisions, labels, eum);
  return {omega_count == decisions.size() && std::abs(au - 1.0) < 1e-12,
          format("%zu/%zu omega decisions, AU %.12f", omega_count,
                 decisions.size(), au)};
}

Outcome criterion_desk_benchmark(Model& model_out, DeskSplit& split_out) {
  const double start = now_seconds();
  split_out = desk_split(4.0, 7);
  model_out = train_desk_model(split_out.train, 0.03, 20, 4);
  const double accuracy = precise_accuracy(model_out, split_out.test);
  const double elapsed = now_seconds() - start;
  return {accuracy >= 0.95 && elapsed < 60.0,
          format("precise test accuracy %.4f, %.1fs", accuracy, elapsed)};
}

Outcome criterion_novelty(const Model& model, const DeskSplit& split) {
  // Tune nu on the training data's nu-utility curve at gamma 0.8, then
  // measure omega rates on a fresh inlier draw plus shell outliers.
  const auto eum = extend_utility_matrix(identity_utilities(3),
                                         build_full_catalog(model.frame), 0.8);
  const auto grid = default_nu_grid();
  const double nu = tune_nu(model.net, model.bank, eum, split.train, grid);

  const Dataset novelty = make_blobs(3, 100, 2, 4.0, 1.0, 100, 1007);
  const auto decisions = decide_batch(model, eum, nu, novelty.rows);
  const auto report = evaluate_decisions(decisions, novelty.labels, eum);
  const double separation =
      report.omega_rate_outliers - report.omega_rate_inliers;
  return {separation >= 0.3,
          format("tuned nu %.1f, omega rate out %.3f vs in %.3f (gap %.3f)",
                 nu, report.omega_rate_outliers, report.omega_rate_inliers,
                 separation)};
}

Outcome criterion_set_valued() {
  // Overlapping blobs: adjacent means only one stddev apart.
  const DeskSplit split = desk_split(1.0, 7);
  const Model model = train_desk_model(split.train, 0.01, 50, 2);

  const auto catalog = build_full_catalog(model.frame);
  const auto eum05 =
      extend_utility_matrix(identity_utilities(3), catalog, 0.5);
  const auto eum09 =
      extend_utility_matrix(identity_utilities(3), catalog, 0.9);
  const auto d05 = decide_batch(model, eum05, 0.5, split.test.rows);
  const auto d09 = decide_batch(model, eum09, 0.5, split.test.rows);
  const double ac05 = average_cardinality(d05);
  const double ac09 = average_cardinality(d09);
  return {ac05 == 1.0 && ac09 > ac05,
          format("AC(0.5)=%.4f, AC(0.9)=%.4f", ac05, ac09)};
}

Outcome criterion_determinism() {
  const std::string cli = EVD_CLI_PATH;
  const fs::path dir = fs::path("acceptance_scratch");
  fs::create_directories(dir);
  auto path = [&](const std::string& name) { return (dir / name).string(); };
  auto run = [&](const std::string& args) {
    const std::string command = cli + " " + args + " > /dev/null 2>&1";
    return std::system(command.c_str()) == 0;
  };
  auto slurp = [](const std::string& p) {
    std::ifstream in(p);
    std::stringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  const std::string config = path("config.json");
  {
    std::ofstream out(config);
    out << R"({"epochs": 15, "seed": 7, "prototypes_per_class": 2})";
  }
  bool ok = run("synth --classes 3 --per-class 60 --dims 2 --sep 4 --seed 7 "
                "--outliers 20 --out " + path("data.csv"));
  for (const char* tag : {"a", "b"}) {
    const std::string suffix = tag;
    ok = ok && run("train --data " + path("data.csv") + " --config " + config +
                   " --out " + path("model_" + suffix + ".json") +
                   " --metrics " + path("metrics_" + suffix + ".csv"));
    ok = ok && run("eval --data " + path("data.csv") + " --model " +
                   path("model_" + suffix + ".json") +
                   " --gamma 0.8 --nu 0.5 --out " +
                   path("report_" + suffix + ".json") + " --csv " +
                   path("report_" + suffix + ".csv"));
  }
  if (!ok) {
    fs::remove_all(dir);
    return {false, "CLI invocation failed"};
  }
  const bool models_equal =
      slurp(path("model_a.json")) == slurp(path("model_b.json"));
  const bool reports_equal =
      slurp(path("report_a.json")) == slurp(path("report_b.json")) &&
      slurp(path("report_a.csv")) == slurp(path("report_b.csv")) &&
      slurp(path("metrics_a.csv")) == slurp(path("metrics_b.csv"));
  fs::remove_all(dir);
  return {models_equal && reports_equal,
          format("model files identical: %s, reports identical: %s",
                 models_equal ? "yes" : "no", reports_equal ? "yes" : "no")};
}

}  // namespace

int main() {
  std::vector<std::pair<std::string, Outcome>> results;
  Model desk_model;
  DeskSplit desk_data;

  auto record = [&](int id, const std::string& name, Outcome outcome) {
    results.emplace_back(name, outcome);
    std::printf("[%s] criterion %d: %s (%s)\n", outcome.pass ? "PASS" : "FAIL",
                id, name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
  };

  record(1, "OWA oracle", criterion_owa());
  record(2, "expected-utility oracle", criterion_expected_utility());
  record(3, "act-selection oracle", criterion_act_selection());
  record(4, "gradient suite", criterion_gradients());
  record(5, "dempster algebra suite", criterion_dempster_algebra());
  record(6, "gamma=1 omega dominance", criterion_omega_dominance());
  record(7, "end-to-end desk benchmark",
         criterion_desk_benchmark(desk_model, desk_data));
  record(8, "novelty separation", criterion_novelty(desk_model, desk_data));
  record(9, "set-valued cardinality trend", criterion_set_valued());
  record(10, "CLI determinism", criterion_determinism());

  std::size_t passed = 0;
  for (const auto& [name, outcome] : results) passed += outcome.pass ? 1 : 0;
  std::printf("%zu/%zu criteria passed\n", passed, results.size());
  return passed == results.size() ? 0 : 1;
}
