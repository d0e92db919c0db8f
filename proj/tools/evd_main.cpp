// Command-line surface tying the library together: dataset synthesis,
// training, evaluation, act selection, OWA weights, gradient checking and
// gamma/nu sweeps. Exit codes: 0 ok, 1 usage, 2 parse/validation,
// 3 numeric failure.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "evd/act_select.hpp"
#include "evd/batch.hpp"
#include "evd/dataset.hpp"
#include "evd/decision.hpp"
#include "evd/errors.hpp"
#include "evd/evaluation.hpp"
#include "evd/model.hpp"
#include "evd/model_io.hpp"
#include "evd/training.hpp"

namespace {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open output file: " + path);
  out << text;
}

std::vector<double> parse_double_list(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string cell;
  while (std::getline(in, cell, ',')) {
    if (!cell.empty()) values.push_back(std::stod(cell));
  }
  if (values.empty()) throw std::invalid_argument("empty numeric list");
  return values;
}

std::vector<double> load_original_utilities(const std::string& path,
                                            const evd::Frame& frame) {
  if (path.empty()) return evd::identity_utilities(frame.size());
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open utility file: " + path);
  return evd::read_original_utilities_csv(in, frame);
}

std::vector<evd::SubsetMask> acts_from_json_file(const std::string& path,
                                                 const evd::Frame& frame) {
  const json acts = json::parse(read_text_file(path));
  std::vector<evd::SubsetMask> masks;
  for (const json& names : acts) {
    evd::SubsetMask mask = 0;
    for (const json& name : names) {
      mask |= evd::singleton_mask(frame.index_of(name.get<std::string>()));
    }
    if (mask == 0) throw std::invalid_argument("empty act in acts file");
    masks.push_back(mask);
  }
  return masks;
}

evd::CatalogPtr catalog_from_flags(const evd::Model& model,
                                   const std::string& acts_mode,
                                   const std::string& acts_file) {
  if (acts_mode == "all") return evd::build_full_catalog(model.frame);
  if (acts_mode == "selected") {
    if (!model.selected_acts) {
      throw std::invalid_argument(
          "--acts selected: model carries no selected acts (run select-acts "
          "with --update-model first)");
    }
    std::vector<evd::SubsetMask> masks;
    for (const evd::Act& act : *model.selected_acts) {
      masks.push_back(act.members);
    }
    return evd::build_selected_catalog(model.frame, masks);
  }
  if (acts_mode == "file") {
    if (acts_file.empty()) {
      throw std::invalid_argument("--acts file requires --acts-file");
    }
    return evd::build_selected_catalog(
        model.frame, acts_from_json_file(acts_file, *model.frame));
  }
  throw std::invalid_argument("--acts must be all, selected or file");
}

json report_to_json(const evd::EvalReport& report, double gamma, double nu) {
  json out;
  out["gamma"] = gamma;
  out["nu"] = nu;
  out["averaged_utility"] = report.averaged_utility;
  out["averaged_cardinality"] = report.averaged_cardinality;
  out["omega_rate_inliers"] = report.omega_rate_inliers;
  out["omega_rate_outliers"] = report.omega_rate_outliers;
  out["inliers"] = report.inliers;
  out["outliers"] = report.outliers;
  out["act_counts"] = report.act_counts;
  return out;
}

std::string report_csv_row(const evd::EvalReport& report, double gamma,
                           double nu, bool header) {
  char buf[256];
  std::string out;
  if (header) out += "gamma,nu,au,ac,omega_rate_in,omega_rate_out\n";
  std::snprintf(buf, sizeof buf, "%g,%g,%.17g,%.17g,%.17g,%.17g\n", gamma, nu,
                report.averaged_utility, report.averaged_cardinality,
                report.omega_rate_inliers, report.omega_rate_outliers);
  out += buf;
  return out;
}

// Precise (singleton-act) decisions for the act-selection procedure.
std::vector<evd::Decision> precise_decisions(
    const std::vector<evd::MassVector>& masses,
    const std::vector<double>& original, double nu) {
  std::vector<evd::Decision> decisions;
  decisions.reserve(masses.size());
  for (const evd::MassVector& m : masses) {
    const auto eu = evd::singleton_expected_utilities(m, original, nu);
    const std::size_t best =
        std::max_element(eu.begin(), eu.end()) - eu.begin();
    decisions.push_back(
        {evd::Act{evd::singleton_mask(best)}, eu[best]});
  }
  return decisions;
}

struct TrainArgs {
  std::string data, config, out, metrics, utilities;
};

int cmd_train(const TrainArgs& args) {
  evd::TrainSpec spec;
  if (!args.config.empty()) {
    spec = evd::train_spec_from_json(read_text_file(args.config));
  }
  spec.config.validate();

  evd::Dataset data = evd::read_dataset_csv_file(args.data);
  evd::Model model;
  model.frame = data.frame;
  model.config = spec.config;

  if (spec.has_net && !spec.net.layers.empty()) {
    if (spec.net.input_shape.empty()) {
      throw std::invalid_argument("net block needs an input_shape");
    }
    model.net = spec.net;
    if (model.net.input_dim() != data.dim) {
      throw evd::ShapeMismatch("net input shape does not match data width");
    }
  } else {
    model.net.input_shape = {data.dim};
  }
  evd::Rng rng(spec.config.seed);
  evd::init_net_params(model.net, rng);

  // Prototypes are initialized in the feature space of the fresh net.
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.is_outlier(i)) continue;
    evd::Tensor input{model.net.input_shape, data.rows[i]};
    features.push_back(evd::net_forward(input, model.net).first);
    labels.push_back(data.labels[i]);
  }
  model.bank = evd::init_prototypes(features, labels, model.frame,
                                    spec.config.prototypes_per_class,
                                    spec.config.seed);

  const auto original = load_original_utilities(args.utilities, *model.frame);
  const evd::TrainResult result =
      evd::train(data, model.net, model.bank, original, spec.config);

  evd::save_model(model, args.out);
  if (!args.metrics.empty()) {
    std::ofstream out(args.metrics);
    if (!out) {
      throw std::invalid_argument("cannot open metrics file: " + args.metrics);
    }
    evd::write_metrics_csv(result, out);
  }
  const evd::EpochMetrics& last = result.epochs.back();
  std::printf("trained %zu epochs: train_loss %.6f train_acc %.4f "
              "val_loss %.6f val_acc %.4f\n",
              result.epochs.size(), last.train_loss, last.train_acc,
              last.val_loss, last.val_acc);
  return 0;
}

struct EvalArgs {
  std::string data, model, acts_mode = "all", acts_file, utilities;
  std::string out, csv, export_utilities;
  double gamma = -1.0, nu = -1.0;
};

int cmd_eval(const EvalArgs& args) {
  const evd::Model model = evd::load_model(args.model);
  const double gamma = args.gamma >= 0.0 ? args.gamma : model.config.gamma;
  const double nu = args.nu >= 0.0 ? args.nu : model.config.nu;

  const evd::Dataset data =
      evd::read_dataset_csv_file(args.data, model.frame);
  const auto catalog = catalog_from_flags(model, args.acts_mode, args.acts_file);
  const auto original = load_original_utilities(args.utilities, *model.frame);
  const auto eum = evd::extend_utility_matrix(original, catalog, gamma);

  if (!args.export_utilities.empty()) {
    std::ofstream out(args.export_utilities);
    if (!out) {
      throw std::invalid_argument("cannot open utilities output: " +
                                  args.export_utilities);
    }
    evd::write_utilities_csv(eum, out);
  }

  const auto decisions = evd::decide_batch(model, eum, nu, data.rows);
  const evd::EvalReport report =
      evd::evaluate_decisions(decisions, data.labels, eum);

  const std::string text = report_to_json(report, gamma, nu).dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
  } else {
    write_text_file(args.out, text);
  }
  if (!args.csv.empty()) {
    write_text_file(args.csv, report_csv_row(report, gamma, nu, true));
  }
  return 0;
}

struct DecideArgs {
  std::string model, features, acts_mode = "all", acts_file, utilities, out;
  double gamma = -1.0, nu = -1.0;
};

int cmd_decide(const DecideArgs& args) {
  const evd::Model model = evd::load_model(args.model);
  const double gamma = args.gamma >= 0.0 ? args.gamma : model.config.gamma;
  const double nu = args.nu >= 0.0 ? args.nu : model.config.nu;

  const std::vector<double> row = parse_double_list(args.features);
  if (row.size() != model.net.input_dim()) {
    throw evd::ShapeMismatch("feature vector width does not match the model");
  }

  const auto catalog = catalog_from_flags(model, args.acts_mode, args.acts_file);
  const auto original = load_original_utilities(args.utilities, *model.frame);
  const auto eum = evd::extend_utility_matrix(original, catalog, gamma);

  const evd::MassVector mass = evd::predict_mass(model, row);
  const evd::ExpectedUtilityVector eu = evd::expected_utilities(mass, eum, nu);
  const evd::Decision decision = evd::decide(eu);

  if (!args.out.empty()) {
    std::ofstream out(args.out);
    if (!out) throw std::invalid_argument("cannot open output: " + args.out);
    evd::write_expected_utilities_csv(eu, out);
  } else {
    evd::write_expected_utilities_csv(eu, std::cout);
  }
  std::printf("decision: %s (expected utility %.6f)\n",
              model.frame->subset_name(decision.act.members).c_str(),
              decision.expected_utility);
  return 0;
}

struct SelectActsArgs {
  std::string model, data, linkage = "ward", out, dendrogram, update_model;
  double nu = -1.0;
};

int cmd_select_acts(const SelectActsArgs& args) {
  evd::Model model = evd::load_model(args.model);
  const double nu = args.nu >= 0.0 ? args.nu : model.config.nu;
  const evd::Dataset data =
      evd::read_dataset_csv_file(args.data, model.frame);

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.is_outlier(i)) continue;
    rows.push_back(data.rows[i]);
    labels.push_back(data.labels[i]);
  }
  const auto masses = evd::predict_mass_batch(model.net, model.bank, rows);
  const auto original = evd::identity_utilities(model.frame->size());
  const auto decisions = precise_decisions(masses, original, nu);

  const evd::ConfusionMatrix cm =
      evd::confusion_matrix(decisions, labels, model.frame);
  const auto features = evd::normalize_columns(cm);
  const evd::LinkageTree tree =
      evd::hac(features, evd::linkage_from_name(args.linkage));
  const std::vector<evd::Act> acts = evd::select_acts(tree, features);

  json out = json::array();
  for (const evd::Act& act : acts) {
    json names = json::array();
    for (std::size_t j = 0; j < model.frame->size(); ++j) {
      if (act.contains(j)) names.push_back(model.frame->label(j));
    }
    out.push_back(names);
  }
  write_text_file(args.out, out.dump(2) + "\n");

  if (!args.dendrogram.empty()) {
    std::ofstream dout(args.dendrogram);
    if (!dout) {
      throw std::invalid_argument("cannot open dendrogram output: " +
                                  args.dendrogram);
    }
    evd::write_dendrogram_csv(tree, dout);
  }
  if (!args.update_model.empty()) {
    model.selected_acts = acts;
    evd::save_model(model, args.update_model);
  }
  std::printf("selected %zu multi-class acts\n", acts.size());
  return 0;
}

int cmd_owa(std::size_t cardinality, double gamma) {
  const evd::OwaWeights w = evd::meowa_weights(cardinality, gamma);
  for (std::size_t k = 0; k < w.weights.size(); ++k) {
    std::printf(k + 1 == w.weights.size() ? "%.4f\n" : "%.4f ", w.weights[k]);
  }
  return 0;
}

struct SynthArgs {
  std::size_t classes = 3, per_class = 100, dims = 2, outliers = 0;
  double sep = 4.0, stddev = 1.0;
  std::uint64_t seed = 0;
  std::string out;
};

int cmd_synth(const SynthArgs& args) {
  const evd::Dataset data =
      evd::make_blobs(args.classes, args.per_class, args.dims, args.sep,
                      args.stddev, args.outliers, args.seed);
  evd::write_dataset_csv_file(data, args.out);
  return 0;
}

struct GradcheckArgs {
  std::string model, data;
  std::size_t samples = 10;
  double step = 1e-6, tol = 1e-4, nu = -1.0;
};

int cmd_gradcheck(const GradcheckArgs& args) {
  const evd::Model model = evd::load_model(args.model);
  const double nu = args.nu >= 0.0 ? args.nu : model.config.nu;
  evd::Dataset data = evd::read_dataset_csv_file(args.data, model.frame);
  if (data.size() > args.samples) {
    data.rows.resize(args.samples);
    data.labels.resize(args.samples);
  }
  const auto original = evd::identity_utilities(model.frame->size());
  const evd::GradCheckReport report = evd::gradient_check(
      model.net, model.bank, original, nu, model.config.log_epsilon, data,
      args.step, args.tol);
  std::printf("gradient check over %zu parameters: max relative error %.3e "
              "(worst %s) -> %s\n",
              report.parameters, report.max_rel_error,
              report.worst_parameter.c_str(), report.pass ? "PASS" : "FAIL");
  if (!report.pass) {
    throw evd::DivergenceDetected("analytic gradients disagree with finite "
                                  "differences");
  }
  return 0;
}

struct SweepArgs {
  std::string model, data, gammas, nus, acts_mode = "all", acts_file;
  std::string utilities, out;
};

int cmd_sweep(const SweepArgs& args) {
  const evd::Model model = evd::load_model(args.model);
  const evd::Dataset data =
      evd::read_dataset_csv_file(args.data, model.frame);
  const auto catalog = catalog_from_flags(model, args.acts_mode, args.acts_file);
  const auto original = load_original_utilities(args.utilities, *model.frame);
  const std::vector<double> gammas = parse_double_list(args.gammas);
  const std::vector<double> nus = parse_double_list(args.nus);

  // Masses do not depend on gamma or nu: compute once.
  const auto masses =
      evd::predict_mass_batch(model.net, model.bank, data.rows);

  std::string csv;
  bool header = true;
  for (const double gamma : gammas) {
    const auto eum = evd::extend_utility_matrix(original, catalog, gamma);
    for (const double nu : nus) {
      std::vector<evd::Decision> decisions;
      decisions.reserve(masses.size());
      for (const evd::MassVector& m : masses) {
        decisions.push_back(evd::decide(evd::expected_utilities(m, eum, nu)));
      }
      const evd::EvalReport report =
          evd::evaluate_decisions(decisions, data.labels, eum);
      csv += report_csv_row(report, gamma, nu, header);
      header = false;
    }
  }
  if (args.out.empty()) {
    std::cout << csv;
  } else {
    write_text_file(args.out, csv);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evidential deep-learning classifier"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train = app.add_subcommand("train", "train a model on a CSV dataset");
  train->add_option("--data", train_args.data, "training CSV")->required();
  train->add_option("--config", train_args.config, "training config JSON");
  train->add_option("--out", train_args.out, "output model JSON")->required();
  train->add_option("--metrics", train_args.metrics, "per-epoch metrics CSV");
  train->add_option("--utilities", train_args.utilities,
                    "original utility matrix CSV (default identity)");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "evaluate a model on a CSV dataset");
  eval->add_option("--data", eval_args.data)->required();
  eval->add_option("--model", eval_args.model)->required();
  eval->add_option("--gamma", eval_args.gamma,
                   "imprecision tolerance in [0.5,1] (default: model config)");
  eval->add_option("--nu", eval_args.nu,
                   "pessimism index in [0,1] (default: model config)");
  eval->add_option("--acts", eval_args.acts_mode, "all | selected | file");
  eval->add_option("--acts-file", eval_args.acts_file, "acts JSON for --acts file");
  eval->add_option("--utilities", eval_args.utilities);
  eval->add_option("--out", eval_args.out, "report JSON (default stdout)");
  eval->add_option("--csv", eval_args.csv, "flat CSV row for sweep aggregation");
  eval->add_option("--export-utilities", eval_args.export_utilities,
                   "write the extended utility matrix CSV");

  DecideArgs decide_args;
  auto* decide = app.add_subcommand("decide", "classify one feature vector");
  decide->add_option("--model", decide_args.model)->required();
  decide->add_option("--features", decide_args.features,
                     "comma-separated feature values")->required();
  decide->add_option("--gamma", decide_args.gamma);
  decide->add_option("--nu", decide_args.nu);
  decide->add_option("--acts", decide_args.acts_mode);
  decide->add_option("--acts-file", decide_args.acts_file);
  decide->add_option("--utilities", decide_args.utilities);
  decide->add_option("--out", decide_args.out, "expected-utility CSV");

  SelectActsArgs select_args;
  auto* select = app.add_subcommand(
      "select-acts", "derive multi-class acts from the confusion structure");
  select->alias("select_acts");
  select->add_option("--model", select_args.model)->required();
  select->add_option("--data", select_args.data)->required();
  select->add_option("--linkage", select_args.linkage,
                     "single | complete | average | ward");
  select->add_option("--nu", select_args.nu);
  select->add_option("--out", select_args.out, "acts JSON")->required();
  select->add_option("--dendrogram", select_args.dendrogram,
                     "merge table CSV");
  select->add_option("--update-model", select_args.update_model,
                     "write a model copy embedding the selected acts");

  std::size_t owa_cardinality = 0;
  double owa_gamma = 0.0;
  auto* owa = app.add_subcommand("owa", "print max-entropy OWA weights");
  owa->add_option("--cardinality", owa_cardinality)->required();
  owa->add_option("--gamma", owa_gamma)->required();

  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "generate Gaussian blob data");
  synth->add_option("--classes", synth_args.classes);
  synth->add_option("--per-class", synth_args.per_class);
  synth->add_option("--dims", synth_args.dims);
  synth->add_option("--sep", synth_args.sep,
                    "adjacent-mean separation in stddev units");
  synth->add_option("--std", synth_args.stddev);
  synth->add_option("--outliers", synth_args.outliers);
  synth->add_option("--seed", synth_args.seed);
  synth->add_option("--out", synth_args.out)->required();

  GradcheckArgs grad_args;
  auto* gradcheck = app.add_subcommand(
      "gradcheck", "finite-difference check of the analytic gradients");
  gradcheck->add_option("--model", grad_args.model)->required();
  gradcheck->add_option("--data", grad_args.data)->required();
  gradcheck->add_option("--samples", grad_args.samples);
  gradcheck->add_option("--step", grad_args.step);
  gradcheck->add_option("--tol", grad_args.tol);
  gradcheck->add_option("--nu", grad_args.nu);

  SweepArgs sweep_args;
  auto* sweep = app.add_subcommand("sweep", "gamma/nu metric grid as CSV");
  sweep->add_option("--model", sweep_args.model)->required();
  sweep->add_option("--data", sweep_args.data)->required();
  sweep->add_option("--gammas", sweep_args.gammas, "comma-separated")->required();
  sweep->add_option("--nus", sweep_args.nus, "comma-separated")->required();
  sweep->add_option("--acts", sweep_args.acts_mode);
  sweep->add_option("--acts-file", sweep_args.acts_file);
  sweep->add_option("--utilities", sweep_args.utilities);
  sweep->add_option("--out", sweep_args.out, "CSV output (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*train) return cmd_train(train_args);
    if (*eval) return cmd_eval(eval_args);
    if (*decide) return cmd_decide(decide_args);
    if (*select) return cmd_select_acts(select_args);
    if (*owa) return cmd_owa(owa_cardinality, owa_gamma);
    if (*synth) return cmd_synth(synth_args);
    if (*gradcheck) return cmd_gradcheck(grad_args);
    if (*sweep) return cmd_sweep(sweep_args);
  } catch (const evd::DivergenceDetected& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const evd::TotalConflict& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const evd::DegenerateNormalizer& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}
