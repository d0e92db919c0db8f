// Compares the serial reference batch kernels against the OpenMP versions
// on synthetic data and verifies they produce identical decisions.
//
//   EVD_THREADS=4 ./evd_bench --samples 20000 --classes 5 --dims 16

#include <chrono>
#include <cstdio>
#include <string>

#include <CLI11.hpp>

#include "evd/batch.hpp"
#include "evd/dataset.hpp"
#include "evd/ds_layer.hpp"
#include "evd/utility.hpp"

namespace {

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"batch inference benchmark: serial reference vs OpenMP"};
  std::size_t samples = 20000, classes = 5, dims = 16, per_class = 4;
  std::uint64_t seed = 1;
  double gamma = 0.8, nu = 0.5;
  app.add_option("--samples", samples);
  app.add_option("--classes", classes);
  app.add_option("--dims", dims);
  app.add_option("--prototypes-per-class", per_class);
  app.add_option("--seed", seed);
  app.add_option("--gamma", gamma);
  app.add_option("--nu", nu);
  CLI11_PARSE(app, argc, argv);

  const evd::Dataset data = evd::make_blobs(
      classes, samples / classes, dims, 3.0, 1.0, /*outliers=*/0, seed);

  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  for (std::size_t i = 0; i < data.size(); ++i) {
    features.push_back(data.rows[i]);
    labels.push_back(data.labels[i]);
  }
  const evd::PrototypeBank bank =
      evd::init_prototypes(features, labels, data.frame, per_class, seed);
  evd::FeatureNet net;
  net.input_shape = {dims};

  const auto eum = evd::extend_utility_matrix(
      evd::identity_utilities(classes), evd::build_full_catalog(data.frame),
      gamma);

  auto start = std::chrono::steady_clock::now();
  const auto serial = evd::decide_batch_serial(net, bank, eum, nu, data.rows);
  const double serial_time = seconds_since(start);

  start = std::chrono::steady_clock::now();
  const auto parallel = evd::decide_batch(net, bank, eum, nu, data.rows);
  const double parallel_time = seconds_since(start);

  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < serial.size(); ++i) {
    if (!(serial[i].act == parallel[i].act)) ++mismatches;
  }

  std::printf("samples %zu  classes %zu  dims %zu  prototypes %zu\n",
              data.size(), classes, dims, bank.count);
  std::printf("serial reference : %8.3f s  (%.0f samples/s)\n", serial_time,
              static_cast<double>(data.size()) / serial_time);
  std::printf("EVD_THREADS=%-4d : %8.3f s  (%.0f samples/s, speedup %.2fx)\n",
              evd::batch_threads(), parallel_time,
              static_cast<double>(data.size()) / parallel_time,
              serial_time / parallel_time);
  std::printf("decision mismatches: %zu\n", mismatches);
  return mismatches == 0 ? 0 : 1;
}
