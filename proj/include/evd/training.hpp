#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evd/dataset.hpp"
#include "evd/ds_layer.hpp"
#include "evd/feature_net.hpp"
#include "evd/utility.hpp"

namespace evd {

struct TrainingConfig {
  double learning_rate = 0.1;
  std::size_t epochs = 50;
  std::size_t batch_size = 1;
  std::size_t prototypes_per_class = 2;
  std::uint64_t seed = 0;
  double nu = 0.5;
  double gamma = 0.8;
  double log_epsilon = 1e-7;  // clamp for log arguments
  double validation_fraction = 0.2;

  void validate() const;  // throws std::invalid_argument
};

// Binary cross-entropy over the singleton expected utilities (natural
// log), with arguments clamped to [log_epsilon, 1 - log_epsilon].
double loss(std::span<const double> eu_singletons, std::size_t target,
            double log_epsilon);

// dL/dE_k = -y_k / E_k + (1 - y_k) / (1 - E_k), clamped arguments.
std::vector<double> loss_grad(std::span<const double> eu_singletons,
                              std::size_t target, double log_epsilon);

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
};

struct TrainResult {
  std::vector<EpochMetrics> epochs;
};

// Minibatch SGD over the composed pipeline
//   net_forward -> ds_forward -> singleton expected utilities -> loss,
// deterministic given the seed (sequential, fixed accumulation order).
// Outlier rows are excluded. Throws DivergenceDetected when the loss stops
// being finite.
TrainResult train(const Dataset& data, FeatureNet& net, PrototypeBank& bank,
                  std::span<const double> original_utilities,
                  const TrainingConfig& config);

void write_metrics_csv(const TrainResult& result, std::ostream& out);

// Returns the grid nu maximizing averaged utility on the labeled part of
// the validation data; exact ties go to the smaller nu.
double tune_nu(const FeatureNet& net, const PrototypeBank& bank,
               const ExtendedUtilityMatrix& eum, const Dataset& validation,
               std::span<const double> nu_grid);

std::vector<double> default_nu_grid();  // 0, 0.1, ..., 1

// Relative error with a floor so that near-zero pairs compare absolutely.
inline double relative_error(double a, double b) {
  const double scale = std::max({std::abs(a), std::abs(b), 1e-4});
  return std::abs(a - b) / scale;
}

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters = 0;
  bool pass = false;
};

// Central finite differences over every learnable parameter of (net, bank)
// against the analytic backward pass, summed over the labeled samples.
GradCheckReport gradient_check(FeatureNet net, PrototypeBank bank,
                               std::span<const double> original_utilities,
                               double nu, double log_epsilon,
                               const Dataset& samples, double step = 1e-6,
                               double tolerance = 1e-4);

}  // namespace evd
