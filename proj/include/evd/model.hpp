#pragma once

#include <optional>
#include <vector>

#include "evd/ds_layer.hpp"
#include "evd/feature_net.hpp"
#include "evd/training.hpp"
#include "evd/utility.hpp"

namespace evd {

// A trained classifier: feature extractor + DS layer parameters, plus the
// training configuration echo and the optional act catalog selection.
struct Model {
  FramePtr frame;
  FeatureNet net;
  PrototypeBank bank;
  TrainingConfig config;
  std::optional<std::vector<Act>> selected_acts;
};

// Pushes one raw feature row through net and DS layer.
MassVector predict_mass(const FeatureNet& net, const PrototypeBank& bank,
                        const std::vector<double>& row);

inline MassVector predict_mass(const Model& model,
                               const std::vector<double>& row) {
  return predict_mass(model.net, model.bank, row);
}

}  // namespace evd
