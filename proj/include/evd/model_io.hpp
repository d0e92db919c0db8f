#pragma once

#include <string>

#include "evd/model.hpp"

namespace evd {

// Model file format version written by save_model.
inline constexpr int kModelFormatVersion = 1;

// JSON text of the model, stable across serialize -> parse -> serialize.
std::string model_to_json(const Model& model);
Model model_from_json(const std::string& text);

void save_model(const Model& model, const std::string& path);
Model load_model(const std::string& path);

// Training configs are embedded in model files and also read standalone
// from --config files (which may carry a "net" architecture block).
struct TrainSpec {
  TrainingConfig config;
  FeatureNet net;  // input_shape empty => pass-through over the data width
  bool has_net = false;
};

TrainSpec train_spec_from_json(const std::string& text);

}  // namespace evd
