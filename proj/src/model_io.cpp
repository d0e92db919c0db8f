#include "evd/model_io.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace evd {

namespace {

using nlohmann::json;

json layer_to_json(const Layer& layer) {
  json out;
  if (const auto* dense = std::get_if<DenseLayer>(&layer)) {
    out["type"] = "dense";
    out["in"] = dense->in;
    out["out"] = dense->out;
    out["activation"] = activation_name(dense->activation);
    out["weights"] = dense->weights;
    out["bias"] = dense->bias;
  } else if (const auto* conv = std::get_if<ConvLayer>(&layer)) {
    out["type"] = "conv";
    out["kernel_h"] = conv->kernel_h;
    out["kernel_w"] = conv->kernel_w;
    out["in_channels"] = conv->in_channels;
    out["out_channels"] = conv->out_channels;
    out["stride"] = conv->stride;
    out["activation"] = activation_name(conv->activation);
    out["weights"] = conv->weights;
    out["bias"] = conv->bias;
  } else {
    const auto& pool = std::get<PoolLayer>(layer);
    out["type"] = "pool";
    out["window"] = pool.window;
    out["weights"] = pool.weights;
  }
  return out;
}

Layer layer_from_json(const json& in) {
  const std::string type = in.at("type").get<std::string>();
  if (type == "dense") {
    DenseLayer dense;
    dense.in = in.at("in").get<std::size_t>();
    dense.out = in.at("out").get<std::size_t>();
    dense.activation =
        activation_from_name(in.at("activation").get<std::string>());
    dense.weights = in.value("weights", std::vector<double>{});
    dense.bias = in.value("bias", std::vector<double>{});
    return dense;
  }
  if (type == "conv") {
    ConvLayer conv;
    conv.kernel_h = in.at("kernel_h").get<std::size_t>();
    conv.kernel_w = in.at("kernel_w").get<std::size_t>();
    conv.in_channels = in.at("in_channels").get<std::size_t>();
    conv.out_channels = in.at("out_channels").get<std::size_t>();
    conv.stride = in.at("stride").get<std::size_t>();
    conv.activation =
        activation_from_name(in.at("activation").get<std::string>());
    conv.weights = in.value("weights", std::vector<double>{});
    conv.bias = in.value("bias", std::vector<double>{});
    return conv;
  }
  if (type == "pool") {
    PoolLayer pool;
    pool.window = in.at("window").get<std::size_t>();
    pool.weights = in.at("weights").get<std::vector<double>>();
    return pool;
  }
  throw std::invalid_argument("unknown layer type: " + type);
}

json net_to_json(const FeatureNet& net) {
  json out;
  out["input_shape"] = net.input_shape;
  out["layers"] = json::array();
  for (const Layer& layer : net.layers) {
    out["layers"].push_back(layer_to_json(layer));
  }
  return out;
}

FeatureNet net_from_json(const json& in) {
  FeatureNet net;
  net.input_shape = in.value("input_shape", std::vector<std::size_t>{});
  if (in.contains("layers")) {
    for (const json& layer : in.at("layers")) {
      net.layers.push_back(layer_from_json(layer));
    }
  }
  return net;
}

json config_to_json(const TrainingConfig& config) {
  json out;
  out["learning_rate"] = config.learning_rate;
  out["epochs"] = config.epochs;
  out["batch_size"] = config.batch_size;
  out["prototypes_per_class"] = config.prototypes_per_class;
  out["seed"] = config.seed;
  out["nu"] = config.nu;
  out["gamma"] = config.gamma;
  out["log_epsilon"] = config.log_epsilon;
  out["validation_fraction"] = config.validation_fraction;
  return out;
}

TrainingConfig config_from_json(const json& in) {
  TrainingConfig config;
  config.learning_rate = in.value("learning_rate", config.learning_rate);
  config.epochs = in.value("epochs", config.epochs);
  config.batch_size = in.value("batch_size", config.batch_size);
  config.prototypes_per_class =
      in.value("prototypes_per_class", config.prototypes_per_class);
  config.seed = in.value("seed", config.seed);
  config.nu = in.value("nu", config.nu);
  config.gamma = in.value("gamma", config.gamma);
  config.log_epsilon = in.value("log_epsilon", config.log_epsilon);
  config.validation_fraction =
      in.value("validation_fraction", config.validation_fraction);
  return config;
}

}  // namespace

std::string model_to_json(const Model& model) {
  json out;
  out["format_version"] = kModelFormatVersion;
  out["frame"] = model.frame->labels();
  out["net"] = net_to_json(model.net);
  json bank;
  bank["feature_dim"] = model.bank.feature_dim;
  bank["count"] = model.bank.count;
  bank["prototypes"] = model.bank.prototypes;
  bank["eta"] = model.bank.eta;
  bank["xi"] = model.bank.xi;
  bank["membership_logits"] = model.bank.membership_logits;
  out["bank"] = bank;
  out["training_config"] = config_to_json(model.config);
  if (model.selected_acts) {
    json acts = json::array();
    for (const Act& act : *model.selected_acts) {
      json names = json::array();
      for (std::size_t j = 0; j < model.frame->size(); ++j) {
        if (act.contains(j)) names.push_back(model.frame->label(j));
      }
      acts.push_back(names);
    }
    out["selected_acts"] = acts;
  }
  return out.dump(2) + "\n";
}

Model model_from_json(const std::string& text) {
  const json in = json::parse(text);
  const int version = in.at("format_version").get<int>();
  if (version != kModelFormatVersion) {
    throw std::invalid_argument("unsupported model format version " +
                                std::to_string(version));
  }
  Model model;
  model.frame = make_frame(in.at("frame").get<std::vector<std::string>>());
  model.net = net_from_json(in.at("net"));
  const json& bank = in.at("bank");
  model.bank.frame = model.frame;
  model.bank.feature_dim = bank.at("feature_dim").get<std::size_t>();
  model.bank.count = bank.at("count").get<std::size_t>();
  model.bank.prototypes = bank.at("prototypes").get<std::vector<double>>();
  model.bank.eta = bank.at("eta").get<std::vector<double>>();
  model.bank.xi = bank.at("xi").get<std::vector<double>>();
  model.bank.membership_logits =
      bank.at("membership_logits").get<std::vector<double>>();
  model.bank.check_shapes();
  model.config = config_from_json(in.at("training_config"));
  if (in.contains("selected_acts")) {
    std::vector<Act> acts;
    for (const json& names : in.at("selected_acts")) {
      SubsetMask mask = 0;
      for (const json& name : names) {
        mask |= singleton_mask(model.frame->index_of(name.get<std::string>()));
      }
      acts.push_back(Act{mask});
    }
    model.selected_acts = std::move(acts);
  }
  return model;
}

void save_model(const Model& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::invalid_argument("cannot open model file: " + path);
  out << model_to_json(model);
}

Model load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open model file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

TrainSpec train_spec_from_json(const std::string& text) {
  const json in = json::parse(text);
  TrainSpec spec;
  spec.config = config_from_json(in);
  if (in.contains("net")) {
    spec.net = net_from_json(in.at("net"));
    spec.has_net = true;
  }
  return spec;
}

}  // namespace evd
