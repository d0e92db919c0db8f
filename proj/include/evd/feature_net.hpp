#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "evd/rng.hpp"

namespace evd {

// Row-major dense tensor. Spatial tensors are laid out H x W x C with
// index (h * W + w) * C + c.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  static Tensor zeros(std::vector<std::size_t> shape);
  std::size_t size() const { return data.size(); }
};

std::size_t shape_product(const std::vector<std::size_t>& shape);

enum class Activation { Identity, Relu, Tanh };

Activation activation_from_name(const std::string& name);
std::string activation_name(Activation a);

struct DenseLayer {
  std::size_t in = 0, out = 0;
  std::vector<double> weights;  // out x in
  std::vector<double> bias;     // out
  Activation activation = Activation::Identity;
};

// Valid padding; output spatial size floor((H-a)/r)+1 x floor((W-b)/r)+1.
struct ConvLayer {
  std::size_t kernel_h = 1, kernel_w = 1;
  std::size_t in_channels = 1, out_channels = 1;
  std::size_t stride = 1;
  std::vector<double> weights;  // kernel_h x kernel_w x in_ch x out_ch
  std::vector<double> bias;     // out_ch
  Activation activation = Activation::Identity;

  double weight(std::size_t dy, std::size_t dx, std::size_t i,
                std::size_t j) const {
    return weights[((dy * kernel_w + dx) * in_channels + i) * out_channels + j];
  }
};

// Non-overlapping window pooling: each output is the dot product of the
// fixed weight vector with the window values sorted in descending order.
// (1,0,...,0) is max pooling, uniform weights mean pooling.
struct PoolLayer {
  std::size_t window = 2;
  std::vector<double> weights;  // window * window
};

using Layer = std::variant<DenseLayer, ConvLayer, PoolLayer>;

// Feature extractor in front of the DS layer. An empty layer list is the
// pass-through mode for precomputed feature vectors.
struct FeatureNet {
  std::vector<std::size_t> input_shape;
  std::vector<Layer> layers;

  std::size_t input_dim() const { return shape_product(input_shape); }
  // Flattened output length; throws ShapeMismatch if the layers do not
  // compose over input_shape.
  std::size_t output_dim() const;
};

struct NetTrace {
  std::vector<Tensor> values;  // values[0] = input, values[i+1] = layer i out
  // For each pool layer instance: source flat index of each sorted slot.
  std::vector<std::vector<std::size_t>> pool_order;
};

struct LayerGradients {
  std::vector<double> weights;
  std::vector<double> bias;
};

struct NetGradients {
  std::vector<LayerGradients> layers;
};

Tensor conv_forward(const Tensor& input, const ConvLayer& layer);
Tensor pool_forward(const Tensor& input, const PoolLayer& layer);
Tensor dense_forward(const Tensor& input, const DenseLayer& layer);

std::pair<std::vector<double>, NetTrace> net_forward(const Tensor& input,
                                                     const FeatureNet& net);

// Forward pass without retaining the trace, for batch inference.
std::vector<double> net_apply(const Tensor& input, const FeatureNet& net);

// Parameter gradients for every layer, consuming dL/dfeatures from the DS
// layer. Nothing is propagated upstream of the input.
NetGradients net_backward(const NetTrace& trace, const FeatureNet& net,
                          std::span<const double> dL_dfeatures);

// Glorot-uniform weight init, biases zero, seeded.
void init_net_params(FeatureNet& net, Rng& rng);

}  // namespace evd
