#include "evd/feature_net.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "evd/errors.hpp"

namespace evd {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  const std::size_t n = shape_product(shape);
  return Tensor{std::move(shape), std::vector<double>(n, 0.0)};
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::Identity;
  if (name == "relu") return Activation::Relu;
  if (name == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + name);
}

std::string activation_name(Activation a) {
  switch (a) {
    case Activation::Identity: return "identity";
    case Activation::Relu: return "relu";
    case Activation::Tanh: return "tanh";
  }
  throw std::invalid_argument("bad activation enum");
}

namespace {

double apply_activation(Activation a, double v) {
  switch (a) {
    case Activation::Identity: return v;
    case Activation::Relu: return v > 0.0 ? v : 0.0;
    case Activation::Tanh: return std::tanh(v);
  }
  return v;
}

// Derivative expressed through the activation output.
double activation_derivative(Activation a, double out) {
  switch (a) {
    case Activation::Identity: return 1.0;
    case Activation::Relu: return out > 0.0 ? 1.0 : 0.0;
    case Activation::Tanh: return 1.0 - out * out;
  }
  return 1.0;
}

struct Spatial {
  std::size_t h, w, c;
};

Spatial spatial_shape(const Tensor& t) {
  if (t.shape.size() == 3) return {t.shape[0], t.shape[1], t.shape[2]};
  if (t.shape.size() == 2) return {t.shape[0], t.shape[1], 1};
  throw ShapeMismatch("spatial layer needs an H x W (x C) tensor");
}

}  // namespace

Tensor conv_forward(const Tensor& input, const ConvLayer& layer) {
  const Spatial in = spatial_shape(input);
  if (in.c != layer.in_channels) {
    throw ShapeMismatch("conv input channels mismatch");
  }
  if (in.h < layer.kernel_h || in.w < layer.kernel_w) {
    throw ShapeMismatch("conv kernel larger than input");
  }
  const std::size_t out_h = (in.h - layer.kernel_h) / layer.stride + 1;
  const std::size_t out_w = (in.w - layer.kernel_w) / layer.stride + 1;
  Tensor out = Tensor::zeros({out_h, out_w, layer.out_channels});

  for (std::size_t oh = 0; oh < out_h; ++oh) {
    for (std::size_t ow = 0; ow < out_w; ++ow) {
      for (std::size_t j = 0; j < layer.out_channels; ++j) {
        double acc = layer.bias[j];
        for (std::size_t dy = 0; dy < layer.kernel_h; ++dy) {
          for (std::size_t dx = 0; dx < layer.kernel_w; ++dx) {
            const std::size_t ih = oh * layer.stride + dy;
            const std::size_t iw = ow * layer.stride + dx;
            for (std::size_t i = 0; i < layer.in_channels; ++i) {
              acc += layer.weight(dy, dx, i, j) *
                     input.data[(ih * in.w + iw) * in.c + i];
            }
          }
        }
        out.data[(oh * out_w + ow) * layer.out_channels + j] =
            apply_activation(layer.activation, acc);
      }
    }
  }
  return out;
}

namespace {

std::vector<std::size_t> pool_forward_impl(const Tensor& input,
                                           const PoolLayer& layer,
                                           Tensor& out) {
  const Spatial in = spatial_shape(input);
  const std::size_t s = layer.window;
  if (s == 0 || in.h % s != 0 || in.w % s != 0) {
    throw ShapeMismatch("pool window must divide the spatial dimensions");
  }
  if (layer.weights.size() != s * s) {
    throw ShapeMismatch("pool weight vector must have window^2 entries");
  }
  const std::size_t out_h = in.h / s;
  const std::size_t out_w = in.w / s;
  out = Tensor::zeros({out_h, out_w, in.c});

  std::vector<std::size_t> order(out.size() * s * s);
  std::vector<std::size_t> window(s * s);
  for (std::size_t oh = 0; oh < out_h; ++oh) {
    for (std::size_t ow = 0; ow < out_w; ++ow) {
      for (std::size_t c = 0; c < in.c; ++c) {
        for (std::size_t dy = 0; dy < s; ++dy) {
          for (std::size_t dx = 0; dx < s; ++dx) {
            window[dy * s + dx] =
                ((oh * s + dy) * in.w + (ow * s + dx)) * in.c + c;
          }
        }
        // Descending by value; ties by source index so the order (and the
        // backward routing) is deterministic.
        std::stable_sort(window.begin(), window.end(),
                         [&](std::size_t a, std::size_t b) {
                           return input.data[a] > input.data[b];
                         });
        const std::size_t out_idx = (oh * out_w + ow) * in.c + c;
        double acc = 0.0;
        for (std::size_t k = 0; k < s * s; ++k) {
          acc += layer.weights[k] * input.data[window[k]];
          order[out_idx * s * s + k] = window[k];
        }
        out.data[out_idx] = acc;
      }
    }
  }
  return order;
}

}  // namespace

Tensor pool_forward(const Tensor& input, const PoolLayer& layer) {
  Tensor out;
  pool_forward_impl(input, layer, out);
  return out;
}

Tensor dense_forward(const Tensor& input, const DenseLayer& layer) {
  if (input.size() != layer.in) {
    throw ShapeMismatch("dense input size mismatch");
  }
  Tensor out = Tensor::zeros({layer.out});
  for (std::size_t o = 0; o < layer.out; ++o) {
    double acc = layer.bias[o];
    for (std::size_t i = 0; i < layer.in; ++i) {
      acc += layer.weights[o * layer.in + i] * input.data[i];
    }
    out.data[o] = apply_activation(layer.activation, acc);
  }
  return out;
}

std::size_t FeatureNet::output_dim() const {
  Tensor probe = Tensor::zeros(input_shape);
  for (const Layer& layer : layers) {
    probe = std::visit(
        [&](const auto& l) -> Tensor {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DenseLayer>) {
            return dense_forward(probe, l);
          } else if constexpr (std::is_same_v<T, ConvLayer>) {
            return conv_forward(probe, l);
          } else {
            return pool_forward(probe, l);
          }
        },
        layer);
  }
  return probe.size();
}

std::pair<std::vector<double>, NetTrace> net_forward(const Tensor& input,
                                                     const FeatureNet& net) {
  if (input.size() != net.input_dim()) {
    throw ShapeMismatch("net input size mismatch");
  }
  NetTrace trace;
  trace.values.reserve(net.layers.size() + 1);
  trace.values.push_back(input);
  trace.values.front().shape = net.input_shape;

  for (const Layer& layer : net.layers) {
    const Tensor& prev = trace.values.back();
    if (std::holds_alternative<DenseLayer>(layer)) {
      trace.values.push_back(dense_forward(prev, std::get<DenseLayer>(layer)));
    } else if (std::holds_alternative<ConvLayer>(layer)) {
      trace.values.push_back(conv_forward(prev, std::get<ConvLayer>(layer)));
    } else {
      Tensor out;
      trace.pool_order.push_back(
          pool_forward_impl(prev, std::get<PoolLayer>(layer), out));
      trace.values.push_back(std::move(out));
    }
  }
  return {trace.values.back().data, std::move(trace)};
}

std::vector<double> net_apply(const Tensor& input, const FeatureNet& net) {
  if (input.size() != net.input_dim()) {
    throw ShapeMismatch("net input size mismatch");
  }
  if (net.layers.empty()) return input.data;
  Tensor current = input;
  current.shape = net.input_shape;
  for (const Layer& layer : net.layers) {
    current = std::visit(
        [&](const auto& l) -> Tensor {
          using T = std::decay_t<decltype(l)>;
          if constexpr (std::is_same_v<T, DenseLayer>) {
            return dense_forward(current, l);
          } else if constexpr (std::is_same_v<T, ConvLayer>) {
            return conv_forward(current, l);
          } else {
            return pool_forward(current, l);
          }
        },
        layer);
  }
  return std::move(current.data);
}

NetGradients net_backward(const NetTrace& trace, const FeatureNet& net,
                          std::span<const double> dL_dfeatures) {
  if (trace.values.size() != net.layers.size() + 1) {
    throw ShapeMismatch("trace does not match the network");
  }
  if (dL_dfeatures.size() != trace.values.back().size()) {
    throw ShapeMismatch("feature gradient size mismatch");
  }

  NetGradients grads;
  grads.layers.resize(net.layers.size());

  std::vector<double> downstream(dL_dfeatures.begin(), dL_dfeatures.end());
  std::size_t pool_index = trace.pool_order.size();

  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Tensor& in = trace.values[li];
    const Tensor& out = trace.values[li + 1];
    std::vector<double> upstream(in.size(), 0.0);

    if (const auto* dense = std::get_if<DenseLayer>(&net.layers[li])) {
      LayerGradients& g = grads.layers[li];
      g.weights.assign(dense->weights.size(), 0.0);
      g.bias.assign(dense->bias.size(), 0.0);
      for (std::size_t o = 0; o < dense->out; ++o) {
        const double dpre = downstream[o] *
            activation_derivative(dense->activation, out.data[o]);
        g.bias[o] = dpre;
        for (std::size_t i = 0; i < dense->in; ++i) {
          g.weights[o * dense->in + i] = dpre * in.data[i];
          upstream[i] += dpre * dense->weights[o * dense->in + i];
        }
      }
    } else if (const auto* conv = std::get_if<ConvLayer>(&net.layers[li])) {
      LayerGradients& g = grads.layers[li];
      g.weights.assign(conv->weights.size(), 0.0);
      g.bias.assign(conv->bias.size(), 0.0);
      const Spatial is = spatial_shape(in);
      const std::size_t out_h = out.shape[0];
      const std::size_t out_w = out.shape[1];
      for (std::size_t oh = 0; oh < out_h; ++oh) {
        for (std::size_t ow = 0; ow < out_w; ++ow) {
          for (std::size_t j = 0; j < conv->out_channels; ++j) {
            const std::size_t oi = (oh * out_w + ow) * conv->out_channels + j;
            const double dpre = downstream[oi] *
                activation_derivative(conv->activation, out.data[oi]);
            g.bias[j] += dpre;
            for (std::size_t dy = 0; dy < conv->kernel_h; ++dy) {
              for (std::size_t dx = 0; dx < conv->kernel_w; ++dx) {
                const std::size_t ih = oh * conv->stride + dy;
                const std::size_t iw = ow * conv->stride + dx;
                for (std::size_t i = 0; i < conv->in_channels; ++i) {
                  const std::size_t ii = (ih * is.w + iw) * is.c + i;
                  g.weights[((dy * conv->kernel_w + dx) * conv->in_channels + i) *
                            conv->out_channels + j] += dpre * in.data[ii];
                  upstream[ii] += dpre * conv->weight(dy, dx, i, j);
                }
              }
            }
          }
        }
      }
    } else {
      const auto& pool = std::get<PoolLayer>(net.layers[li]);
      --pool_index;
      const auto& order = trace.pool_order[pool_index];
      const std::size_t win = pool.window * pool.window;
      for (std::size_t oi = 0; oi < out.size(); ++oi) {
        for (std::size_t k = 0; k < win; ++k) {
          upstream[order[oi * win + k]] += downstream[oi] * pool.weights[k];
        }
      }
    }
    downstream = std::move(upstream);
  }
  return grads;
}

void init_net_params(FeatureNet& net, Rng& rng) {
  for (Layer& layer : net.layers) {
    if (auto* dense = std::get_if<DenseLayer>(&layer)) {
      const double bound = std::sqrt(6.0 / static_cast<double>(dense->in + dense->out));
      dense->weights.resize(dense->in * dense->out);
      dense->bias.assign(dense->out, 0.0);
      for (double& w : dense->weights) w = (2.0 * rng.uniform() - 1.0) * bound;
    } else if (auto* conv = std::get_if<ConvLayer>(&layer)) {
      const std::size_t fan_in = conv->kernel_h * conv->kernel_w * conv->in_channels;
      const std::size_t fan_out = conv->kernel_h * conv->kernel_w * conv->out_channels;
      const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
      conv->weights.resize(fan_in * conv->out_channels);
      conv->bias.assign(conv->out_channels, 0.0);
      for (double& w : conv->weights) w = (2.0 * rng.uniform() - 1.0) * bound;
    }
  }
}

}  // namespace evd
