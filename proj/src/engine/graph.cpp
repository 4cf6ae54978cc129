#include <cmath>
#include <string>

#include "pve/engine.hpp"
#include "pve/error.hpp"

namespace pve {

std::string_view to_string(LayerKind kind) noexcept {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::global_avg_pool: return "global_avg_pool";
    case LayerKind::dense: return "dense";
    case LayerKind::add_skip: return "add_skip";
    case LayerKind::sigmoid_output: return "sigmoid_output";
  }
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view name, std::size_t layer_index) {
  for (auto kind : {LayerKind::conv2d, LayerKind::relu, LayerKind::maxpool2d,
                    LayerKind::global_avg_pool, LayerKind::dense, LayerKind::add_skip,
                    LayerKind::sigmoid_output}) {
    if (to_string(kind) == name) return kind;
  }
  throw Error(Errc::unsupported_layer, "unknown layer kind '" + std::string(name) + "'",
              layer_index);
}

namespace {

[[noreturn]] void fail(std::size_t index, const std::string& what) {
  throw Error(Errc::shape_inference, what, index);
}

void expect_rank3(const Shape& in, std::size_t index, std::string_view kind) {
  if (in.size() != 3) {
    fail(index, std::string(kind) + " expects a (h, w, c) input, got " + shape_to_string(in));
  }
}

void expect_no_params(const LayerSpec& layer, std::size_t index) {
  if (layer.weight_len != 0 || layer.bias_len != 0) {
    fail(index, std::string(to_string(layer.kind)) + " carries no parameters");
  }
}

void expect_params(const LayerSpec& layer, std::size_t index, std::size_t weights,
                   std::size_t biases) {
  if (layer.weight_len != weights) {
    fail(index, "weight slice has " + std::to_string(layer.weight_len) + " values, expected " +
                    std::to_string(weights));
  }
  if (layer.bias_len != biases) {
    fail(index, "bias slice has " + std::to_string(layer.bias_len) + " values, expected " +
                    std::to_string(biases));
  }
}

std::size_t window_count(std::size_t extent, std::size_t window, std::size_t stride,
                         std::size_t index) {
  if (extent < window) {
    fail(index, "window " + std::to_string(window) + " larger than padded extent " +
                    std::to_string(extent));
  }
  return (extent - window) / stride + 1;
}

}  // namespace

std::vector<Shape> infer_shapes(std::span<const LayerSpec> layers, const Shape& input_shape) {
  if (input_shape.empty() || element_count(input_shape) == 0) {
    throw Error(Errc::shape_inference, "empty input shape " + shape_to_string(input_shape));
  }
  std::vector<Shape> shapes;
  shapes.reserve(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& layer = layers[i];
    const Shape& in = i == 0 ? input_shape : shapes.back();
    const Hyperparams& hp = layer.hp;
    Shape out;
    switch (layer.kind) {
      case LayerKind::conv2d: {
        expect_rank3(in, i, "conv2d");
        if (hp.kernel_h == 0 || hp.kernel_w == 0 || hp.stride == 0 || hp.out_channels == 0) {
          fail(i, "conv2d kernel, stride, and out_channels must be positive");
        }
        if (in[2] != hp.in_channels) {
          fail(i, "conv2d expects " + std::to_string(hp.in_channels) + " input channels, got " +
                      std::to_string(in[2]));
        }
        expect_params(layer, i, hp.kernel_h * hp.kernel_w * hp.in_channels * hp.out_channels,
                      hp.out_channels);
        out = {window_count(in[0] + 2 * hp.pad, hp.kernel_h, hp.stride, i),
               window_count(in[1] + 2 * hp.pad, hp.kernel_w, hp.stride, i), hp.out_channels};
        break;
      }
      case LayerKind::relu:
        expect_no_params(layer, i);
        out = in;
        break;
      case LayerKind::maxpool2d:
        expect_rank3(in, i, "maxpool2d");
        expect_no_params(layer, i);
        if (hp.pool == 0 || hp.stride == 0) fail(i, "maxpool2d pool and stride must be positive");
        out = {window_count(in[0], hp.pool, hp.stride, i),
               window_count(in[1], hp.pool, hp.stride, i), in[2]};
        break;
      case LayerKind::global_avg_pool:
        expect_rank3(in, i, "global_avg_pool");
        expect_no_params(layer, i);
        out = {in[2]};
        break;
      case LayerKind::dense: {
        const std::size_t n = element_count(in);
        if (hp.in_features != n) {
          fail(i, "dense expects " + std::to_string(hp.in_features) + " inputs, got " +
                      std::to_string(n));
        }
        if (hp.out_features == 0) fail(i, "dense out_features must be positive");
        expect_params(layer, i, hp.in_features * hp.out_features, hp.out_features);
        out = {hp.out_features};
        break;
      }
      case LayerKind::add_skip:
        expect_no_params(layer, i);
        if (hp.source >= i) {
          fail(i, "add_skip source " + std::to_string(hp.source) + " is not an earlier layer");
        }
        if (shapes[hp.source] != in) {
          fail(i, "add_skip source shape " + shape_to_string(shapes[hp.source]) +
                      " differs from input shape " + shape_to_string(in));
        }
        out = in;
        break;
      case LayerKind::sigmoid_output:
        expect_no_params(layer, i);
        if (element_count(in) != 1) {
          fail(i, "sigmoid_output expects a single logit, got " + shape_to_string(in));
        }
        out = {1};
        break;
    }
    shapes.push_back(std::move(out));
  }
  return shapes;
}

void validate(const ModelGraph& model) {
  if (model.layers.empty()) throw Error(Errc::invalid_model, "model has no layers");
  infer_shapes(model.layers, model.input_shape);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    const bool last = i + 1 == model.layers.size();
    if ((layer.kind == LayerKind::sigmoid_output) != last) {
      throw Error(Errc::invalid_model, "sigmoid_output must be the final layer and appear once",
                  i);
    }
    const auto n = model.weights.size();
    if (layer.weight_offset > n || layer.weight_len > n - layer.weight_offset ||
        layer.bias_offset > n || layer.bias_len > n - layer.bias_offset) {
      throw Error(Errc::invalid_model, "parameter slice exceeds weight blob", i);
    }
  }
}

std::uint64_t structural_fingerprint(const ModelGraph& model) noexcept {
  // FNV-1a over structure only; weight values do not participate.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xffu;
      h *= 1099511628211ull;
    }
  };
  for (auto d : model.input_shape) mix(d);
  mix(model.weights.size());
  for (const auto& l : model.layers) {
    mix(static_cast<std::uint64_t>(l.kind));
    for (auto v : {l.hp.kernel_h, l.hp.kernel_w, l.hp.stride, l.hp.pad, l.hp.in_channels,
                   l.hp.out_channels, l.hp.pool, l.hp.in_features, l.hp.out_features,
                   l.hp.source, l.weight_offset, l.weight_len, l.bias_offset, l.bias_len}) {
      mix(v);
    }
  }
  return h;
}

double sigmoid(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace pve
