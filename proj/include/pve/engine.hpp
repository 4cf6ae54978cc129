#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pve/tensor.hpp"

namespace pve {

enum class LayerKind {
  conv2d,
  relu,
  maxpool2d,
  global_avg_pool,
  dense,
  add_skip,
  sigmoid_output,
};

std::string_view to_string(LayerKind kind) noexcept;
// Throws Error(unsupported_layer) for unknown names.
LayerKind layer_kind_from_string(std::string_view name, std::size_t layer_index);

// Only the fields relevant to a layer's kind are meaningful; the rest stay 0.
struct Hyperparams {
  std::size_t kernel_h = 0;
  std::size_t kernel_w = 0;
  std::size_t stride = 0;
  std::size_t pad = 0;
  std::size_t in_channels = 0;   // conv2d
  std::size_t out_channels = 0;  // conv2d
  std::size_t pool = 0;          // maxpool2d
  std::size_t in_features = 0;   // dense
  std::size_t out_features = 0;  // dense
  std::size_t source = 0;        // add_skip: index of an earlier layer

  bool operator==(const Hyperparams&) const = default;
};

/// One layer of the network. Weight and bias slices are offsets/lengths in
/// float elements into ModelGraph::weights.
///
/// conv2d weights are laid out [kernel_h][kernel_w][in_channels][out_channels];
/// dense weights are [out_features][in_features] over the flattened input.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  Hyperparams hp;
  std::size_t weight_offset = 0;
  std::size_t weight_len = 0;
  std::size_t bias_offset = 0;
  std::size_t bias_len = 0;

  bool operator==(const LayerSpec&) const = default;
};

struct ModelMetadata {
  std::string name = "unnamed";
  std::string version = "0";
  std::uint64_t n_ai = 0;
  std::uint64_t n_human = 0;

  bool operator==(const ModelMetadata&) const = default;
};

inline const Shape kDetectorInputShape{256, 256, 3};

// Layers are immutable after validation. In-memory graphs may use any input
// shape (small graphs are handy for checking gradients); the container loader
// only accepts kDetectorInputShape.
struct ModelGraph {
  std::vector<LayerSpec> layers;
  Shape input_shape = kDetectorInputShape;
  std::vector<float> weights;
  ModelMetadata metadata;

  bool operator==(const ModelGraph&) const = default;
};

/// Output shape of every layer, in order. Throws Error(shape_inference) naming
/// the first inconsistent layer; weight/bias slice lengths are checked against
/// the hyperparameters here too.
std::vector<Shape> infer_shapes(std::span<const LayerSpec> layers, const Shape& input_shape);

/// Full structural check: shapes, weight ranges, skip sources, and a terminal
/// sigmoid_output fed by a single logit.
void validate(const ModelGraph& model);

std::vector<std::uint8_t> save_model(const ModelGraph& model);
ModelGraph load_model(std::span<const std::uint8_t> container);

struct ForwardTrace {
  TensorF32 input;
  std::vector<TensorF32> outputs;  // one per layer
  double logit = 0.0;
  double probability = 0.5;
  std::uint64_t fingerprint = 0;
};

ForwardTrace forward(const ModelGraph& model, const TensorF32& input);

/// d(logit)/d(input), the gradient of the pre-sigmoid output.
TensorF32 backward_to_input(const ModelGraph& model, const ForwardTrace& trace);

/// Backward pass seeded with d(loss)/d(logit) = `logit_grad`. When
/// `param_grads` is non-empty it must have model.weights.size() entries, and
/// weight/bias gradients are added into it. With `want_input_grad` false the
/// returned tensor is all zeros and the first layer skips its input gradient.
TensorF32 backward(const ModelGraph& model, const ForwardTrace& trace, double logit_grad,
                   std::span<double> param_grads, bool want_input_grad = true);

std::uint64_t structural_fingerprint(const ModelGraph& model) noexcept;

double sigmoid(double x) noexcept;

}  // namespace pve
