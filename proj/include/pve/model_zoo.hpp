#pragma once

#include <cstdint>

#include "pve/engine.hpp"

namespace pve {

// Appends layers to a graph while tracking the running shape, so weight
// offsets and channel counts never have to be computed by hand.
class GraphBuilder {
 public:
  explicit GraphBuilder(Shape input_shape);

  GraphBuilder& conv2d(std::size_t kernel_h, std::size_t kernel_w, std::size_t out_channels,
                       std::size_t stride = 1, std::size_t pad = 0);
  GraphBuilder& relu();
  GraphBuilder& maxpool2d(std::size_t pool, std::size_t stride);
  GraphBuilder& global_avg_pool();
  GraphBuilder& dense(std::size_t out_features);
  GraphBuilder& add_skip(std::size_t source_layer);
  GraphBuilder& sigmoid_output();

  // Index of the most recently added layer.
  std::size_t last() const noexcept { return graph_.layers.size() - 1; }
  const Shape& current_shape() const noexcept { return shape_; }

  // Validates and returns the graph; weights are zero-filled.
  ModelGraph build(ModelMetadata metadata = {}) &&;

 private:
  GraphBuilder& push(LayerSpec layer);

  ModelGraph graph_;
  Shape shape_;
  std::vector<Shape> shapes_;
};

/// The compact residual detector used as the reference model. All weights
/// are zero and the output bias is 0.
ModelGraph compact_detector(ModelMetadata metadata = {});

// Index of the dense layer that produces the logit (the one right before
// sigmoid_output).
std::size_t output_layer_index(const ModelGraph& model);

void set_output_bias(ModelGraph& model, double bias);

/// Kaiming-uniform (fan-in) weights for every conv2d/dense layer except the
/// output layer, whose weights are zeroed. Hidden biases become 0; the output
/// bias is left untouched.
void kaiming_init(ModelGraph& model, std::uint64_t seed);

/// Zero-weight compact detector whose output bias is the log class ratio of
/// the published training corpus; metadata carries its per-class counts.
ModelGraph default_model();

}  // namespace pve
