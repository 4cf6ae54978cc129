#include "pve/model_zoo.hpp"

#include <cmath>
#include <random>

#include "pve/detector.hpp"
#include "pve/error.hpp"

namespace pve {

namespace {

LayerSpec layer_of(LayerKind kind) {
  LayerSpec l;
  l.kind = kind;
  return l;
}

}  // namespace

GraphBuilder::GraphBuilder(Shape input_shape) : shape_(std::move(input_shape)) {
  graph_.input_shape = shape_;
}

GraphBuilder& GraphBuilder::push(LayerSpec layer) {
  if (layer.weight_len) {
    layer.weight_offset = graph_.weights.size();
    graph_.weights.resize(graph_.weights.size() + layer.weight_len, 0.0f);
  }
  if (layer.bias_len) {
    layer.bias_offset = graph_.weights.size();
    graph_.weights.resize(graph_.weights.size() + layer.bias_len, 0.0f);
  }
  graph_.layers.push_back(layer);
  shapes_ = infer_shapes(graph_.layers, graph_.input_shape);
  shape_ = shapes_.back();
  return *this;
}

GraphBuilder& GraphBuilder::conv2d(std::size_t kernel_h, std::size_t kernel_w,
                                   std::size_t out_channels, std::size_t stride, std::size_t pad) {
  if (shape_.size() != 3) {
    throw Error(Errc::shape_inference, "conv2d needs a (h, w, c) input", graph_.layers.size());
  }
  LayerSpec l = layer_of(LayerKind::conv2d);
  l.hp.kernel_h = kernel_h;
  l.hp.kernel_w = kernel_w;
  l.hp.stride = stride;
  l.hp.pad = pad;
  l.hp.in_channels = shape_[2];
  l.hp.out_channels = out_channels;
  l.weight_len = kernel_h * kernel_w * shape_[2] * out_channels;
  l.bias_len = out_channels;
  return push(l);
}

GraphBuilder& GraphBuilder::relu() { return push(layer_of(LayerKind::relu)); }

GraphBuilder& GraphBuilder::maxpool2d(std::size_t pool, std::size_t stride) {
  LayerSpec l = layer_of(LayerKind::maxpool2d);
  l.hp.pool = pool;
  l.hp.stride = stride;
  return push(l);
}

GraphBuilder& GraphBuilder::global_avg_pool() { return push(layer_of(LayerKind::global_avg_pool)); }

GraphBuilder& GraphBuilder::dense(std::size_t out_features) {
  LayerSpec l = layer_of(LayerKind::dense);
  l.hp.in_features = element_count(shape_);
  l.hp.out_features = out_features;
  l.weight_len = l.hp.in_features * out_features;
  l.bias_len = out_features;
  return push(l);
}

GraphBuilder& GraphBuilder::add_skip(std::size_t source_layer) {
  LayerSpec l = layer_of(LayerKind::add_skip);
  l.hp.source = source_layer;
  return push(l);
}

GraphBuilder& GraphBuilder::sigmoid_output() { return push(layer_of(LayerKind::sigmoid_output)); }

ModelGraph GraphBuilder::build(ModelMetadata metadata) && {
  graph_.metadata = std::move(metadata);
  validate(graph_);
  return std::move(graph_);
}

ModelGraph compact_detector(ModelMetadata metadata) {
  GraphBuilder b(kDetectorInputShape);
  b.conv2d(3, 3, 8, 2, 1).relu().maxpool2d(2, 2);
  b.conv2d(3, 3, 16, 2, 1).relu();
  const std::size_t block_input = b.last();
  b.conv2d(3, 3, 16, 1, 1).relu().conv2d(3, 3, 16, 1, 1).add_skip(block_input).relu();
  b.global_avg_pool().dense(1).sigmoid_output();
  return std::move(b).build(std::move(metadata));
}

std::size_t output_layer_index(const ModelGraph& model) {
  const std::size_t n = model.layers.size();
  if (n < 2 || model.layers[n - 2].kind != LayerKind::dense ||
      model.layers[n - 2].hp.out_features != 1) {
    throw Error(Errc::invalid_model, "model does not end in dense(1) -> sigmoid_output");
  }
  return n - 2;
}

void set_output_bias(ModelGraph& model, double bias) {
  const LayerSpec& out = model.layers[output_layer_index(model)];
  model.weights[out.bias_offset] = static_cast<float>(bias);
}

void kaiming_init(ModelGraph& model, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::size_t output = output_layer_index(model);
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.kind != LayerKind::conv2d && l.kind != LayerKind::dense) continue;
    auto w = std::span(model.weights).subspan(l.weight_offset, l.weight_len);
    if (i == output) {
      std::fill(w.begin(), w.end(), 0.0f);
      continue;
    }
    const std::size_t fan_in = l.kind == LayerKind::conv2d
                                   ? l.hp.kernel_h * l.hp.kernel_w * l.hp.in_channels
                                   : l.hp.in_features;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (float& v : w) {
      // 53-bit uniform in [0, 1), independent of the standard library's distributions.
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      v = static_cast<float>((2.0 * u - 1.0) * bound);
    }
    auto b = std::span(model.weights).subspan(l.bias_offset, l.bias_len);
    std::fill(b.begin(), b.end(), 0.0f);
  }
}

ModelGraph default_model() {
  ModelGraph model = compact_detector({.name = "compact-detector",
                                       .version = "1.0.0",
                                       .n_ai = kCorpusAiCount,
                                       .n_human = kCorpusHumanCount});
  set_output_bias(model, init_output_bias(kCorpusAiCount, kBiasHumanCount));
  return model;
}

}  // namespace pve
