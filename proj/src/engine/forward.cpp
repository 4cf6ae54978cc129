#include <algorithm>
#include <cmath>
#include <limits>

#include "kernels.hpp"
#include "pve/engine.hpp"
#include "pve/error.hpp"

namespace pve {

namespace detail {

void conv2d_forward(const Hyperparams& hp, const TensorF32& in, std::span<const float> weights,
                    std::span<const float> bias, TensorF32& out) {
  const std::size_t in_h = in.shape()[0], in_w = in.shape()[1], cin = in.shape()[2];
  const std::size_t out_h = out.shape()[0], out_w = out.shape()[1], cout = hp.out_channels;
  const auto pad = static_cast<std::ptrdiff_t>(hp.pad);
  std::vector<double> acc(cout);
  const float* x = in.data().data();
  float* y = out.data().data();
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      for (std::size_t co = 0; co < cout; ++co) acc[co] = bias[co];
      for (std::size_t ky = 0; ky < hp.kernel_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * hp.stride + ky) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
        for (std::size_t kx = 0; kx < hp.kernel_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * hp.stride + kx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
          const float* px = x + (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * cin;
          const float* wk = weights.data() + (ky * hp.kernel_w + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const double v = px[ci];
            const float* wrow = wk + ci * cout;
            for (std::size_t co = 0; co < cout; ++co) acc[co] += v * wrow[co];
          }
        }
      }
      float* py = y + (oy * out_w + ox) * cout;
      for (std::size_t co = 0; co < cout; ++co) py[co] = static_cast<float>(acc[co]);
    }
  }
}

std::size_t maxpool_argmax(const TensorF32& in, const Hyperparams& hp, std::size_t oy,
                           std::size_t ox, std::size_t c) {
  const std::size_t in_w = in.shape()[1], channels = in.shape()[2];
  std::size_t best = 0;
  float best_value = -std::numeric_limits<float>::infinity();
  bool first = true;
  for (std::size_t py = 0; py < hp.pool; ++py) {
    for (std::size_t px = 0; px < hp.pool; ++px) {
      const std::size_t idx = ((oy * hp.stride + py) * in_w + ox * hp.stride + px) * channels + c;
      // Strict comparison keeps the first maximum in scan order.
      if (first || in[idx] > best_value) {
        best = idx;
        best_value = in[idx];
        first = false;
      }
    }
  }
  return best;
}

void maxpool_forward(const Hyperparams& hp, const TensorF32& in, TensorF32& out) {
  const std::size_t out_h = out.shape()[0], out_w = out.shape()[1], channels = out.shape()[2];
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      for (std::size_t c = 0; c < channels; ++c) {
        out.at(oy, ox, c) = in[maxpool_argmax(in, hp, oy, ox, c)];
      }
    }
  }
}

void global_avg_pool_forward(const TensorF32& in, TensorF32& out) {
  const std::size_t pixels = in.shape()[0] * in.shape()[1], channels = in.shape()[2];
  std::vector<double> acc(channels, 0.0);
  const float* x = in.data().data();
  for (std::size_t p = 0; p < pixels; ++p) {
    for (std::size_t c = 0; c < channels; ++c) acc[c] += x[p * channels + c];
  }
  for (std::size_t c = 0; c < channels; ++c) {
    out[c] = static_cast<float>(acc[c] / static_cast<double>(pixels));
  }
}

void dense_forward(const Hyperparams& hp, const TensorF32& in, std::span<const float> weights,
                   std::span<const float> bias, TensorF32& out) {
  const float* x = in.data().data();
  for (std::size_t o = 0; o < hp.out_features; ++o) {
    const float* row = weights.data() + o * hp.in_features;
    double acc = bias[o];
    for (std::size_t i = 0; i < hp.in_features; ++i) acc += static_cast<double>(x[i]) * row[i];
    out[o] = static_cast<float>(acc);
  }
}

}  // namespace detail

ForwardTrace forward(const ModelGraph& model, const TensorF32& input) {
  if (input.shape() != model.input_shape) {
    throw Error(Errc::shape_mismatch, "input shape " + shape_to_string(input.shape()) +
                                          " does not match model input " +
                                          shape_to_string(model.input_shape));
  }
  const auto shapes = infer_shapes(model.layers, model.input_shape);
  ForwardTrace trace;
  trace.input = input;
  trace.fingerprint = structural_fingerprint(model);
  trace.outputs.reserve(model.layers.size());
  const std::span<const float> blob(model.weights);

  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& layer = model.layers[i];
    const TensorF32& in = i == 0 ? trace.input : trace.outputs.back();
    TensorF32 out(shapes[i]);
    switch (layer.kind) {
      case LayerKind::conv2d:
        detail::conv2d_forward(layer.hp, in, blob.subspan(layer.weight_offset, layer.weight_len),
                               blob.subspan(layer.bias_offset, layer.bias_len), out);
        break;
      case LayerKind::relu:
        std::transform(in.data().begin(), in.data().end(), out.data().begin(),
                       [](float v) { return v > 0.0f ? v : 0.0f; });
        break;
      case LayerKind::maxpool2d:
        detail::maxpool_forward(layer.hp, in, out);
        break;
      case LayerKind::global_avg_pool:
        detail::global_avg_pool_forward(in, out);
        break;
      case LayerKind::dense:
        detail::dense_forward(layer.hp, in, blob.subspan(layer.weight_offset, layer.weight_len),
                              blob.subspan(layer.bias_offset, layer.bias_len), out);
        break;
      case LayerKind::add_skip: {
        const TensorF32& skip = trace.outputs[layer.hp.source];
        std::transform(in.data().begin(), in.data().end(), skip.data().begin(),
                       out.data().begin(), [](float a, float b) { return a + b; });
        break;
      }
      case LayerKind::sigmoid_output:
        trace.logit = in[0];
        trace.probability = sigmoid(trace.logit);
        out[0] = static_cast<float>(trace.probability);
        break;
    }
    trace.outputs.push_back(std::move(out));
  }
  return trace;
}

}  // namespace pve
