#include <algorithm>

#include "kernels.hpp"
#include "pve/engine.hpp"
#include "pve/error.hpp"

namespace pve {

namespace {

using Grad = std::vector<double>;

void accumulate(Grad& into, const Grad& g) {
  if (into.empty()) {
    into = g;
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) into[i] += g[i];
}

void conv2d_backward(const Hyperparams& hp, const TensorF32& in, const Shape& out_shape,
                     std::span<const float> weights, const Grad& g, Grad* gin,
                     double* weight_grad, double* bias_grad) {
  const std::size_t in_h = in.shape()[0], in_w = in.shape()[1], cin = in.shape()[2];
  const std::size_t out_h = out_shape[0], out_w = out_shape[1], cout = hp.out_channels;
  const auto pad = static_cast<std::ptrdiff_t>(hp.pad);
  const float* x = in.data().data();
  for (std::size_t oy = 0; oy < out_h; ++oy) {
    for (std::size_t ox = 0; ox < out_w; ++ox) {
      const double* go = g.data() + (oy * out_w + ox) * cout;
      if (std::all_of(go, go + cout, [](double v) { return v == 0.0; })) continue;
      if (bias_grad) {
        for (std::size_t co = 0; co < cout; ++co) bias_grad[co] += go[co];
      }
      for (std::size_t ky = 0; ky < hp.kernel_h; ++ky) {
        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * hp.stride + ky) - pad;
        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(in_h)) continue;
        for (std::size_t kx = 0; kx < hp.kernel_w; ++kx) {
          const std::ptrdiff_t ix = static_cast<std::ptrdiff_t>(ox * hp.stride + kx) - pad;
          if (ix < 0 || ix >= static_cast<std::ptrdiff_t>(in_w)) continue;
          const std::size_t base =
              (static_cast<std::size_t>(iy) * in_w + static_cast<std::size_t>(ix)) * cin;
          const std::size_t wbase = (ky * hp.kernel_w + kx) * cin * cout;
          for (std::size_t ci = 0; ci < cin; ++ci) {
            const float* wrow = weights.data() + wbase + ci * cout;
            if (gin) {
              double s = 0.0;
              for (std::size_t co = 0; co < cout; ++co) s += go[co] * wrow[co];
              (*gin)[base + ci] += s;
            }
            if (weight_grad) {
              const double v = x[base + ci];
              double* wg = weight_grad + wbase + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) wg[co] += v * go[co];
            }
          }
        }
      }
    }
  }
}

void dense_backward(const Hyperparams& hp, const TensorF32& in, std::span<const float> weights,
                    const Grad& g, Grad* gin, double* weight_grad, double* bias_grad) {
  const float* x = in.data().data();
  for (std::size_t o = 0; o < hp.out_features; ++o) {
    const double go = g[o];
    if (go == 0.0) continue;
    const float* row = weights.data() + o * hp.in_features;
    if (bias_grad) bias_grad[o] += go;
    if (gin) {
      for (std::size_t i = 0; i < hp.in_features; ++i) (*gin)[i] += go * row[i];
    }
    if (weight_grad) {
      double* wg = weight_grad + o * hp.in_features;
      for (std::size_t i = 0; i < hp.in_features; ++i) wg[i] += go * x[i];
    }
  }
}

}  // namespace

TensorF32 backward(const ModelGraph& model, const ForwardTrace& trace, double logit_grad,
                   std::span<double> param_grads, bool want_input_grad) {
  if (trace.outputs.size() != model.layers.size() ||
      trace.fingerprint != structural_fingerprint(model) ||
      trace.input.shape() != model.input_shape) {
    throw Error(Errc::trace_mismatch, "trace was not produced by this model");
  }
  if (!param_grads.empty() && param_grads.size() != model.weights.size()) {
    throw Error(Errc::size_mismatch, "parameter gradient buffer has the wrong length");
  }
  const bool want_params = !param_grads.empty();
  const std::size_t n = model.layers.size();
  const std::span<const float> blob(model.weights);

  // grads[i] holds d(loss)/d(output of layer i); empty means "not reached".
  std::vector<Grad> grads(n);
  Grad input_grad;
  if (n >= 2) {
    grads[n - 2] = Grad(trace.outputs[n - 2].size(), 0.0);
    grads[n - 2][0] = logit_grad;
  } else {
    input_grad = Grad(trace.input.size(), 0.0);
    input_grad[0] = logit_grad;
  }

  for (std::size_t idx = n - 1; idx-- > 0;) {
    const LayerSpec& layer = model.layers[idx];
    Grad& g = grads[idx];
    if (g.empty()) continue;
    const TensorF32& in = idx == 0 ? trace.input : trace.outputs[idx - 1];
    const bool need_gin = idx > 0 || want_input_grad;
    Grad gin;
    if (need_gin) gin.assign(in.size(), 0.0);
    double* wg = want_params ? param_grads.data() + layer.weight_offset : nullptr;
    double* bg = want_params ? param_grads.data() + layer.bias_offset : nullptr;

    switch (layer.kind) {
      case LayerKind::conv2d:
        conv2d_backward(layer.hp, in, trace.outputs[idx].shape(),
                        blob.subspan(layer.weight_offset, layer.weight_len), g,
                        need_gin ? &gin : nullptr, wg, bg);
        break;
      case LayerKind::relu:
        if (need_gin) {
          for (std::size_t i = 0; i < g.size(); ++i) gin[i] = in[i] > 0.0f ? g[i] : 0.0;
        }
        break;
      case LayerKind::maxpool2d:
        if (need_gin) {
          const Shape& os = trace.outputs[idx].shape();
          for (std::size_t oy = 0; oy < os[0]; ++oy) {
            for (std::size_t ox = 0; ox < os[1]; ++ox) {
              for (std::size_t c = 0; c < os[2]; ++c) {
                gin[detail::maxpool_argmax(in, layer.hp, oy, ox, c)] +=
                    g[(oy * os[1] + ox) * os[2] + c];
              }
            }
          }
        }
        break;
      case LayerKind::global_avg_pool:
        if (need_gin) {
          const std::size_t pixels = in.shape()[0] * in.shape()[1], channels = in.shape()[2];
          for (std::size_t p = 0; p < pixels; ++p) {
            for (std::size_t c = 0; c < channels; ++c) {
              gin[p * channels + c] = g[c] / static_cast<double>(pixels);
            }
          }
        }
        break;
      case LayerKind::dense:
        dense_backward(layer.hp, in, blob.subspan(layer.weight_offset, layer.weight_len), g,
                       need_gin ? &gin : nullptr, wg, bg);
        break;
      case LayerKind::add_skip:
        accumulate(grads[layer.hp.source], g);
        if (need_gin) gin = g;
        break;
      case LayerKind::sigmoid_output:
        break;  // unreachable: validate() pins it to the last position
    }
    if (!need_gin) continue;
    if (idx == 0) {
      input_grad = std::move(gin);
    } else {
      accumulate(grads[idx - 1], gin);
    }
    Grad().swap(g);
  }

  TensorF32 result(model.input_shape);
  if (!input_grad.empty()) {
    for (std::size_t i = 0; i < input_grad.size(); ++i) {
      result[i] = static_cast<float>(input_grad[i]);
    }
  }
  return result;
}

TensorF32 backward_to_input(const ModelGraph& model, const ForwardTrace& trace) {
  return backward(model, trace, 1.0, {}, true);
}

}  // namespace pve
