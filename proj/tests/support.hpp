#pragma once

// Test-only helpers: a double-precision reference network written directly
// from the layer definitions, random graph generation, and small image
// utilities. Nothing here calls into the engine's forward or backward code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "pve/engine.hpp"
#include "pve/image.hpp"
#include "pve/model_zoo.hpp"

namespace testing {

struct RefTensor {
  std::size_t h = 1, w = 1, c = 1;
  bool flat = false;  // rank-1 (features)
  std::vector<double> v;

  double& at(std::size_t y, std::size_t x, std::size_t ch) { return v[(y * w + x) * c + ch]; }
  double at(std::size_t y, std::size_t x, std::size_t ch) const { return v[(y * w + x) * c + ch]; }
};

// Activation pattern of a forward pass: ReLU signs and max-pool winners.
// Two inputs with equal patterns lie in the same linear region of the logit.
struct Pattern {
  std::vector<bool> relu_on;
  std::vector<std::size_t> pool_winner;
  bool operator==(const Pattern&) const = default;
};

struct RefResult {
  std::vector<RefTensor> outputs;
  double logit = 0.0;
  double probability = 0.0;
  Pattern pattern;
};

inline RefResult reference_forward(const pve::ModelGraph& m, const std::vector<double>& input) {
  RefResult r;
  RefTensor x;
  x.h = m.input_shape[0];
  x.w = m.input_shape[1];
  x.c = m.input_shape[2];
  x.v = input;
  auto W = [&](std::size_t i) { return static_cast<double>(m.weights[i]); };
  for (const auto& L : m.layers) {
    const auto& hp = L.hp;
    RefTensor y;
    switch (L.kind) {
      case pve::LayerKind::conv2d: {
        y.h = (x.h + 2 * hp.pad - hp.kernel_h) / hp.stride + 1;
        y.w = (x.w + 2 * hp.pad - hp.kernel_w) / hp.stride + 1;
        y.c = hp.out_channels;
        y.v.assign(y.h * y.w * y.c, 0.0);
        for (std::size_t oy = 0; oy < y.h; ++oy)
          for (std::size_t ox = 0; ox < y.w; ++ox)
            for (std::size_t co = 0; co < y.c; ++co) {
              double s = W(L.bias_offset + co);
              for (std::size_t ky = 0; ky < hp.kernel_h; ++ky)
                for (std::size_t kx = 0; kx < hp.kernel_w; ++kx) {
                  const long iy = static_cast<long>(oy * hp.stride + ky) - static_cast<long>(hp.pad);
                  const long ix = static_cast<long>(ox * hp.stride + kx) - static_cast<long>(hp.pad);
                  if (iy < 0 || ix < 0 || iy >= static_cast<long>(x.h) || ix >= static_cast<long>(x.w))
                    continue;
                  for (std::size_t ci = 0; ci < x.c; ++ci) {
                    const std::size_t wi = ((ky * hp.kernel_w + kx) * x.c + ci) * y.c + co;
                    s += W(L.weight_offset + wi) * x.at(iy, ix, ci);
                  }
                }
              y.at(oy, ox, co) = s;
            }
        break;
      }
      case pve::LayerKind::relu:
        y = x;
        for (double& v : y.v) {
          r.pattern.relu_on.push_back(v > 0);
          v = v > 0 ? v : 0.0;
        }
        break;
      case pve::LayerKind::maxpool2d: {
        y.h = (x.h - hp.pool) / hp.stride + 1;
        y.w = (x.w - hp.pool) / hp.stride + 1;
        y.c = x.c;
        y.v.assign(y.h * y.w * y.c, 0.0);
        for (std::size_t oy = 0; oy < y.h; ++oy)
          for (std::size_t ox = 0; ox < y.w; ++ox)
            for (std::size_t ch = 0; ch < y.c; ++ch) {
              double best = -INFINITY;
              std::size_t win = 0;
              for (std::size_t py = 0; py < hp.pool; ++py)
                for (std::size_t px = 0; px < hp.pool; ++px) {
                  const double v = x.at(oy * hp.stride + py, ox * hp.stride + px, ch);
                  if (v > best) {
                    best = v;
                    win = py * hp.pool + px;
                  }
                }
              y.at(oy, ox, ch) = best;
              r.pattern.pool_winner.push_back(win);
            }
        break;
      }
      case pve::LayerKind::global_avg_pool: {
        y.flat = true;
        y.c = x.c;
        y.v.assign(x.c, 0.0);
        for (std::size_t i = 0; i < x.h * x.w; ++i)
          for (std::size_t ch = 0; ch < x.c; ++ch) y.v[ch] += x.v[i * x.c + ch];
        for (double& v : y.v) v /= static_cast<double>(x.h * x.w);
        break;
      }
      case pve::LayerKind::dense: {
        y.flat = true;
        y.c = hp.out_features;
        y.v.assign(hp.out_features, 0.0);
        for (std::size_t o = 0; o < hp.out_features; ++o) {
          double s = W(L.bias_offset + o);
          for (std::size_t i = 0; i < hp.in_features; ++i)
            s += W(L.weight_offset + o * hp.in_features + i) * x.v[i];
          y.v[o] = s;
        }
        break;
      }
      case pve::LayerKind::add_skip:
        y = x;
        for (std::size_t i = 0; i < y.v.size(); ++i) y.v[i] += r.outputs[hp.source].v[i];
        break;
      case pve::LayerKind::sigmoid_output:
        r.logit = x.v.at(0);
        r.probability = 1.0 / (1.0 + std::exp(-r.logit));
        y = x;
        y.v = {r.probability};
        break;
    }
    r.outputs.push_back(y);
    x = std::move(y);
  }
  return r;
}

inline std::vector<double> to_double(const pve::TensorF32& t) {
  return {t.data().begin(), t.data().end()};
}

// Uniform [lo, hi) weights for every parameter.
inline void randomize_weights(pve::ModelGraph& m, std::mt19937_64& rng, double lo = -1.0,
                              double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  for (float& w : m.weights) w = static_cast<float>(d(rng));
}

inline pve::TensorF32 random_input(const pve::Shape& shape, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> d(0.0, 1.0);
  pve::TensorF32 t(shape);
  for (float& v : t.data()) v = static_cast<float>(d(rng));
  return t;
}

// Small random graph that always contains all seven layer kinds:
// conv -> relu -> [maxpool] -> residual block -> [gap | flatten] -> dense
// stack -> sigmoid. Spatial and channel sizes are drawn from `rng`.
inline pve::ModelGraph random_graph(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  const std::size_t side_h = pick(5, 9), side_w = pick(5, 9), cin = pick(1, 3);
  pve::GraphBuilder b({side_h, side_w, cin});
  const std::size_t k = pick(1, 3);
  b.conv2d(k, pick(1, 3), pick(1, 4), pick(1, 2), k == 3 ? pick(0, 1) : 0).relu();
  const bool pool_first = pick(0, 1) == 1;
  bool pooled = false;
  auto maybe_pool = [&] {
    const auto& s = b.current_shape();
    if (s[0] >= 2 && s[1] >= 2) {
      b.maxpool2d(2, pick(1, 2));
      pooled = true;
    }
  };
  if (pool_first) maybe_pool();
  const std::size_t block_in = b.last();
  b.conv2d(3, 3, b.current_shape()[2], 1, 1);
  if (pick(0, 1)) b.relu().conv2d(1, 1, b.current_shape()[2]);
  b.add_skip(block_in).relu();
  if (!pool_first) maybe_pool();
  // A 1x1 pool keeps the kind present when the map was too small above.
  if (!pooled) b.maxpool2d(1, 1);
  if (pick(0, 1)) b.global_avg_pool();
  if (pick(0, 1)) b.dense(pick(2, 5)).relu();
  b.dense(1).sigmoid_output();
  pve::ModelGraph m = std::move(b).build({.name = "random", .version = "t"});
  randomize_weights(m, rng);
  return m;
}

// Random graph on the detector input shape, small enough to save quickly.
inline pve::ModelGraph random_container_graph(std::mt19937_64& rng) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  pve::GraphBuilder b(pve::kDetectorInputShape);
  const std::size_t k = pick(1, 5);
  b.conv2d(k, pick(1, 5), pick(1, 8), pick(2, 4), pick(0, k / 2)).relu();
  if (pick(0, 1)) b.maxpool2d(pick(2, 3), 2);
  const std::size_t src = b.last();
  b.conv2d(3, 3, b.current_shape()[2], 1, 1).add_skip(src).relu().global_avg_pool();
  for (std::size_t i = pick(0, 2); i > 0; --i) b.dense(pick(1, 8)).relu();
  b.dense(1).sigmoid_output();
  pve::ModelGraph m = std::move(b).build({.name = "random-" + std::to_string(pick(0, 1u << 20)),
                                          .version = std::to_string(pick(0, 99)),
                                          .n_ai = pick(0, 1u << 30),
                                          .n_human = pick(0, 1u << 30)});
  std::uniform_real_distribution<float> d(-2.0f, 2.0f);
  for (float& w : m.weights) w = d(rng);
  return m;
}

struct GradCheck {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double max_rel_error = 0.0;
};

// Central differences of the reference logit, step h, against `grad`.
// Coordinates where the activation pattern differs between x - h, x, and
// x + h straddle a kink and are skipped.
inline GradCheck finite_difference_check(const pve::ModelGraph& m, const pve::TensorF32& input,
                                         const pve::TensorF32& grad, double h = 1e-3) {
  GradCheck out;
  const auto x = to_double(input);
  const Pattern base = reference_forward(m, x).pattern;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto xp = x, xm = x;
    xp[i] += h;
    xm[i] -= h;
    const auto rp = reference_forward(m, xp), rm = reference_forward(m, xm);
    if (!(rp.pattern == base) || !(rm.pattern == base)) {
      ++out.skipped;
      continue;
    }
    const double fd = (rp.logit - rm.logit) / (2 * h);
    const double g = grad[i];
    const double scale = std::max(std::abs(fd), std::abs(g));
    const double err = scale > 1e-6 ? std::abs(fd - g) / scale : 0.0;
    out.max_rel_error = std::max(out.max_rel_error, err);
    ++out.checked;
  }
  return out;
}

inline pve::RawImage noise_image(std::size_t w, std::size_t h, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  pve::RawImage img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() & 0xFF);
  return img;
}

// A zero-weight detector-shaped model is useless for gradients; this gives a
// compact detector with small random weights.
inline pve::ModelGraph random_detector(std::uint64_t seed) {
  pve::ModelGraph m = pve::compact_detector({.name = "compact-detector", .version = "random"});
  pve::kaiming_init(m, seed);
  std::mt19937_64 rng(seed + 1);
  const auto& out = m.layers[pve::output_layer_index(m)];
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (std::size_t i = 0; i < out.weight_len; ++i) m.weights[out.weight_offset + i] = static_cast<float>(d(rng));
  return m;
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path = std::filesystem::temp_directory_path() /
           ("pve-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

}  // namespace testing
