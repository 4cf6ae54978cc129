#include <algorithm>
#include <chrono>
#include <cmath>

#include "pve/error.hpp"
#include "pve/saliency.hpp"

namespace pve {

void OverlayConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw Error(Errc::invalid_argument, "alpha must lie in [0, 1]");
  }
}

SaliencyMap gradient_magnitude(const TensorF32& gradient) {
  if (gradient.rank() != 3) {
    throw Error(Errc::shape_mismatch, "saliency expects an (h, w, c) gradient");
  }
  const std::size_t h = gradient.shape()[0], w = gradient.shape()[1], c = gradient.shape()[2];
  SaliencyMap map{w, h, std::vector<float>(w * h, 0.0f)};
  for (std::size_t p = 0; p < w * h; ++p) {
    float m = 0.0f;
    for (std::size_t k = 0; k < c; ++k) m = std::max(m, std::abs(gradient[p * c + k]));
    map.values[p] = m;
  }
  return map;
}

SaliencyMap min_max_normalize(SaliencyMap map) {
  if (map.values.empty()) return map;
  const auto [lo_it, hi_it] = std::minmax_element(map.values.begin(), map.values.end());
  const double lo = *lo_it, hi = *hi_it;
  if (!(hi > lo)) {
    std::fill(map.values.begin(), map.values.end(), hi > 0.0 ? 1.0f : 0.0f);
    return map;
  }
  const double range = hi - lo;
  constexpr float below_one = 0x1.fffffep-1f;
  for (float& v : map.values) {
    const bool is_max = v == hi;
    v = static_cast<float>((v - lo) / range);
    // Only true maxima may land on 1, so the argmax survives float rounding.
    if (!is_max && v >= 1.0f) v = below_one;
  }
  return map;
}

SaliencyMap saliency_from_trace(const ModelGraph& model, const ForwardTrace& trace) {
  return min_max_normalize(gradient_magnitude(backward_to_input(model, trace)));
}

SaliencyMap vanilla_gradient(const ModelGraph& model, const TensorF32& input) {
  return saliency_from_trace(model, forward(model, input));
}

SaliencyMap upscale_map(const SaliencyMap& map, std::size_t target_w, std::size_t target_h) {
  if (target_w == 0 || target_h == 0) {
    throw Error(Errc::invalid_argument, "target dimensions must be >= 1");
  }
  if (map.width == target_w && map.height == target_h) return map;
  auto tap = [](std::size_t i, std::size_t in, std::size_t out) {
    double s = (static_cast<double>(i) + 0.5) * static_cast<double>(in) / static_cast<double>(out) - 0.5;
    s = std::clamp(s, 0.0, static_cast<double>(in - 1));
    const auto i0 = static_cast<std::size_t>(s);
    return std::tuple{i0, std::min(i0 + 1, in - 1), s - static_cast<double>(i0)};
  };
  SaliencyMap out{target_w, target_h, std::vector<float>(target_w * target_h)};
  for (std::size_t y = 0; y < target_h; ++y) {
    const auto [y0, y1, fy] = tap(y, map.height, target_h);
    for (std::size_t x = 0; x < target_w; ++x) {
      const auto [x0, x1, fx] = tap(x, map.width, target_w);
      const double top = map.at(x0, y0) + (map.at(x1, y0) - map.at(x0, y0)) * fx;
      const double bottom = map.at(x0, y1) + (map.at(x1, y1) - map.at(x0, y1)) * fx;
      out.values[y * target_w + x] =
          static_cast<float>(std::clamp(top + (bottom - top) * fy, 0.0, 1.0));
    }
  }
  return out;
}

RawImage blend(const RawImage& original, const RawImage& heat, double alpha) {
  if (original.width != heat.width || original.height != heat.height) {
    throw Error(Errc::size_mismatch, "blend inputs differ in size");
  }
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error(Errc::invalid_argument, "alpha must lie in [0, 1]");
  RawImage out(original.width, original.height);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = (1.0 - alpha) * original.pixels[i] + alpha * heat.pixels[i];
    out.pixels[i] = static_cast<std::uint8_t>(std::floor(v + 0.5));
  }
  return out;
}

ExplainResult explain_image(const ModelGraph& model, RawImage original,
                            const OverlayConfig& overlay, const DetectorConfig& detector) {
  overlay.validate();
  DetailedPrediction pred = predict_image(model, std::move(original), detector);
  ExplainResult out;
  out.prediction = pred.prediction;
  out.timings = pred.timings;
  if (pred.prediction.label != Label::ai && detector.saliency_on_positive_only) {
    out.image = std::move(pred.original);
    return out;
  }
  const auto t0 = std::chrono::steady_clock::now();
  const SaliencyMap map = saliency_from_trace(model, pred.trace);
  const RawImage heat =
      colorize(upscale_map(map, pred.original.width, pred.original.height), overlay.colormap);
  out.image = blend(pred.original, heat, overlay.alpha);
  out.saliency_micros =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  out.overlay_applied = true;
  return out;
}

ExplainResult explain(const ModelGraph& model, std::span<const std::uint8_t> original_bytes,
                      const OverlayConfig& overlay, const DetectorConfig& detector) {
  const auto t0 = std::chrono::steady_clock::now();
  RawImage image = decode_image(original_bytes);
  const double decode =
      std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
  ExplainResult out = explain_image(model, std::move(image), overlay, detector);
  out.timings.decode_micros = decode;
  return out;
}

}  // namespace pve
