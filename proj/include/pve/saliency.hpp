#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pve/detector.hpp"
#include "pve/engine.hpp"
#include "pve/image.hpp"

namespace pve {

/// Per-pixel attribution in [0, 1], row-major.
struct SaliencyMap {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<float> values;

  float at(std::size_t x, std::size_t y) const noexcept { return values[y * width + x]; }
  bool operator==(const SaliencyMap&) const = default;
};

enum class Colormap { inferno, jet, grayscale };

Colormap colormap_from_string(std::string_view name);
std::string_view to_string(Colormap map) noexcept;

struct OverlayConfig {
  double alpha = 0.45;
  Colormap colormap = Colormap::inferno;

  void validate() const;
};

// max over channels of |gradient|, without normalization. Expects an
// (h, w, c) gradient tensor.
SaliencyMap gradient_magnitude(const TensorF32& gradient);

// Min-max rescale to [0, 1]. A map with no spread becomes all 1 when its
// values are positive and all 0 otherwise, so an all-zero map stays zero.
SaliencyMap min_max_normalize(SaliencyMap map);

SaliencyMap saliency_from_trace(const ModelGraph& model, const ForwardTrace& trace);
SaliencyMap vanilla_gradient(const ModelGraph& model, const TensorF32& input);

SaliencyMap upscale_map(const SaliencyMap& map, std::size_t target_w, std::size_t target_h);

// 256-entry RGB table for a colormap.
std::span<const std::array<std::uint8_t, 3>, 256> colormap_table(Colormap map) noexcept;
RawImage colorize(const SaliencyMap& map, Colormap colormap);

/// round((1 - alpha) * original + alpha * heat), per channel.
RawImage blend(const RawImage& original, const RawImage& heat, double alpha);

struct ExplainResult {
  RawImage image;  // overlay, or the decoded original when gated off
  Prediction prediction;
  StageTimings timings;
  bool overlay_applied = false;
  double saliency_micros = 0.0;
};

// Predicts, then overlays saliency when the label is ai or when
// detector.saliency_on_positive_only is false.
ExplainResult explain_image(const ModelGraph& model, RawImage original,
                            const OverlayConfig& overlay, const DetectorConfig& detector = {});
ExplainResult explain(const ModelGraph& model, std::span<const std::uint8_t> original_bytes,
                      const OverlayConfig& overlay, const DetectorConfig& detector = {});

}  // namespace pve
