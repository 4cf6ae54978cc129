#include <algorithm>
#include <cmath>
#include <numbers>

#include "pve/datakit.hpp"
#include "pve/error.hpp"

namespace pve {

void AugmentConfig::validate() const {
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0)) {
    throw Error(Errc::invalid_argument, "hflip_prob must lie in [0, 1]");
  }
  if (!(max_rotation_degrees >= 0.0)) {
    throw Error(Errc::invalid_argument, "max_rotation_degrees must be >= 0");
  }
  if (!(contrast_min > 0.0 && contrast_max >= contrast_min)) {
    throw Error(Errc::invalid_argument, "contrast bounds must be positive and ordered");
  }
}

AugmentDraw draw_augment(const AugmentConfig& config, std::mt19937_64& rng) {
  AugmentDraw d;
  d.flip = uniform_unit(rng) < config.hflip_prob;
  d.rotation_degrees = (2.0 * uniform_unit(rng) - 1.0) * config.max_rotation_degrees;
  d.contrast = config.contrast_min + (config.contrast_max - config.contrast_min) * uniform_unit(rng);
  return d;
}

RawImage hflip(const RawImage& image) {
  RawImage out(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      std::copy_n(image.pixel(image.width - 1 - x, y), 3, out.pixel(x, y));
    }
  }
  return out;
}

RawImage rotate(const RawImage& image, double degrees) {
  if (degrees == 0.0) return image;
  const double rad = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const double cx = (static_cast<double>(image.width) - 1.0) / 2.0;
  const double cy = (static_cast<double>(image.height) - 1.0) / 2.0;
  const double max_x = static_cast<double>(image.width - 1);
  const double max_y = static_cast<double>(image.height - 1);
  RawImage out(image.width, image.height);
  for (std::size_t y = 0; y < image.height; ++y) {
    for (std::size_t x = 0; x < image.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const double sx = std::clamp(c * dx + s * dy + cx, 0.0, max_x);
      const double sy = std::clamp(-s * dx + c * dy + cy, 0.0, max_y);
      const auto x0 = static_cast<std::size_t>(sx), y0 = static_cast<std::size_t>(sy);
      const std::size_t x1 = std::min(x0 + 1, image.width - 1);
      const std::size_t y1 = std::min(y0 + 1, image.height - 1);
      const double fx = sx - static_cast<double>(x0), fy = sy - static_cast<double>(y0);
      std::uint8_t* dst = out.pixel(x, y);
      for (int ch = 0; ch < 3; ++ch) {
        const double top = image.pixel(x0, y0)[ch] + (image.pixel(x1, y0)[ch] - image.pixel(x0, y0)[ch]) * fx;
        const double bot = image.pixel(x0, y1)[ch] + (image.pixel(x1, y1)[ch] - image.pixel(x0, y1)[ch]) * fx;
        dst[ch] = static_cast<std::uint8_t>(std::clamp(std::floor(top + (bot - top) * fy + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

RawImage adjust_contrast(const RawImage& image, double factor) {
  if (factor == 1.0) return image;
  RawImage out = image;
  for (auto& p : out.pixels) {
    const double v = factor * (static_cast<double>(p) - 128.0) + 128.0;
    p = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
  }
  return out;
}

RawImage augment(const RawImage& image, const AugmentDraw& draw) {
  RawImage out = draw.flip ? hflip(image) : image;
  out = rotate(out, draw.rotation_degrees);
  return adjust_contrast(out, draw.contrast);
}

}  // namespace pve
