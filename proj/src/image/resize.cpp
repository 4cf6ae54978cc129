#include <algorithm>
#include <cmath>

#include "pve/error.hpp"
#include "pve/image.hpp"

namespace pve {

namespace {

struct Tap {
  std::size_t i0, i1;
  double frac;
};

Tap sample(std::size_t out_index, std::size_t in_extent, std::size_t out_extent) {
  double src = (static_cast<double>(out_index) + 0.5) * static_cast<double>(in_extent) /
                   static_cast<double>(out_extent) -
               0.5;
  src = std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
  const auto i0 = static_cast<std::size_t>(std::floor(src));
  return {i0, std::min(i0 + 1, in_extent - 1), src - static_cast<double>(i0)};
}

}  // namespace

RawImage resize_bilinear(const RawImage& image, std::size_t out_w, std::size_t out_h) {
  if (image.width == out_w && image.height == out_h) return image;
  RawImage out(out_w, out_h);
  std::vector<Tap> xs(out_w);
  for (std::size_t x = 0; x < out_w; ++x) xs[x] = sample(x, image.width, out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const Tap ty = sample(y, image.height, out_h);
    for (std::size_t x = 0; x < out_w; ++x) {
      const Tap& tx = xs[x];
      const std::uint8_t* p00 = image.pixel(tx.i0, ty.i0);
      const std::uint8_t* p01 = image.pixel(tx.i1, ty.i0);
      const std::uint8_t* p10 = image.pixel(tx.i0, ty.i1);
      const std::uint8_t* p11 = image.pixel(tx.i1, ty.i1);
      std::uint8_t* dst = out.pixel(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p01[c] - p00[c]) * tx.frac;
        const double bottom = p10[c] + (p11[c] - p10[c]) * tx.frac;
        const double v = top + (bottom - top) * ty.frac;
        dst[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

TensorF32 normalize(const RawImage& image) {
  if (image.width != kModelSide || image.height != kModelSide) {
    throw Error(Errc::size_mismatch, "normalize expects a 256x256 image, got " +
                                         std::to_string(image.width) + "x" +
                                         std::to_string(image.height));
  }
  TensorF32 out({kModelSide, kModelSide, 3});
  std::transform(image.pixels.begin(), image.pixels.end(), out.data().begin(),
                 [](std::uint8_t p) { return static_cast<float>(p / 255.0); });
  return out;
}

TensorF32 preprocess(const RawImage& decoded) {
  return normalize(resize_bilinear(decoded, kModelSide, kModelSide));
}

TensorF32 preprocess(std::span<const std::uint8_t> bytes) { return preprocess(decode_image(bytes)); }

}  // namespace pve
