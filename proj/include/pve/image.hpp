#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pve/tensor.hpp"

namespace pve {

/// 8-bit RGB image, row-major, 3 bytes per pixel.
struct RawImage {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<std::uint8_t> pixels;

  RawImage() = default;
  RawImage(std::size_t w, std::size_t h, std::uint8_t fill = 0);
  RawImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb);

  std::uint8_t* pixel(std::size_t x, std::size_t y) noexcept {
    return pixels.data() + (y * width + x) * 3;
  }
  const std::uint8_t* pixel(std::size_t x, std::size_t y) const noexcept {
    return pixels.data() + (y * width + x) * 3;
  }

  bool operator==(const RawImage&) const = default;
};

inline constexpr std::size_t kModelSide = 256;

enum class ImageFormat { png, jpeg, unknown };
ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept;

// PNG (8/16-bit gray, RGB, RGBA, palette) or baseline JPEG. Alpha is
// composited over white and gray is replicated to RGB. Animated PNGs are
// rejected.
RawImage decode_image(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> encode_png(const RawImage& image);
std::vector<std::uint8_t> encode_png_rgba(std::size_t width, std::size_t height,
                                          std::span<const std::uint8_t> rgba);
std::vector<std::uint8_t> encode_png_gray(std::size_t width, std::size_t height,
                                          std::span<const std::uint8_t> gray);
std::vector<std::uint8_t> encode_jpeg(const RawImage& image, int quality = 90,
                                      bool grayscale = false);

// Bilinear, half-pixel centers, source coordinates clamped at the borders.
RawImage resize_bilinear(const RawImage& image, std::size_t out_w, std::size_t out_h);

/// (256, 256, 3) tensor with value = pixel / 255. Throws size_mismatch for
/// other sizes.
TensorF32 normalize(const RawImage& image);

TensorF32 preprocess(const RawImage& decoded);
TensorF32 preprocess(std::span<const std::uint8_t> bytes);

}  // namespace pve
