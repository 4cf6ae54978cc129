#include <png.h>
#include <jpeglib.h>

#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <string>

#include "pve/error.hpp"
#include "pve/image.hpp"

namespace pve {

RawImage::RawImage(std::size_t w, std::size_t h, std::uint8_t fill)
    : width(w), height(h), pixels(w * h * 3, fill) {
  if (w == 0 || h == 0) throw Error(Errc::invalid_argument, "image dimensions must be >= 1");
}

RawImage::RawImage(std::size_t w, std::size_t h, std::vector<std::uint8_t> rgb)
    : width(w), height(h), pixels(std::move(rgb)) {
  if (w == 0 || h == 0) throw Error(Errc::invalid_argument, "image dimensions must be >= 1");
  if (pixels.size() != w * h * 3) {
    throw Error(Errc::size_mismatch, "pixel buffer length does not match width*height*3");
  }
}

ImageFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept {
  static constexpr std::uint8_t kPng[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPng, 8) == 0) return ImageFormat::png;
  if (bytes.size() >= 3 && bytes[0] == 0xff && bytes[1] == 0xd8 && bytes[2] == 0xff) {
    return ImageFormat::jpeg;
  }
  return ImageFormat::unknown;
}

namespace {

// APNG files carry an acTL chunk ahead of the first IDAT.
bool is_animated_png(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 8;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t len = static_cast<std::uint32_t>(bytes[pos]) << 24 |
                              static_cast<std::uint32_t>(bytes[pos + 1]) << 16 |
                              static_cast<std::uint32_t>(bytes[pos + 2]) << 8 | bytes[pos + 3];
    const char* type = reinterpret_cast<const char*>(bytes.data() + pos + 4);
    if (std::memcmp(type, "acTL", 4) == 0) return true;
    if (std::memcmp(type, "IDAT", 4) == 0) return false;
    pos += 12 + static_cast<std::size_t>(len);
  }
  return false;
}

RawImage decode_png(std::span<const std::uint8_t> bytes) {
  if (is_animated_png(bytes)) {
    throw Error(Errc::unsupported_format, "animated PNG is not supported");
  }
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    throw Error(Errc::corrupt_stream, std::string("PNG header: ") + img.message);
  }
  img.format = PNG_FORMAT_RGBA;
  std::vector<std::uint8_t> rgba(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, rgba.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(Errc::corrupt_stream, std::string("PNG data: ") + img.message);
  }
  RawImage out(img.width, img.height);
  const std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  for (std::size_t i = 0; i < n; ++i) {
    const unsigned a = rgba[4 * i + 3];
    for (int c = 0; c < 3; ++c) {
      // round((a*src + (255-a)*255) / 255), half up
      const unsigned num = a * rgba[4 * i + c] + (255 - a) * 255;
      out.pixels[3 * i + c] = static_cast<std::uint8_t>((2 * num + 255) / 510);
    }
  }
  return out;
}

struct JpegErrorManager {
  jpeg_error_mgr base;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
  bool warned;
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, mgr->message);
  std::longjmp(mgr->jump, 1);
}

// Corrupt-data warnings (level -1) mark the stream as damaged; trace
// messages are dropped.
void jpeg_emit_message(j_common_ptr cinfo, int level) {
  auto* mgr = reinterpret_cast<JpegErrorManager*>(cinfo->err);
  if (level < 0 && !mgr->warned) {
    (*cinfo->err->format_message)(cinfo, mgr->message);
    mgr->warned = true;
  }
}

RawImage decode_jpeg(std::span<const std::uint8_t> bytes) {
  jpeg_decompress_struct cinfo;
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  err.base.emit_message = jpeg_emit_message;
  std::vector<std::uint8_t> pixels;
  std::vector<std::uint8_t> row;
  std::size_t width = 0, height = 0;
  int components = 0;
  bool unsupported = false;

  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw Error(Errc::corrupt_stream, std::string("JPEG: ") + err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space == JCS_GRAYSCALE) {
    cinfo.out_color_space = JCS_GRAYSCALE;
  } else if (cinfo.jpeg_color_space == JCS_YCbCr || cinfo.jpeg_color_space == JCS_RGB) {
    cinfo.out_color_space = JCS_RGB;
  } else {
    unsupported = true;
  }
  if (!unsupported) {
    jpeg_start_decompress(&cinfo);
    width = cinfo.output_width;
    height = cinfo.output_height;
    components = cinfo.output_components;
    pixels.resize(width * height * 3);
    row.resize(width * static_cast<std::size_t>(components));
    while (cinfo.output_scanline < cinfo.output_height) {
      const std::size_t y = cinfo.output_scanline;
      JSAMPROW rows[1] = {row.data()};
      jpeg_read_scanlines(&cinfo, rows, 1);
      std::uint8_t* dst = pixels.data() + y * width * 3;
      if (components == 1) {
        for (std::size_t x = 0; x < width; ++x) dst[3 * x] = dst[3 * x + 1] = dst[3 * x + 2] = row[x];
      } else {
        std::memcpy(dst, row.data(), width * 3);
      }
    }
    jpeg_finish_decompress(&cinfo);
  }
  jpeg_destroy_decompress(&cinfo);
  if (unsupported) throw Error(Errc::unsupported_format, "JPEG color space is not gray/RGB");
  if (err.warned) throw Error(Errc::corrupt_stream, std::string("JPEG: ") + err.message);
  return RawImage(width, height, std::move(pixels));
}

std::vector<std::uint8_t> write_png(std::size_t width, std::size_t height, png_uint_32 format,
                                    std::span<const std::uint8_t> data) {
  png_image img;
  std::memset(&img, 0, sizeof img);
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(width);
  img.height = static_cast<png_uint_32>(height);
  img.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&img, nullptr, &size, 0, data.data(), 0, nullptr)) {
    throw Error(Errc::io, std::string("PNG encode: ") + img.message);
  }
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&img, out.data(), &size, 0, data.data(), 0, nullptr)) {
    throw Error(Errc::io, std::string("PNG encode: ") + img.message);
  }
  out.resize(size);
  return out;
}

}  // namespace

RawImage decode_image(std::span<const std::uint8_t> bytes) {
  switch (sniff_format(bytes)) {
    case ImageFormat::png: return decode_png(bytes);
    case ImageFormat::jpeg: return decode_jpeg(bytes);
    case ImageFormat::unknown: break;
  }
  throw Error(Errc::unsupported_format, "input is neither PNG nor JPEG");
}

std::vector<std::uint8_t> encode_png(const RawImage& image) {
  return write_png(image.width, image.height, PNG_FORMAT_RGB, image.pixels);
}

std::vector<std::uint8_t> encode_png_rgba(std::size_t width, std::size_t height,
                                          std::span<const std::uint8_t> rgba) {
  if (rgba.size() != width * height * 4) throw Error(Errc::size_mismatch, "RGBA buffer size");
  return write_png(width, height, PNG_FORMAT_RGBA, rgba);
}

std::vector<std::uint8_t> encode_png_gray(std::size_t width, std::size_t height,
                                          std::span<const std::uint8_t> gray) {
  if (gray.size() != width * height) throw Error(Errc::size_mismatch, "gray buffer size");
  return write_png(width, height, PNG_FORMAT_GRAY, gray);
}

std::vector<std::uint8_t> encode_jpeg(const RawImage& image, int quality, bool grayscale) {
  jpeg_compress_struct cinfo;
  JpegErrorManager err{};
  cinfo.err = jpeg_std_error(&err.base);
  err.base.error_exit = jpeg_error_exit;
  unsigned char* buffer = nullptr;
  unsigned long size = 0;
  std::vector<std::uint8_t> row(image.width * 3);
  if (setjmp(err.jump)) {
    jpeg_destroy_compress(&cinfo);
    std::free(buffer);
    throw Error(Errc::io, std::string("JPEG encode: ") + err.message);
  }
  jpeg_create_compress(&cinfo);
  jpeg_mem_dest(&cinfo, &buffer, &size);
  cinfo.image_width = static_cast<JDIMENSION>(image.width);
  cinfo.image_height = static_cast<JDIMENSION>(image.height);
  cinfo.input_components = grayscale ? 1 : 3;
  cinfo.in_color_space = grayscale ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_set_defaults(&cinfo);
  jpeg_set_quality(&cinfo, quality, TRUE);
  jpeg_start_compress(&cinfo, TRUE);
  while (cinfo.next_scanline < cinfo.image_height) {
    const std::uint8_t* src = image.pixel(0, cinfo.next_scanline);
    if (grayscale) {
      for (std::size_t x = 0; x < image.width; ++x) row[x] = src[3 * x];
    } else {
      std::memcpy(row.data(), src, image.width * 3);
    }
    JSAMPROW rows[1] = {row.data()};
    jpeg_write_scanlines(&cinfo, rows, 1);
  }
  jpeg_finish_compress(&cinfo);
  jpeg_destroy_compress(&cinfo);
  std::vector<std::uint8_t> out(buffer, buffer + size);
  std::free(buffer);
  return out;
}

}  // namespace pve
