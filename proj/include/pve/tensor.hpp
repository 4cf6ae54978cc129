#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace pve {

// Row-major dims; images are (height, width, channels).
using Shape = std::vector<std::size_t>;

std::size_t element_count(const Shape& shape) noexcept;
std::string shape_to_string(const Shape& shape);

/// Dense float32 tensor. product(shape) == data.size() always holds for
/// tensors built through the constructors.
class TensorF32 {
 public:
  TensorF32() = default;
  explicit TensorF32(Shape shape, float fill = 0.0f);
  TensorF32(Shape shape, std::vector<float> data);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::size_t rank() const noexcept { return shape_.size(); }

  std::span<float> data() noexcept { return data_; }
  std::span<const float> data() const noexcept { return data_; }

  float& operator[](std::size_t i) noexcept { return data_[i]; }
  float operator[](std::size_t i) const noexcept { return data_[i]; }

  // (y, x, c) access for rank-3 tensors.
  float& at(std::size_t y, std::size_t x, std::size_t c) noexcept {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const noexcept {
    return data_[(y * shape_[1] + x) * shape_[2] + c];
  }

  bool operator==(const TensorF32&) const = default;

 private:
  Shape shape_;
  std::vector<float> data_;
};

}  // namespace pve
