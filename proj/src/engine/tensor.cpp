#include "pve/tensor.hpp"

#include <functional>
#include <numeric>

#include "pve/error.hpp"

namespace pve {

std::size_t element_count(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

TensorF32::TensorF32(Shape shape, float fill)
    : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

TensorF32::TensorF32(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (element_count(shape_) != data_.size()) {
    throw Error(Errc::size_mismatch, "tensor data length " + std::to_string(data_.size()) +
                                         " does not match shape " + shape_to_string(shape_));
  }
}

}  // namespace pve
