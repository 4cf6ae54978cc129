#pragma once

#include "pve/image.hpp"
#include "pve/tensor.hpp"

namespace pve::detail {

// Resize to the model's (h, w) and scale to [0, 1]. Identical to preprocess()
// for 256x256x3 models.
TensorF32 to_model_input(const RawImage& image, const Shape& input_shape);

}  // namespace pve::detail
