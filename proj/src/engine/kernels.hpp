#pragma once

#include <span>

#include "pve/engine.hpp"

namespace pve::detail {

void conv2d_forward(const Hyperparams& hp, const TensorF32& in, std::span<const float> weights,
                    std::span<const float> bias, TensorF32& out);
void maxpool_forward(const Hyperparams& hp, const TensorF32& in, TensorF32& out);
void global_avg_pool_forward(const TensorF32& in, TensorF32& out);
void dense_forward(const Hyperparams& hp, const TensorF32& in, std::span<const float> weights,
                   std::span<const float> bias, TensorF32& out);

// Flat index into `in` of the first maximal element of one pooling window.
std::size_t maxpool_argmax(const TensorF32& in, const Hyperparams& hp, std::size_t oy,
                           std::size_t ox, std::size_t c);

}  // namespace pve::detail
