#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace pve {

enum class Errc {
  malformed_header,
  checksum_mismatch,
  shape_inference,
  unsupported_layer,
  invalid_model,
  shape_mismatch,
  trace_mismatch,
  unsupported_format,
  corrupt_stream,
  size_mismatch,
  invalid_argument,
  unknown_colormap,
  class_too_small,
  empty_split,
  divergence,
  io,
};

std::string_view to_string(Errc code) noexcept;

// Every failure in the library surfaces as a pve::Error. `layer()` is set
// for model errors that can be pinned to a layer index, `epoch()` for
// training divergence.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what,
        std::optional<std::size_t> layer = std::nullopt,
        std::optional<std::size_t> epoch = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> layer() const noexcept { return layer_; }
  std::optional<std::size_t> epoch() const noexcept { return epoch_; }

 private:
  Errc code_;
  std::optional<std::size_t> layer_;
  std::optional<std::size_t> epoch_;
};

}  // namespace pve
