#include "pve/error.hpp"

namespace pve {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::malformed_header: return "malformed_header";
    case Errc::checksum_mismatch: return "checksum_mismatch";
    case Errc::shape_inference: return "shape_inference";
    case Errc::unsupported_layer: return "unsupported_layer";
    case Errc::invalid_model: return "invalid_model";
    case Errc::shape_mismatch: return "shape_mismatch";
    case Errc::trace_mismatch: return "trace_mismatch";
    case Errc::unsupported_format: return "unsupported_format";
    case Errc::corrupt_stream: return "corrupt_stream";
    case Errc::size_mismatch: return "size_mismatch";
    case Errc::invalid_argument: return "invalid_argument";
    case Errc::unknown_colormap: return "unknown_colormap";
    case Errc::class_too_small: return "class_too_small";
    case Errc::empty_split: return "empty_split";
    case Errc::divergence: return "divergence";
    case Errc::io: return "io";
  }
  return "unknown";
}

namespace {

std::string decorate(Errc code, const std::string& what, std::optional<std::size_t> layer,
                     std::optional<std::size_t> epoch) {
  std::string out(to_string(code));
  if (layer) out += " at layer " + std::to_string(*layer);
  if (epoch) out += " at epoch " + std::to_string(*epoch);
  out += ": ";
  out += what;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> layer,
             std::optional<std::size_t> epoch)
    : std::runtime_error(decorate(code, what, layer, epoch)),
      code_(code),
      layer_(layer),
      epoch_(epoch) {}

}  // namespace pve
