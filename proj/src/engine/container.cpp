#include <zlib.h>

#include <bit>
#include <cstring>
#include <json.hpp>
#include <string>

#include "pve/engine.hpp"
#include "pve/error.hpp"

namespace pve {

namespace {

using json = nlohmann::json;

constexpr std::uint8_t kMagic[4] = {'P', 'V', 'E', '1'};
constexpr int kFormatVersion = 1;

static_assert(std::numeric_limits<float>::is_iec559);

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<std::uint8_t>(v >> (8 * b)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | static_cast<std::uint32_t>(p[1]) << 8 |
         static_cast<std::uint32_t>(p[2]) << 16 | static_cast<std::uint32_t>(p[3]) << 24;
}

std::uint32_t crc32_of(std::span<const std::uint8_t> bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks for very large blobs.
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(bytes.size() - pos, 1u << 30));
    crc = crc32(crc, bytes.data() + pos, chunk);
    pos += chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

json hyperparams_to_json(const LayerSpec& layer) {
  const Hyperparams& hp = layer.hp;
  switch (layer.kind) {
    case LayerKind::conv2d:
      return {{"kernel_h", hp.kernel_h},       {"kernel_w", hp.kernel_w},
              {"stride", hp.stride},           {"pad", hp.pad},
              {"in_channels", hp.in_channels}, {"out_channels", hp.out_channels}};
    case LayerKind::maxpool2d:
      return {{"pool", hp.pool}, {"stride", hp.stride}};
    case LayerKind::dense:
      return {{"in_features", hp.in_features}, {"out_features", hp.out_features}};
    case LayerKind::add_skip:
      return {{"source", hp.source}};
    case LayerKind::relu:
    case LayerKind::global_avg_pool:
    case LayerKind::sigmoid_output:
      break;
  }
  return json::object();
}

std::size_t field(const json& obj, const char* key, std::size_t layer) {
  auto it = obj.find(key);
  if (it == obj.end() || !it->is_number_unsigned()) {
    throw Error(Errc::malformed_header, std::string("missing or invalid field '") + key + "'",
                layer);
  }
  return it->get<std::size_t>();
}

Hyperparams hyperparams_from_json(LayerKind kind, const json& obj, std::size_t layer) {
  if (!obj.is_object()) throw Error(Errc::malformed_header, "hyperparams must be an object", layer);
  Hyperparams hp;
  switch (kind) {
    case LayerKind::conv2d:
      hp.kernel_h = field(obj, "kernel_h", layer);
      hp.kernel_w = field(obj, "kernel_w", layer);
      hp.stride = field(obj, "stride", layer);
      hp.pad = field(obj, "pad", layer);
      hp.in_channels = field(obj, "in_channels", layer);
      hp.out_channels = field(obj, "out_channels", layer);
      break;
    case LayerKind::maxpool2d:
      hp.pool = field(obj, "pool", layer);
      hp.stride = field(obj, "stride", layer);
      break;
    case LayerKind::dense:
      hp.in_features = field(obj, "in_features", layer);
      hp.out_features = field(obj, "out_features", layer);
      break;
    case LayerKind::add_skip:
      hp.source = field(obj, "source", layer);
      break;
    case LayerKind::relu:
    case LayerKind::global_avg_pool:
    case LayerKind::sigmoid_output:
      break;
  }
  return hp;
}

}  // namespace

std::vector<std::uint8_t> save_model(const ModelGraph& model) {
  validate(model);
  json header;
  header["format_version"] = kFormatVersion;
  header["name"] = model.metadata.name;
  header["version"] = model.metadata.version;
  header["input_shape"] = model.input_shape;
  header["n_ai"] = model.metadata.n_ai;
  header["n_human"] = model.metadata.n_human;
  json layers = json::array();
  for (const auto& layer : model.layers) {
    layers.push_back({{"kind", std::string(to_string(layer.kind))},
                      {"hyperparams", hyperparams_to_json(layer)},
                      {"weight_offset", layer.weight_offset},
                      {"weight_len", layer.weight_len},
                      {"bias_offset", layer.bias_offset},
                      {"bias_len", layer.bias_len}});
  }
  header["layers"] = std::move(layers);
  // nlohmann::json objects keep keys sorted, so the dump is canonical.
  const std::string text = header.dump();

  std::vector<std::uint8_t> out(8 + text.size());
  out.reserve(out.size() + 4 * model.weights.size() + 4);
  std::memcpy(out.data(), kMagic, 4);
  const auto header_len = static_cast<std::uint32_t>(text.size());
  for (int b = 0; b < 4; ++b) out[4 + b] = static_cast<std::uint8_t>(header_len >> (8 * b));
  std::memcpy(out.data() + 8, text.data(), text.size());
  for (float w : model.weights) put_u32(out, std::bit_cast<std::uint32_t>(w));
  put_u32(out, crc32_of(out));
  return out;
}

ModelGraph load_model(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(Errc::malformed_header, "missing PVE1 magic");
  }
  const std::size_t header_len = get_u32(bytes.data() + 4);
  if (header_len > bytes.size() - 12) {
    throw Error(Errc::malformed_header, "header length exceeds container size");
  }
  const auto body = bytes.first(bytes.size() - 4);
  if (crc32_of(body) != get_u32(bytes.data() + bytes.size() - 4)) {
    throw Error(Errc::checksum_mismatch, "CRC32 does not match container contents");
  }
  const std::size_t blob_bytes = body.size() - 8 - header_len;
  if (blob_bytes % 4 != 0) {
    throw Error(Errc::malformed_header, "weight blob length is not a multiple of 4");
  }

  json header;
  try {
    header = json::parse(body.begin() + 8, body.begin() + 8 + static_cast<long>(header_len));
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_header, std::string("header is not valid JSON: ") + e.what());
  }
  if (!header.is_object()) throw Error(Errc::malformed_header, "header must be a JSON object");

  ModelGraph model;
  try {
    if (header.at("format_version").get<int>() != kFormatVersion) {
      throw Error(Errc::malformed_header, "unsupported format_version");
    }
    model.metadata.name = header.at("name").get<std::string>();
    model.metadata.version = header.at("version").get<std::string>();
    model.metadata.n_ai = header.at("n_ai").get<std::uint64_t>();
    model.metadata.n_human = header.at("n_human").get<std::uint64_t>();
    model.input_shape = header.at("input_shape").get<Shape>();
    const json& layers = header.at("layers");
    if (!layers.is_array()) throw Error(Errc::malformed_header, "layers must be an array");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const json& entry = layers[i];
      if (!entry.is_object()) throw Error(Errc::malformed_header, "layer must be an object", i);
      LayerSpec layer;
      layer.kind = layer_kind_from_string(entry.at("kind").get<std::string>(), i);
      layer.hp = hyperparams_from_json(layer.kind, entry.at("hyperparams"), i);
      layer.weight_offset = field(entry, "weight_offset", i);
      layer.weight_len = field(entry, "weight_len", i);
      layer.bias_offset = field(entry, "bias_offset", i);
      layer.bias_len = field(entry, "bias_len", i);
      model.layers.push_back(layer);
    }
  } catch (const json::exception& e) {
    throw Error(Errc::malformed_header, std::string("bad header field: ") + e.what());
  }
  if (model.input_shape != kDetectorInputShape) {
    throw Error(Errc::shape_inference, "input_shape must be (256, 256, 3), got " +
                                          shape_to_string(model.input_shape));
  }

  model.weights.resize(blob_bytes / 4);
  const std::uint8_t* blob = body.data() + 8 + header_len;
  for (std::size_t i = 0; i < model.weights.size(); ++i) {
    model.weights[i] = std::bit_cast<float>(get_u32(blob + 4 * i));
  }
  validate(model);
  return model;
}

}  // namespace pve
