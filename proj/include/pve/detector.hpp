#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include "pve/engine.hpp"
#include "pve/image.hpp"

namespace pve {

// Per-class counts of the published training corpus. kBiasHumanCount is the
// human count used by the published bias value; kCorpusHumanCount is the
// per-dataset total. Both are kept as given.
inline constexpr std::uint64_t kCorpusAiCount = 190549;
inline constexpr std::uint64_t kCorpusHumanCount = 81444;
inline constexpr std::uint64_t kBiasHumanCount = 81457;

enum class Label { human, ai };
std::string_view to_string(Label label) noexcept;

struct DetectorConfig {
  double threshold = 0.5;
  bool saliency_on_positive_only = true;

  void validate() const;
};

struct Prediction {
  double probability = 0.0;
  Label label = Label::human;
  double threshold = 0.5;
  double inference_micros = 0.0;  // preprocess + forward, decode excluded
};

/// ln(n_ai / n_human). Installed as the output bias of a zero-weight network,
/// sigmoid(bias) equals the class prior n_ai / (n_ai + n_human).
double init_output_bias(std::uint64_t n_ai, std::uint64_t n_human);

// ai iff probability >= threshold.
Label classify(double probability, const DetectorConfig& config);

struct StageTimings {
  double decode_micros = 0.0;
  double preprocess_micros = 0.0;
  double forward_micros = 0.0;
};

struct DetailedPrediction {
  Prediction prediction;
  StageTimings timings;
  RawImage original;
  ForwardTrace trace;
};

DetailedPrediction predict_detailed(const ModelGraph& model, std::span<const std::uint8_t> bytes,
                                    const DetectorConfig& config);
DetailedPrediction predict_image(const ModelGraph& model, RawImage image,
                                 const DetectorConfig& config);

Prediction predict(const ModelGraph& model, std::span<const std::uint8_t> bytes,
                   const DetectorConfig& config = {});

}  // namespace pve
