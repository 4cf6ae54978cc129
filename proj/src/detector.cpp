#include "pve/detector.hpp"

#include <chrono>
#include <cmath>

#include "pve/error.hpp"

namespace pve {

namespace {

using Clock = std::chrono::steady_clock;

double micros_since(Clock::time_point start) {
  return std::chrono::duration<double, std::micro>(Clock::now() - start).count();
}

}  // namespace

std::string_view to_string(Label label) noexcept { return label == Label::ai ? "ai" : "human"; }

void DetectorConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw Error(Errc::invalid_argument, "threshold must lie strictly between 0 and 1");
  }
}

double init_output_bias(std::uint64_t n_ai, std::uint64_t n_human) {
  if (n_ai == 0 || n_human == 0) {
    throw Error(Errc::invalid_argument, "class counts must be positive");
  }
  // Written as a difference of logs so that swapping the classes negates the
  // result exactly.
  return std::log(static_cast<double>(n_ai)) - std::log(static_cast<double>(n_human));
}

Label classify(double probability, const DetectorConfig& config) {
  return probability >= config.threshold ? Label::ai : Label::human;
}

DetailedPrediction predict_image(const ModelGraph& model, RawImage image,
                                 const DetectorConfig& config) {
  config.validate();
  DetailedPrediction out;
  out.original = std::move(image);
  const auto t0 = Clock::now();
  TensorF32 input = preprocess(out.original);
  out.timings.preprocess_micros = micros_since(t0);
  const auto t1 = Clock::now();
  out.trace = forward(model, input);
  out.timings.forward_micros = micros_since(t1);

  out.prediction.probability = out.trace.probability;
  out.prediction.threshold = config.threshold;
  out.prediction.label = classify(out.trace.probability, config);
  out.prediction.inference_micros = out.timings.preprocess_micros + out.timings.forward_micros;
  return out;
}

DetailedPrediction predict_detailed(const ModelGraph& model, std::span<const std::uint8_t> bytes,
                                    const DetectorConfig& config) {
  const auto t0 = Clock::now();
  RawImage image = decode_image(bytes);
  const double decode = micros_since(t0);
  DetailedPrediction out = predict_image(model, std::move(image), config);
  out.timings.decode_micros = decode;
  return out;
}

Prediction predict(const ModelGraph& model, std::span<const std::uint8_t> bytes,
                   const DetectorConfig& config) {
  return predict_detailed(model, bytes, config).prediction;
}

}  // namespace pve
