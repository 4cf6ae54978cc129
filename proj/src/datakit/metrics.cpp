#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>

#include "pve/datakit.hpp"
#include "pve/error.hpp"
#include "training_input.hpp"

namespace pve {

Metrics compute_metrics(std::span<const double> probabilities, std::span<const Label> labels,
                        double threshold) {
  if (probabilities.size() != labels.size()) {
    throw Error(Errc::size_mismatch, "probabilities and labels differ in length");
  }
  if (probabilities.empty()) throw Error(Errc::empty_split, "no examples to evaluate");
  Metrics m;
  const DetectorConfig config{.threshold = threshold};
  double loss = 0.0;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const bool truth = labels[i] == Label::ai;
    const bool predicted = classify(probabilities[i], config) == Label::ai;
    if (predicted && truth) ++m.tp;
    else if (predicted) ++m.fp;
    else if (truth) ++m.fn;
    else ++m.tn;
    const double p = std::clamp(probabilities[i], 1e-7, 1.0 - 1e-7);
    loss += truth ? -std::log(p) : -std::log(1.0 - p);
  }
  const auto total = static_cast<double>(probabilities.size());
  m.accuracy = static_cast<double>(m.tp + m.tn) / total;
  m.precision = m.tp + m.fp ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fp) : 0.0;
  m.recall = m.tp + m.fn ? static_cast<double>(m.tp) / static_cast<double>(m.tp + m.fn) : 0.0;
  m.loss = loss / total;
  return m;
}

ImageLoader file_loader(std::filesystem::path base_dir) {
  return [base = std::move(base_dir)](const std::string& path) {
    std::filesystem::path p(path);
    if (p.is_relative() && !base.empty()) p = base / p;
    std::ifstream in(p, std::ios::binary);
    if (!in) throw Error(Errc::io, "cannot open " + p.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                          std::istreambuf_iterator<char>());
    return decode_image(bytes);
  };
}

namespace detail {

TensorF32 to_model_input(const RawImage& image, const Shape& input_shape) {
  if (input_shape.size() != 3 || input_shape[2] != 3) {
    throw Error(Errc::shape_mismatch, "model input must be (h, w, 3)");
  }
  const RawImage sized = resize_bilinear(image, input_shape[1], input_shape[0]);
  TensorF32 out(input_shape);
  std::transform(sized.pixels.begin(), sized.pixels.end(), out.data().begin(),
                 [](std::uint8_t p) { return static_cast<float>(p / 255.0); });
  return out;
}

}  // namespace detail

Metrics evaluate(const ModelGraph& model, const DatasetManifest& manifest,
                 const SplitAssignment& split, Split which, double threshold,
                 const ImageLoader& loader) {
  const auto indices = split.indices_of(which);
  if (indices.empty()) {
    throw Error(Errc::empty_split, "split '" + std::string(to_string(which)) + "' is empty");
  }
  std::vector<double> probs;
  std::vector<Label> labels;
  for (auto i : indices) {
    const auto& entry = manifest.entries[i];
    probs.push_back(forward(model, detail::to_model_input(loader(entry.path), model.input_shape))
                        .probability);
    labels.push_back(entry.label);
  }
  return compute_metrics(probs, labels, threshold);
}

}  // namespace pve
