#include <cmath>
#include <unordered_map>

#include "pve/datakit.hpp"
#include "pve/error.hpp"
#include "pve/model_zoo.hpp"
#include "training_input.hpp"

namespace pve {

namespace {

double bce(double p, bool truth) {
  p = std::clamp(p, 1e-7, 1.0 - 1e-7);
  return truth ? -std::log(p) : -std::log(1.0 - p);
}

}  // namespace

TrainResult train_toy(const ModelGraph& arch, const DatasetManifest& manifest,
                      const SplitAssignment& split, const TrainConfig& config,
                      const ImageLoader& loader, const EpochCallback& on_epoch) {
  if (split.splits.size() != manifest.entries.size()) {
    throw Error(Errc::size_mismatch, "split does not cover the manifest");
  }
  if (config.batch_size == 0) throw Error(Errc::invalid_argument, "batch_size must be positive");
  config.augment.validate();
  validate(arch);

  const auto train_idx = split.indices_of(Split::train);
  const auto val_idx = split.indices_of(Split::val);
  std::uint64_t n_ai = 0, n_human = 0;
  for (auto i : train_idx) (manifest.entries[i].label == Label::ai ? n_ai : n_human)++;

  TrainResult result;
  result.model = arch;
  ModelGraph& model = result.model;
  kaiming_init(model, config.seed);
  set_output_bias(model, init_output_bias(n_ai, n_human));
  model.metadata.n_ai = n_ai;
  model.metadata.n_human = n_human;
  if (config.epochs == 0) return result;

  // Decode once; images are kept at model resolution so augmentation runs on
  // what the network sees.
  const std::size_t in_h = model.input_shape[0], in_w = model.input_shape[1];
  std::unordered_map<std::size_t, RawImage> cache;
  for (const auto* list : {&train_idx, &val_idx}) {
    for (auto i : *list) cache.emplace(i, resize_bilinear(loader(manifest.entries[i].path), in_w, in_h));
  }

  std::mt19937_64 order_rng(config.seed ^ 0x9e3779b97f4a7c15ull);
  std::mt19937_64 augment_rng(config.augment.seed ^ config.seed);
  std::vector<double> grads(model.weights.size());
  std::vector<std::size_t> order = train_idx;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    for (std::size_t i = order.size(); i > 1; --i) {
      std::swap(order[i - 1], order[uniform_below(order_rng, i)]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      std::fill(grads.begin(), grads.end(), 0.0);
      for (std::size_t k = start; k < end; ++k) {
        const auto& entry = manifest.entries[order[k]];
        const RawImage& base = cache.at(order[k]);
        const TensorF32 input = detail::to_model_input(
            config.augment_train ? augment(base, draw_augment(config.augment, augment_rng)) : base,
            model.input_shape);
        const ForwardTrace trace = forward(model, input);
        const bool truth = entry.label == Label::ai;
        loss_sum += bce(trace.probability, truth);
        backward(model, trace, trace.probability - (truth ? 1.0 : 0.0), grads, false);
      }
      if (!std::isfinite(loss_sum)) {
        throw Error(Errc::divergence, "training loss is not finite", std::nullopt, epoch);
      }
      const double scale = config.learning_rate / static_cast<double>(end - start);
      for (std::size_t w = 0; w < grads.size(); ++w) {
        model.weights[w] = static_cast<float>(model.weights[w] - scale * grads[w]);
      }
    }
    for (float w : model.weights) {
      if (!std::isfinite(w)) {
        throw Error(Errc::divergence, "weights became non-finite", std::nullopt, epoch);
      }
    }

    EpochStats stats;
    stats.epoch = epoch + 1;
    stats.train_loss = order.empty() ? 0.0 : loss_sum / static_cast<double>(order.size());
    if (!val_idx.empty()) {
      std::vector<double> probs;
      std::vector<Label> labels;
      for (auto i : val_idx) {
        probs.push_back(forward(model, detail::to_model_input(cache.at(i), model.input_shape)).probability);
        labels.push_back(manifest.entries[i].label);
      }
      stats.val = compute_metrics(probs, labels, 0.5);
    }
    result.history.push_back(stats);
    if (on_epoch) on_epoch(stats);
    if (config.stop_at_val_accuracy && !val_idx.empty() &&
        stats.val.accuracy >= *config.stop_at_val_accuracy) {
      break;
    }
  }
  return result;
}

}  // namespace pve
