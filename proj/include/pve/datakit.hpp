#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pve/detector.hpp"
#include "pve/engine.hpp"
#include "pve/image.hpp"

namespace pve {

struct ManifestEntry {
  std::string path;
  Label label = Label::human;
  std::string source;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
};

// `path<TAB>label<TAB>source` per line; labels are "ai" / "human".
DatasetManifest parse_manifest(std::string_view text);
DatasetManifest read_manifest(const std::filesystem::path& file);
std::string format_manifest(const DatasetManifest& manifest);

enum class Split { train, val, test };
std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view name);

struct SplitRatios {
  double train = 0.6;
  double val = 0.2;
  double test = 0.2;
};

struct SplitAssignment {
  std::vector<Split> splits;  // parallel to manifest entries
  std::uint64_t seed = 0;
  SplitRatios ratios;

  std::vector<std::size_t> indices_of(Split split) const;
};

struct SplitOptions {
  // Stratify by (label, source) instead of label alone.
  bool per_source = false;
};

// Sizes of the three parts for one stratum of n items: val and test each
// get round(0.2 n), train gets the rest.
std::array<std::size_t, 3> split_sizes(std::size_t n);

/// Deterministic stratified 60/20/20 partition. Within each stratum the
/// items (in manifest order) are shuffled by a seeded Fisher-Yates pass and
/// cut into train, val, test.
SplitAssignment stratified_split(const DatasetManifest& manifest, std::uint64_t seed,
                                 SplitOptions options = {});

// `path<TAB>split` per line, in manifest order.
std::string format_split(const DatasetManifest& manifest, const SplitAssignment& split);
SplitAssignment parse_split(const DatasetManifest& manifest, std::string_view text);

// Uniform integer in [0, bound) from a 64-bit engine, without modulo bias and
// independent of the standard library's distribution implementations.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound);
double uniform_unit(std::mt19937_64& rng);

struct AugmentConfig {
  double hflip_prob = 0.5;
  double max_rotation_degrees = 10.0;
  double contrast_min = 0.8;
  double contrast_max = 1.25;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AugmentDraw {
  bool flip = false;
  double rotation_degrees = 0.0;
  double contrast = 1.0;
};

AugmentDraw draw_augment(const AugmentConfig& config, std::mt19937_64& rng);

RawImage hflip(const RawImage& image);
// Rotation about the image center, bilinear, edge pixels clamped.
RawImage rotate(const RawImage& image, double degrees);
// clamp(round(c * (p - 128) + 128), 0, 255)
RawImage adjust_contrast(const RawImage& image, double factor);

// flip -> rotate -> contrast
RawImage augment(const RawImage& image, const AugmentDraw& draw);

struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  double accuracy = 0.0;
  double precision = 0.0;  // 0 when nothing was predicted ai
  double recall = 0.0;     // 0 when there are no ai examples
  double loss = 0.0;       // mean binary cross-entropy, p clamped to [1e-7, 1 - 1e-7]
};

Metrics compute_metrics(std::span<const double> probabilities, std::span<const Label> labels,
                        double threshold);

using ImageLoader = std::function<RawImage(const std::string& path)>;

// Reads a file from disk and decodes it; relative paths resolve against
// `base_dir`.
ImageLoader file_loader(std::filesystem::path base_dir = {});

Metrics evaluate(const ModelGraph& model, const DatasetManifest& manifest,
                 const SplitAssignment& split, Split which, double threshold,
                 const ImageLoader& loader);

struct TrainConfig {
  std::size_t epochs = 20;
  double learning_rate = 0.02;
  std::size_t batch_size = 16;
  std::uint64_t seed = 0;
  AugmentConfig augment;
  bool augment_train = true;
  // Stop after the first epoch whose validation accuracy reaches this value.
  std::optional<double> stop_at_val_accuracy;
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;  // mean over the epoch's examples, pre-update
  Metrics val;
};

struct TrainResult {
  ModelGraph model;
  std::vector<EpochStats> history;
};

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch SGD on binary cross-entropy. Weights get Kaiming-uniform init
/// (output layer zeroed), the output bias is set from the training-split
/// class counts, and augmentation touches the train split only.
TrainResult train_toy(const ModelGraph& arch, const DatasetManifest& manifest,
                      const SplitAssignment& split, const TrainConfig& config,
                      const ImageLoader& loader, const EpochCallback& on_epoch = {});

struct SyntheticCorpusConfig {
  std::size_t count = 1000;  // split evenly between classes
  std::size_t side = 256;
  std::uint64_t seed = 1;
  double artifact_amplitude = 24.0;
};

/// Smooth value-noise image; with `artifact` a period-4 checkerboard
/// is added on top.
RawImage synthetic_image(std::size_t side, bool artifact, double amplitude, std::mt19937_64& rng);

/// Writes PNGs and a manifest.tsv into `dir`; returns the manifest (paths
/// relative to `dir`).
DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir,
                                       const SyntheticCorpusConfig& config);

}  // namespace pve
