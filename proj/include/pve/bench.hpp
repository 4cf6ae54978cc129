#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pve/engine.hpp"
#include "pve/image.hpp"
#include "pve/saliency.hpp"

namespace pve {

/// Nearest-rank percentile: the ceil(p/100 * n)-th smallest sample (1-based).
/// `percent` must be in [1, 100]; `samples` need not be sorted.
double percentile_nearest_rank(std::span<const double> samples, unsigned percent);

struct StageStats {
  std::vector<double> samples;  // microseconds, in run order
  double p50 = 0, p90 = 0, p95 = 0, mean = 0, stddev = 0, min = 0, max = 0;
};

StageStats summarize(std::vector<double> samples);

enum class BenchStage { all, forward, saliency };
BenchStage bench_stage_from_string(const std::string& name);
std::string to_string(BenchStage stage);

struct BenchConfig {
  std::size_t iterations = 100;
  std::size_t warmup = 10;
  BenchStage stage = BenchStage::all;
};

struct BenchmarkReport {
  std::string model_name;
  std::string input_description;
  std::string hardware;
  std::string percentile_method = "nearest-rank";
  std::size_t warmup = 0;
  std::size_t iterations = 0;
  BenchStage stage = BenchStage::all;
  StageStats preprocess, forward, saliency, end_to_end;
};

// The timed pipeline. Each call performs one stage on the target's own state.
class BenchTarget {
 public:
  virtual ~BenchTarget() = default;
  virtual void preprocess() = 0;
  virtual void forward() = 0;
  virtual void saliency() = 0;
};

class EngineBenchTarget final : public BenchTarget {
 public:
  EngineBenchTarget(const ModelGraph& model, RawImage image);
  void preprocess() override;
  void forward() override;
  void saliency() override;

 private:
  const ModelGraph& model_;
  RawImage image_;
  TensorF32 input_;
  ForwardTrace trace_;
  SaliencyMap map_;
};

/// Warmup iterations run every timed stage but are not recorded. Stages not
/// selected by config.stage run untimed once up front (when needed) and
/// report no samples.
BenchmarkReport run_benchmark(BenchTarget& target, const BenchConfig& config);

// Fixed-seed uniform noise image, 256x256.
RawImage synthetic_bench_image(std::uint64_t seed = 42);

std::string hardware_description();

std::string report_to_json(const BenchmarkReport& report, int indent = 2);
std::string report_to_table(const BenchmarkReport& report);

}  // namespace pve
