#include "pve/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <json.hpp>
#include <numeric>
#include <random>
#include <thread>

#include "pve/error.hpp"

namespace pve {

double percentile_nearest_rank(std::span<const double> samples, unsigned percent) {
  if (samples.empty()) throw Error(Errc::invalid_argument, "percentile of an empty sample");
  if (percent == 0 || percent > 100) throw Error(Errc::invalid_argument, "percent must be in [1, 100]");
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  // ceil(percent * n / 100) in integer arithmetic
  const std::size_t rank = (percent * sorted.size() + 99) / 100;
  return sorted[rank - 1];
}

StageStats summarize(std::vector<double> samples) {
  StageStats s;
  s.samples = std::move(samples);
  if (s.samples.empty()) return s;
  s.p50 = percentile_nearest_rank(s.samples, 50);
  s.p90 = percentile_nearest_rank(s.samples, 90);
  s.p95 = percentile_nearest_rank(s.samples, 95);
  const auto [lo, hi] = std::minmax_element(s.samples.begin(), s.samples.end());
  s.min = *lo;
  s.max = *hi;
  const double n = static_cast<double>(s.samples.size());
  s.mean = std::accumulate(s.samples.begin(), s.samples.end(), 0.0) / n;
  double var = 0.0;
  for (double v : s.samples) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / n);
  // Guard the [min, max] invariant against summation rounding.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

BenchStage bench_stage_from_string(const std::string& name) {
  if (name == "all") return BenchStage::all;
  if (name == "forward") return BenchStage::forward;
  if (name == "saliency") return BenchStage::saliency;
  throw Error(Errc::invalid_argument, "unknown bench stage '" + name + "'");
}

std::string to_string(BenchStage stage) {
  switch (stage) {
    case BenchStage::all: return "all";
    case BenchStage::forward: return "forward";
    case BenchStage::saliency: return "saliency";
  }
  return "unknown";
}

EngineBenchTarget::EngineBenchTarget(const ModelGraph& model, RawImage image)
    : model_(model), image_(std::move(image)) {}

void EngineBenchTarget::preprocess() { input_ = pve::preprocess(image_); }
void EngineBenchTarget::forward() { trace_ = pve::forward(model_, input_); }
void EngineBenchTarget::saliency() { map_ = saliency_from_trace(model_, trace_); }

namespace {

using Clock = std::chrono::steady_clock;

template <typename Fn>
double time_micros(Fn&& fn) {
  const auto t0 = Clock::now();
  fn();
  return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

}  // namespace

BenchmarkReport run_benchmark(BenchTarget& target, const BenchConfig& config) {
  if (config.iterations == 0) throw Error(Errc::invalid_argument, "iterations must be >= 1");
  BenchmarkReport report;
  report.warmup = config.warmup;
  report.iterations = config.iterations;
  report.stage = config.stage;
  report.hardware = hardware_description();

  std::vector<double> pre, fwd, sal, e2e;
  if (config.stage == BenchStage::forward) {
    target.preprocess();
  } else if (config.stage == BenchStage::saliency) {
    target.preprocess();
    target.forward();
  }
  for (std::size_t i = 0; i < config.warmup + config.iterations; ++i) {
    const bool record = i >= config.warmup;
    switch (config.stage) {
      case BenchStage::all: {
        const auto t0 = Clock::now();
        const double a = time_micros([&] { target.preprocess(); });
        const double b = time_micros([&] { target.forward(); });
        const double c = time_micros([&] { target.saliency(); });
        const double total = std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
        if (record) {
          pre.push_back(a);
          fwd.push_back(b);
          sal.push_back(c);
          e2e.push_back(total);
        }
        break;
      }
      case BenchStage::forward: {
        const double b = time_micros([&] { target.forward(); });
        if (record) fwd.push_back(b);
        break;
      }
      case BenchStage::saliency: {
        const double c = time_micros([&] { target.saliency(); });
        if (record) sal.push_back(c);
        break;
      }
    }
  }
  report.preprocess = summarize(std::move(pre));
  report.forward = summarize(std::move(fwd));
  report.saliency = summarize(std::move(sal));
  report.end_to_end = summarize(std::move(e2e));
  return report;
}

RawImage synthetic_bench_image(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  RawImage img(kModelSide, kModelSide);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng() >> 56);
  return img;
}

std::string hardware_description() {
  std::string model = "unknown CPU";
  std::ifstream cpuinfo("/proc/cpuinfo");
  for (std::string line; std::getline(cpuinfo, line);) {
    if (line.rfind("model name", 0) == 0) {
      const auto colon = line.find(':');
      if (colon != std::string::npos) model = line.substr(line.find_first_not_of(' ', colon + 1));
      break;
    }
  }
  return model + " (" + std::to_string(std::thread::hardware_concurrency()) + " logical cores)";
}

namespace {

nlohmann::json stage_json(const StageStats& s) {
  return {{"count", s.samples.size()}, {"p50_us", s.p50},   {"p90_us", s.p90},
          {"p95_us", s.p95},           {"mean_us", s.mean}, {"stddev_us", s.stddev},
          {"min_us", s.min},           {"max_us", s.max},   {"samples_us", s.samples}};
}

}  // namespace

std::string report_to_json(const BenchmarkReport& r, int indent) {
  nlohmann::json j = {{"model", r.model_name},
                      {"input", r.input_description},
                      {"hardware", r.hardware},
                      {"percentile_method", r.percentile_method},
                      {"warmup", r.warmup},
                      {"iterations", r.iterations},
                      {"stage", to_string(r.stage)},
                      {"stages",
                       {{"preprocess", stage_json(r.preprocess)},
                        {"forward", stage_json(r.forward)},
                        {"saliency", stage_json(r.saliency)},
                        {"end_to_end", stage_json(r.end_to_end)}}}};
  return j.dump(indent);
}

std::string report_to_table(const BenchmarkReport& r) {
  std::string out;
  char line[160];
  std::snprintf(line, sizeof line, "model: %s\ninput: %s\nhardware: %s\n", r.model_name.c_str(),
                r.input_description.c_str(), r.hardware.c_str());
  out += line;
  std::snprintf(line, sizeof line, "warmup: %zu  iterations: %zu  percentiles: %s\n\n", r.warmup,
                r.iterations, r.percentile_method.c_str());
  out += line;
  std::snprintf(line, sizeof line, "%-12s %8s %10s %10s %10s %10s %10s\n", "stage (ms)", "n", "p50",
                "p90", "p95", "mean", "stddev");
  out += line;
  const std::pair<const char*, const StageStats*> rows[] = {{"preprocess", &r.preprocess},
                                                            {"forward", &r.forward},
                                                            {"saliency", &r.saliency},
                                                            {"end_to_end", &r.end_to_end}};
  for (const auto& [name, s] : rows) {
    if (s->samples.empty()) continue;
    std::snprintf(line, sizeof line, "%-12s %8zu %10.3f %10.3f %10.3f %10.3f %10.3f\n", name,
                  s->samples.size(), s->p50 / 1e3, s->p90 / 1e3, s->p95 / 1e3, s->mean / 1e3,
                  s->stddev / 1e3);
    out += line;
  }
  return out;
}

}  // namespace pve
