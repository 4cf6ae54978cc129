#include <cmath>
#include <limits>
#include <map>
#include <tuple>

#include "pve/datakit.hpp"
#include "pve/error.hpp"

namespace pve {

std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
  if (bound == 0) throw Error(Errc::invalid_argument, "uniform_below bound must be positive");
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

double uniform_unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::array<std::size_t, 3> split_sizes(std::size_t n) {
  // 0.2 n never has a fractional part of exactly one half, so rounding is
  // unambiguous; (2n + 5) / 10 == round(0.2 n).
  const std::size_t holdout = (2 * n + 5) / 10;
  return {n - 2 * holdout, holdout, holdout};
}

SplitAssignment stratified_split(const DatasetManifest& manifest, std::uint64_t seed,
                                 SplitOptions options) {
  std::map<std::tuple<int, std::string>, std::vector<std::size_t>> strata;
  std::size_t per_label[2] = {0, 0};
  for (std::size_t i = 0; i < manifest.entries.size(); ++i) {
    const auto& e = manifest.entries[i];
    // ai strata first, then human; manifest order inside each stratum.
    const int key = e.label == Label::ai ? 0 : 1;
    strata[{key, options.per_source ? e.source : std::string{}}].push_back(i);
    ++per_label[key];
  }
  if (per_label[0] == 0 || per_label[1] == 0) {
    throw Error(Errc::class_too_small, "both ai and human entries are required");
  }

  SplitAssignment out;
  out.seed = seed;
  out.splits.assign(manifest.entries.size(), Split::train);
  std::mt19937_64 rng(seed);
  for (auto& [key, items] : strata) {
    if (items.size() < 5) {
      throw Error(Errc::class_too_small,
                  "stratum '" + std::string(std::get<0>(key) == 0 ? "ai" : "human") +
                      (std::get<1>(key).empty() ? "" : "/" + std::get<1>(key)) + "' has " +
                      std::to_string(items.size()) + " entries, need at least 5");
    }
    for (std::size_t i = items.size() - 1; i > 0; --i) {
      std::swap(items[i], items[uniform_below(rng, i + 1)]);
    }
    const auto [n_train, n_val, n_test] = split_sizes(items.size());
    for (std::size_t k = 0; k < items.size(); ++k) {
      out.splits[items[k]] = k < n_train ? Split::train
                             : k < n_train + n_val ? Split::val
                                                   : Split::test;
    }
    (void)n_test;
  }
  return out;
}

}  // namespace pve
