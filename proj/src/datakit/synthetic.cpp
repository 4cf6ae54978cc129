#include <cmath>
#include <cstdio>
#include <fstream>

#include "pve/datakit.hpp"
#include "pve/error.hpp"

namespace pve {

RawImage synthetic_image(std::size_t side, bool artifact, double amplitude, std::mt19937_64& rng) {
  constexpr std::size_t kGrid = 5;
  double grid[kGrid][kGrid][3];
  for (auto& row : grid) {
    for (auto& cell : row) {
      for (double& v : cell) v = 40.0 + 175.0 * uniform_unit(rng);
    }
  }
  const double phase = static_cast<double>(uniform_below(rng, 4));
  RawImage out(side, side);
  const double scale = static_cast<double>(kGrid - 1) / static_cast<double>(side - 1);
  for (std::size_t y = 0; y < side; ++y) {
    const double gy = static_cast<double>(y) * scale;
    const auto y0 = std::min<std::size_t>(static_cast<std::size_t>(gy), kGrid - 2);
    const double fy = gy - static_cast<double>(y0);
    for (std::size_t x = 0; x < side; ++x) {
      const double gx = static_cast<double>(x) * scale;
      const auto x0 = std::min<std::size_t>(static_cast<std::size_t>(gx), kGrid - 2);
      const double fx = gx - static_cast<double>(x0);
      double pattern = 0.0;
      if (artifact) {
        const auto cell = (static_cast<std::size_t>(x + phase) / 2 + y / 2) % 2;
        pattern = cell ? amplitude : -amplitude;
      }
      for (int c = 0; c < 3; ++c) {
        const double top = grid[y0][x0][c] + (grid[y0][x0 + 1][c] - grid[y0][x0][c]) * fx;
        const double bot = grid[y0 + 1][x0][c] + (grid[y0 + 1][x0 + 1][c] - grid[y0 + 1][x0][c]) * fx;
        const double v = top + (bot - top) * fy + pattern;
        out.pixel(x, y)[c] = static_cast<std::uint8_t>(std::clamp(std::floor(v + 0.5), 0.0, 255.0));
      }
    }
  }
  return out;
}

DatasetManifest write_synthetic_corpus(const std::filesystem::path& dir,
                                       const SyntheticCorpusConfig& config) {
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(config.seed);
  DatasetManifest manifest;
  for (std::size_t i = 0; i < config.count; ++i) {
    const bool ai = i % 2 == 0;
    char name[64];
    std::snprintf(name, sizeof name, "%s_%05zu.png", ai ? "ai" : "human", i / 2);
    const RawImage img = synthetic_image(config.side, ai, config.artifact_amplitude, rng);
    const auto bytes = encode_png(img);
    std::ofstream out(dir / name, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(Errc::io, "cannot write " + (dir / name).string());
    manifest.entries.push_back(
        {name, ai ? Label::ai : Label::human, ai ? "synthetic-periodic" : "synthetic-smooth"});
  }
  std::ofstream m(dir / "manifest.tsv", std::ios::binary);
  m << format_manifest(manifest);
  if (!m) throw Error(Errc::io, "cannot write manifest");
  return manifest;
}

}  // namespace pve
