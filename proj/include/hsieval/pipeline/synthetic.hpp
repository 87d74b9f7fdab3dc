#pragma once

// Seeded synthetic scenes: Gaussian blobs laid out over the image plane with a
// planted "corrosion" disc and its matching annotation mask.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/core.hpp"
#include "hsieval/pipeline/config.hpp"
#include "hsieval/raster_io.hpp"

namespace hsieval {

struct SyntheticSpec {
  std::size_t width = 64;
  std::size_t height = 64;
  std::size_t bands = 8;
  std::size_t blobs = 3;
  double noise_sigma = 0.01;
  double corrosion_fraction = 0.0;   // share of the image covered by the disc; 0 means 1 / blobs
  double min_separation = 0.0;       // between blob means; 0 means 10 * noise_sigma
  std::uint64_t seed = 0;
};

struct SyntheticScene {
  HyperCube cube;
  AnnotationMask mask;
  std::vector<int> truth;                   // planted blob per pixel, row-major
  std::vector<std::vector<double>> means;   // one spectrum per blob
};

/// Blob 0 is a centred disc and is the corrosion region; the remaining blobs
/// tile the rest of the image as vertical stripes. Means are drawn uniformly in
/// [0.2, 0.8] per band and redrawn until pairwise distances reach min_separation.
inline SyntheticScene make_synthetic(const SyntheticSpec& s) {
  if (s.width == 0 || s.height == 0 || s.bands == 0) throw ParameterError("synthetic scene needs non-zero dimensions");
  if (s.blobs < 2) throw ParameterError("synthetic scene needs at least two blobs");
  if (!(s.noise_sigma >= 0)) throw ParameterError("noise_sigma must be >= 0");
  const double fraction = s.corrosion_fraction > 0 ? s.corrosion_fraction : 1.0 / static_cast<double>(s.blobs);
  if (s.corrosion_fraction < 0 || !(fraction < 1)) throw ParameterError("corrosion_fraction must lie in [0, 1)");

  std::mt19937_64 rng(detail::splitmix64(s.seed));
  const double sep = s.min_separation > 0 ? s.min_separation : 10.0 * s.noise_sigma;
  std::vector<std::vector<double>> means;
  for (std::size_t attempt = 0; means.size() < s.blobs; ++attempt) {
    if (attempt > 10000) throw ParameterError("could not place blob means at the requested separation");
    std::vector<double> m(s.bands);
    for (double& v : m) v = 0.2 + 0.6 * detail::uniform01(rng);
    bool ok = true;
    for (const auto& other : means) ok = ok && detail::distance(m, other) >= sep;
    if (ok) means.push_back(std::move(m));
  }

  const std::size_t n = s.width * s.height;
  const double cx = (static_cast<double>(s.width) - 1) / 2, cy = (static_cast<double>(s.height) - 1) / 2;
  const double r2 = fraction * static_cast<double>(n) / std::numbers::pi;
  std::vector<int> truth(n);
  std::vector<int> ids(n, AnnotationMask::kIntact);
  for (std::size_t y = 0; y < s.height; ++y) {
    for (std::size_t x = 0; x < s.width; ++x) {
      const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
      const std::size_t p = y * s.width + x;
      if (dx * dx + dy * dy <= r2) {
        truth[p] = 0;
        ids[p] = AnnotationMask::kDeteriorated;
      } else {
        truth[p] = 1 + static_cast<int>(x * (s.blobs - 1) / s.width);
      }
    }
  }

  std::vector<float> data(n * s.bands);
  for (std::size_t p = 0; p < n; ++p) {
    const auto& m = means[static_cast<std::size_t>(truth[p])];
    for (std::size_t b = 0; b < s.bands; ++b) {
      const double v = m[b] + s.noise_sigma * detail::standard_normal(rng);
      data[b * n + p] = static_cast<float>(std::max(0.0, v));
    }
  }
  return {HyperCube(s.width, s.height, s.bands, std::move(data)), AnnotationMask(s.width, s.height, std::move(ids)),
          std::move(truth), std::move(means)};
}

/// Writes `count` scenes as synth_NN.hsc / synth_NN_mask.ppm into `dir`;
/// scene i uses seed spec.seed + i. Returns the matching dataset entries.
inline std::vector<DatasetEntry> write_synthetic_dataset(const std::filesystem::path& dir, std::size_t count,
                                                         SyntheticSpec spec) {
  std::filesystem::create_directories(dir);
  std::vector<DatasetEntry> out;
  const std::uint64_t base = spec.seed;
  for (std::size_t i = 0; i < count; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "synth_%02zu", i);
    spec.seed = base + i;
    const auto scene = make_synthetic(spec);
    DatasetEntry e{name, dir / (std::string(name) + ".hsc"), dir / (std::string(name) + "_mask.ppm")};
    write_cube(scene.cube, e.cube);
    write_mask(scene.mask, e.mask);
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace hsieval
