#pragma once

// Data-driven defaults for the hyperparameters that have no universal value.

#include <algorithm>
#include <cmath>
#include <vector>

#include "hsieval/clustering/common.hpp"

namespace hsieval {

/// Query points used to trace the k-distance curve on large inputs.
inline constexpr std::size_t kKneeSampleCap = 4096;
/// Points used to estimate the mean-shift bandwidth.
inline constexpr std::size_t kBandwidthSampleCap = 1000;

inline std::size_t default_min_pts(std::size_t n_features) {
  return std::clamp<std::size_t>(2 * n_features, 2, 64);
}

/// Index of the knee of an ascending curve: the point farthest below the chord
/// joining its end points once both axes are scaled to [0, 1].
inline std::size_t knee_index(const std::vector<double>& ascending) {
  const std::size_t m = ascending.size();
  if (m < 3) return m == 0 ? 0 : m - 1;
  const double lo = ascending.front(), hi = ascending.back();
  if (!(hi > lo)) return m - 1;
  std::size_t best = m - 1;
  double best_gap = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double xn = static_cast<double>(i) / static_cast<double>(m - 1);
    const double yn = (ascending[i] - lo) / (hi - lo);
    const double gap = xn - yn;
    if (gap > best_gap) best_gap = gap, best = i;
  }
  return best;
}

/// Sorted distances from each (sampled) point to its min_pts-th nearest
/// neighbour, counting the point itself.
inline std::vector<double> k_distance_curve(const PixelMatrix& x, std::size_t min_pts, std::uint64_t seed) {
  const std::size_t n = x.n_pixels();
  const std::size_t k = std::min(min_pts, n);
  const auto queries = detail::sample_indices(n, kKneeSampleCap, seed ^ 0x6b6e6565ull);
  detail::CellIndex index(x);
  std::vector<double> curve(queries.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t qi = 0; qi < static_cast<std::ptrdiff_t>(queries.size()); ++qi) {
    curve[static_cast<std::size_t>(qi)] = index.kth_distance(x.row(queries[static_cast<std::size_t>(qi)]).data(), k);
  }
  std::sort(curve.begin(), curve.end());
  return curve;
}

/// DBSCAN radius at the knee of the k-distance curve.
inline double knee_eps(const PixelMatrix& x, std::size_t min_pts, std::uint64_t seed) {
  const auto curve = k_distance_curve(x, min_pts, seed);
  double eps = curve[knee_index(curve)];
  if (eps <= 0) {
    auto it = std::find_if(curve.begin(), curve.end(), [](double v) { return v > 0; });
    eps = it == curve.end() ? 1e-9 : *it;
  }
  return eps;
}

/// Median pairwise Euclidean distance over a seeded sample of at most 1000 points.
inline double median_pairwise_bandwidth(const PixelMatrix& x, std::uint64_t seed) {
  const auto idx = detail::sample_indices(x.n_pixels(), kBandwidthSampleCap, seed ^ 0x62616e64ull);
  std::vector<double> d;
  d.reserve(idx.size() * (idx.size() - 1) / 2);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    for (std::size_t b = a + 1; b < idx.size(); ++b) d.push_back(detail::distance(x.row(idx[a]), x.row(idx[b])));
  }
  if (d.empty()) return 1.0;
  const std::size_t mid = d.size() / 2;
  std::nth_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid), d.end());
  double median = d[mid];
  if (d.size() % 2 == 0) {
    median = 0.5 * (median + *std::max_element(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(mid)));
  }
  if (median > 0) return median;
  const double widest = *std::max_element(d.begin(), d.end());
  return widest > 0 ? widest : 1.0;
}

}  // namespace hsieval
