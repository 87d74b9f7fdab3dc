#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/clustering/heuristics.hpp"

namespace hsieval {

/// Above this many points the seeds come from a grid at bandwidth resolution.
inline constexpr std::size_t kMeanShiftBinningThreshold = 10000;
/// Upper bound on grid seeds; the most populated bins are kept.
inline constexpr std::size_t kMeanShiftMaxSeeds = 512;

namespace detail {

/// One representative point per occupied grid bin (the lowest pixel index in
/// the bin), ordered by bin population then first appearance.
inline std::vector<std::size_t> binned_seeds(const PixelMatrix& x, double bin_size) {
  struct Bin {
    std::size_t first;
    std::size_t count;
  };
  std::map<std::vector<std::int64_t>, Bin> bins;
  std::vector<std::int64_t> key(x.n_features());
  for (std::size_t i = 0; i < x.n_pixels(); ++i) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < key.size(); ++j) key[j] = static_cast<std::int64_t>(std::llround(r[j] / bin_size));
    auto [it, inserted] = bins.try_emplace(key, Bin{i, 0});
    ++it->second.count;
  }
  std::vector<Bin> ordered;
  ordered.reserve(bins.size());
  for (const auto& kv : bins) ordered.push_back(kv.second);
  std::sort(ordered.begin(), ordered.end(), [](const Bin& a, const Bin& b) {
    return a.count != b.count ? a.count > b.count : a.first < b.first;
  });
  if (ordered.size() > kMeanShiftMaxSeeds) ordered.resize(kMeanShiftMaxSeeds);
  std::vector<std::size_t> seeds;
  for (const Bin& b : ordered) seeds.push_back(b.first);
  std::sort(seeds.begin(), seeds.end());
  return seeds;
}

}  // namespace detail

/// Flat-kernel mean shift. Converged modes closer than the bandwidth are merged,
/// keeping the one with more points in its window; every point then joins its
/// nearest surviving mode.
inline ClusterResult meanshift(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  const std::size_t n = x.n_pixels(), d = x.n_features();
  if (n == 0) throw ParameterError("meanshift needs at least one point");
  const double bw = p.bandwidth ? *p.bandwidth : median_pairwise_bandwidth(x, p.seed);
  const double stop = 1e-3 * bw;

  std::vector<std::size_t> seeds;
  if (n > kMeanShiftBinningThreshold) {
    seeds = detail::binned_seeds(x, bw);
  } else {
    seeds.resize(n);
    std::iota(seeds.begin(), seeds.end(), std::size_t{0});
  }

  const detail::CellIndex index(x);
  struct Mode {
    std::vector<double> center;
    std::size_t intensity = 0;
    std::size_t iterations = 0;
    std::size_t seed_order = 0;
  };
  std::vector<Mode> modes(seeds.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(seeds.size()); ++si) {
    const auto s = static_cast<std::size_t>(si);
    const auto start = x.row(seeds[s]);
    std::vector<double> center(start.begin(), start.end()), sum(d);
    std::size_t within = 0, it = 0;
    while (it < p.max_iter) {
      ++it;
      std::fill(sum.begin(), sum.end(), 0.0);
      within = 0;
      index.for_each_within(center.data(), bw, [&](std::size_t j, double) {
        const auto r = x.row(j);
        for (std::size_t q = 0; q < d; ++q) sum[q] += r[q];
        ++within;
        return true;
      });
      if (within == 0) break;
      double shift2 = 0;
      for (std::size_t q = 0; q < d; ++q) {
        const double next = sum[q] / static_cast<double>(within);
        shift2 += (next - center[q]) * (next - center[q]);
        center[q] = next;
      }
      if (std::sqrt(shift2) < stop) break;
    }
    modes[s] = Mode{std::move(center), within, it, s};
  }

  std::vector<Mode> candidates;
  for (auto& m : modes) {
    if (m.intensity > 0) candidates.push_back(std::move(m));
  }
  std::stable_sort(candidates.begin(), candidates.end(), [](const Mode& a, const Mode& b) {
    return a.intensity > b.intensity;
  });
  std::vector<double> kept;
  std::size_t max_iterations = 0;
  for (const Mode& m : candidates) {
    max_iterations = std::max(max_iterations, m.iterations);
    bool near = false;
    for (std::size_t c = 0; c < kept.size() / d && !near; ++c) {
      near = detail::squared_distance(m.center.data(), kept.data() + c * d, d) <= bw * bw;
    }
    if (!near) kept.insert(kept.end(), m.center.begin(), m.center.end());
  }

  std::vector<int> assignment(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    assignment[i] = static_cast<int>(detail::nearest_center(x.row(i).data(), kept, d).first);
  }

  ClusterResult r;
  r.labels = LabelArray::compacted(assignment);
  std::vector<char> used(kept.size() / d, 0);
  for (int a : assignment) used[static_cast<std::size_t>(a)] = 1;
  for (std::size_t c = 0; c < used.size(); ++c) {
    if (used[c]) r.centroids.emplace_back(kept.begin() + static_cast<std::ptrdiff_t>(c * d),
                                          kept.begin() + static_cast<std::ptrdiff_t>((c + 1) * d));
  }
  r.iterations = max_iterations;
  r.converged = max_iterations < p.max_iter;
  r.resolved["bandwidth"] = bw;
  r.resolved["seeds"] = static_cast<double>(seeds.size());
  return r;
}

}  // namespace hsieval
