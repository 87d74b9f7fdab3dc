#pragma once

#include <limits>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/clustering/heuristics.hpp"

namespace hsieval {

/// Density-based clustering. Neighbourhoods include the point itself and use
/// distance <= eps. Clusters are numbered by their first core point in pixel
/// order; a border point joins the lowest-numbered cluster that reaches it.
inline ClusterResult dbscan(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  const std::size_t n = x.n_pixels();
  const std::size_t min_pts = p.min_pts.value_or(default_min_pts(x.n_features()));
  if (min_pts < 1) throw ParameterError("min_pts must be >= 1");
  const double eps = p.eps ? *p.eps : knee_eps(x, min_pts, p.seed);

  ClusterResult r;
  r.resolved["eps"] = eps;
  r.resolved["min_pts"] = static_cast<double>(min_pts);
  if (n == 0) {
    r.labels = LabelArray(std::vector<int>{});
    return r;
  }

  const detail::CellIndex index(x);
  std::vector<char> core(n, 0);
#pragma omp parallel for schedule(dynamic, 64)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    std::size_t count = 0;
    index.for_each_within(x.row(i).data(), eps, [&](std::size_t, double) { return ++count < min_pts; });
    core[i] = count >= min_pts;
  }

  // Core points within eps of each other share a cluster. Pairs already known
  // to be connected are skipped before any distance is computed.
  detail::DisjointSets sets(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    index.for_each_within_if(
        x.row(i).data(), eps, [&](std::size_t j) { return core[j] && sets.find(j) != sets.find(i); },
        [&](std::size_t j, double) {
          sets.unite(i, j);
          return true;
        });
  }

  std::vector<int> cluster_of_root(n, kNoise);
  std::vector<int> labels(n, kNoise);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!core[i]) continue;
    const std::size_t root = sets.find(i);
    if (cluster_of_root[root] == kNoise) cluster_of_root[root] = next++;
    labels[i] = cluster_of_root[root];
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (core[i]) continue;
    int best = std::numeric_limits<int>::max();
    index.for_each_within_if(
        x.row(i).data(), eps, [&](std::size_t j) { return core[j] != 0; },
        [&](std::size_t j, double) {
          best = std::min(best, labels[j]);
          return true;
        });
    if (best != std::numeric_limits<int>::max()) labels[i] = best;
  }
  r.labels = LabelArray(std::move(labels));
  r.centroids = detail::cluster_means(x, r.labels);
  r.iterations = 1;
  return r;
}

}  // namespace hsieval
