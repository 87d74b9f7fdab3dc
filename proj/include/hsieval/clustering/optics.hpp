#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/clustering/heuristics.hpp"

namespace hsieval {

inline constexpr std::ptrdiff_t kNoPredecessor = -1;

/// Cluster ordering with per-point core and reachability distances.
/// Undefined distances are +infinity.
struct OpticsOrdering {
  std::vector<std::size_t> ordering;
  std::vector<double> reachability;  // indexed by point
  std::vector<double> core_distance;  // indexed by point
  std::vector<std::ptrdiff_t> predecessor;  // indexed by point
};

/// Computes the ordering with an unbounded neighbourhood radius. The next point
/// is always the unprocessed one with the smallest reachability, lowest index
/// first on ties.
inline OpticsOrdering optics_ordering(const PixelMatrix& x, std::size_t min_pts) {
  const std::size_t n = x.n_pixels(), d = x.n_features();
  constexpr double inf = std::numeric_limits<double>::infinity();
  OpticsOrdering out;
  out.reachability.assign(n, inf);
  out.core_distance.assign(n, inf);
  out.predecessor.assign(n, kNoPredecessor);
  if (n == 0) return out;

  if (n >= min_pts) {
    const detail::CellIndex index(x);
#pragma omp parallel for schedule(dynamic, 64)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      out.core_distance[i] = index.kth_distance(x.row(i).data(), min_pts);
    }
  }

  // Unprocessed points, ascending, with their rows packed; compacted whenever
  // more than half of the packed entries are stale.
  std::vector<std::size_t> active(n);
  for (std::size_t i = 0; i < n; ++i) active[i] = i;
  std::vector<double> packed(x.values().begin(), x.values().end());
  std::vector<char> processed(n, 0);
  std::vector<double> dist(n);
  std::size_t stale = 0;

  std::size_t current = 0;
  out.ordering.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    processed[current] = 1;
    ++stale;
    out.ordering.push_back(current);
    if (step + 1 == n) break;

    if (stale * 2 > active.size()) {
      std::size_t w = 0;
      for (std::size_t s = 0; s < active.size(); ++s) {
        if (processed[active[s]]) continue;
        if (w != s) std::copy_n(packed.begin() + static_cast<std::ptrdiff_t>(s * d), d,
                                packed.begin() + static_cast<std::ptrdiff_t>(w * d));
        active[w++] = active[s];
      }
      active.resize(w);
      packed.resize(w * d);
      stale = 0;
    }

    const double core = out.core_distance[current];
    if (std::isfinite(core)) {
      const std::vector<double> q(x.row(current).begin(), x.row(current).end());
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t ss = 0; ss < static_cast<std::ptrdiff_t>(active.size()); ++ss) {
        const auto s = static_cast<std::size_t>(ss);
        // reach >= core, so no update is possible once core >= the current reachability
        if (core < out.reachability[active[s]]) dist[s] = detail::squared_distance(q.data(), &packed[s * d], d);
      }
    }
    std::size_t next = n;
    double next_reach = inf;
    for (std::size_t s = 0; s < active.size(); ++s) {
      const std::size_t o = active[s];
      if (processed[o]) continue;
      if (std::isfinite(core) && core < out.reachability[o]) {
        const double reach = std::max(core, std::sqrt(dist[s]));
        if (reach < out.reachability[o]) {
          out.reachability[o] = reach;
          out.predecessor[o] = static_cast<std::ptrdiff_t>(current);
        }
      }
      if (next == n || out.reachability[o] < next_reach) {
        next = o;
        next_reach = out.reachability[o];
      }
    }
    current = next;
  }
  return out;
}

namespace detail {

struct SteepDownArea {
  std::size_t start;
  std::size_t end;
  double mib;
};

inline std::size_t extend_region(const std::vector<char>& steep, const std::vector<char>& xward, std::size_t start,
                                 std::size_t min_pts) {
  std::size_t non_xward = 0, end = start;
  for (std::size_t index = start; index < steep.size(); ++index) {
    if (steep[index]) {
      non_xward = 0;
      end = index;
    } else if (!xward[index]) {
      // not steep, but still heading the same way
      if (++non_xward > min_pts) break;
    } else {
      return end;
    }
  }
  return end;
}

inline void filter_steep_down_areas(std::vector<SteepDownArea>& areas, double mib, double xi_complement,
                                    const std::vector<double>& plot) {
  if (std::isinf(mib)) {
    areas.clear();
    return;
  }
  std::vector<SteepDownArea> kept;
  for (auto a : areas) {
    if (mib <= plot[a.start] * xi_complement) {
      a.mib = std::max(a.mib, mib);
      kept.push_back(a);
    }
  }
  areas = std::move(kept);
}

inline bool correct_predecessor(const std::vector<double>& plot, const std::vector<std::ptrdiff_t>& pred_plot,
                                const std::vector<std::size_t>& ordering, std::size_t& s, std::size_t& e) {
  while (s < e) {
    if (plot[s] > plot[e]) return true;
    const std::ptrdiff_t pe = pred_plot[e];
    for (std::size_t i = s; i < e; ++i) {
      if (pe == static_cast<std::ptrdiff_t>(ordering[i])) return true;
    }
    --e;
  }
  return false;
}

}  // namespace detail

/// Steepness-based cluster extraction over the reachability plot. Returns
/// [start, end] ranges of ordering positions, nested clusters before their
/// parents.
inline std::vector<std::pair<std::size_t, std::size_t>> xi_clusters(const OpticsOrdering& o, double xi,
                                                                    std::size_t min_pts, std::size_t min_cluster_size) {
  const std::size_t n = o.ordering.size();
  std::vector<double> plot(n + 1, std::numeric_limits<double>::infinity());
  std::vector<std::ptrdiff_t> pred_plot(n);
  for (std::size_t i = 0; i < n; ++i) {
    plot[i] = o.reachability[o.ordering[i]];
    pred_plot[i] = o.predecessor[o.ordering[i]];
  }
  const double xi_complement = 1.0 - xi;
  std::vector<char> steep_up(n), steep_down(n), down(n), up(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double ratio = plot[i] / plot[i + 1];  // NaN for inf/inf compares false everywhere
    steep_up[i] = ratio <= xi_complement;
    steep_down[i] = ratio >= 1.0 / xi_complement;
    down[i] = ratio > 1;
    up[i] = ratio < 1;
  }

  std::vector<std::pair<std::size_t, std::size_t>> clusters;
  std::vector<detail::SteepDownArea> areas;
  std::size_t index = 0;
  double mib = 0.0;
  for (std::size_t steep = 0; steep < n; ++steep) {
    if (!(steep_up[steep] || steep_down[steep]) || steep < index) continue;
    for (std::size_t i = index; i <= steep; ++i) mib = std::max(mib, plot[i]);

    detail::filter_steep_down_areas(areas, mib, xi_complement, plot);
    if (steep_down[steep]) {
      const std::size_t end = detail::extend_region(steep_down, up, steep, min_pts);
      areas.push_back({steep, end, 0.0});
      index = end + 1;
      mib = plot[index];
      continue;
    }

    const std::size_t u_start = steep;
    const std::size_t u_end = detail::extend_region(steep_up, down, u_start, min_pts);
    index = u_end + 1;
    mib = plot[index];

    std::vector<std::pair<std::size_t, std::size_t>> found;
    for (const auto& area : areas) {
      std::size_t c_start = area.start, c_end = u_end;
      if (plot[c_end + 1] * xi_complement < area.mib) continue;
      const double d_max = plot[area.start];
      if (d_max * xi_complement >= plot[c_end + 1]) {
        while (plot[c_start + 1] > plot[c_end + 1] && c_start < area.end) ++c_start;
      } else if (plot[c_end + 1] * xi_complement >= d_max) {
        while (c_end > u_start && plot[c_end - 1] > d_max) --c_end;
      }
      if (!detail::correct_predecessor(plot, pred_plot, o.ordering, c_start, c_end)) continue;
      if (c_end - c_start + 1 < min_cluster_size) continue;
      if (c_start > area.end) continue;
      if (c_end < u_start) continue;
      found.emplace_back(c_start, c_end);
    }
    clusters.insert(clusters.end(), found.rbegin(), found.rend());
  }
  return clusters;
}

/// Labels each point by the first listed cluster that covers it without
/// overlapping an already labelled range; unclaimed points are noise.
inline std::vector<int> xi_labels(const OpticsOrdering& o, const std::vector<std::pair<std::size_t, std::size_t>>& clusters) {
  const std::size_t n = o.ordering.size();
  std::vector<int> by_position(n, kNoise);
  int label = 0;
  for (const auto& [s, e] : clusters) {
    bool free = true;
    for (std::size_t i = s; i <= e && free; ++i) free = by_position[i] == kNoise;
    if (!free) continue;
    for (std::size_t i = s; i <= e; ++i) by_position[i] = label;
    ++label;
  }
  std::vector<int> labels(n, kNoise);
  for (std::size_t i = 0; i < n; ++i) labels[o.ordering[i]] = by_position[i];
  return labels;
}

/// OPTICS ordering followed by xi extraction; the minimum cluster size equals min_pts.
inline ClusterResult optics(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  const std::size_t min_pts = p.min_pts.value_or(default_min_pts(x.n_features()));
  if (min_pts < 2) throw ParameterError("optics needs min_pts >= 2");
  const auto ordering = optics_ordering(x, min_pts);
  const auto clusters = xi_clusters(ordering, p.xi, min_pts, min_pts);
  ClusterResult r;
  r.labels = LabelArray(xi_labels(ordering, clusters));
  if (r.labels.n_clusters() > 0) r.centroids = detail::cluster_means(x, r.labels);
  r.iterations = 1;
  r.resolved["min_pts"] = static_cast<double>(min_pts);
  r.resolved["xi"] = p.xi;
  return r;
}

}  // namespace hsieval
