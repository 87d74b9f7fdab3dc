#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsieval/core.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace hsieval {

enum class Method { kmeans, meanshift, spectral, birch, dbscan, optics };

inline constexpr Method kAllMethods[] = {Method::kmeans, Method::meanshift, Method::spectral,
                                         Method::birch,  Method::dbscan,    Method::optics};

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::kmeans: return "kmeans";
    case Method::meanshift: return "meanshift";
    case Method::spectral: return "spectral";
    case Method::birch: return "birch";
    case Method::dbscan: return "dbscan";
    case Method::optics: return "optics";
  }
  return "kmeans";
}

inline Method parse_method(std::string_view s) {
  for (Method m : kAllMethods) {
    if (to_string(m) == s) return m;
  }
  throw ParameterError("unknown clustering method '" + std::string(s) + "'");
}

/// Hyperparameters for every method. Unset optionals are resolved from the
/// data by the heuristics in heuristics.hpp.
struct ClusterParams {
  Method method = Method::kmeans;
  std::size_t k = 6;
  std::optional<double> eps;             // dbscan; knee heuristic when unset
  std::optional<std::size_t> min_pts;    // dbscan, optics; 2 * n_features capped at 64 when unset
  std::optional<double> bandwidth;       // meanshift; median pairwise distance when unset
  double xi = 0.05;                      // optics
  double birch_threshold = 0.5;
  std::size_t birch_branching = 50;
  std::uint64_t seed = 0;
  std::size_t max_iter = 300;
  double tol = 1e-4;
  std::size_t spectral_neighbors = 10;
  std::size_t spectral_sample = 2000;

  void validate() const {
    if (k < 1) throw ParameterError("k must be >= 1");
    if (eps && !(*eps > 0)) throw ParameterError("eps must be > 0");
    if (min_pts && *min_pts < 1) throw ParameterError("min_pts must be >= 1");
    if (bandwidth && !(*bandwidth > 0)) throw ParameterError("bandwidth must be > 0");
    if (!(xi > 0 && xi < 1)) throw ParameterError("xi must lie in (0, 1)");
    if (!(birch_threshold > 0)) throw ParameterError("birch_threshold must be > 0");
    if (birch_branching < 2) throw ParameterError("birch_branching must be >= 2");
    if (max_iter < 1) throw ParameterError("max_iter must be >= 1");
    if (!(tol >= 0)) throw ParameterError("tol must be >= 0");
    if (spectral_neighbors < 1) throw ParameterError("spectral_neighbors must be >= 1");
    if (spectral_sample < 2) throw ParameterError("spectral_sample must be >= 2");
  }
};

struct ClusterResult {
  LabelArray labels;
  std::vector<std::vector<double>> centroids;  // empty for methods without centroids
  std::size_t iterations = 0;
  bool converged = true;
  std::optional<double> inertia;
  std::vector<double> inertia_history;         // kmeans: one entry per assignment step
  std::map<std::string, double> resolved;      // data-derived hyperparameters actually used
  std::vector<std::string> warnings;
};

namespace detail {

// Portable uniform variates: std distributions are implementation-defined.
inline double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline std::size_t uniform_index(std::mt19937_64& rng, std::size_t bound) {
  return static_cast<std::size_t>(uniform01(rng) * static_cast<double>(bound)) % bound;
}

inline double standard_normal(std::mt19937_64& rng) {
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
}

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// Sorted sample of m distinct indices from [0, n).
inline std::vector<std::size_t> sample_indices(std::size_t n, std::size_t m, std::uint64_t seed) {
  if (m >= n) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    return all;
  }
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> pool(n);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < m; ++i) std::swap(pool[i], pool[i + uniform_index(rng, n - i)]);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());
  return pool;
}

inline double squared_distance(const double* a, const double* b, std::size_t d) {
  double s0 = 0, s1 = 0, s2 = 0, s3 = 0;
  std::size_t j = 0;
  for (; j + 4 <= d; j += 4) {
    const double t0 = a[j] - b[j], t1 = a[j + 1] - b[j + 1], t2 = a[j + 2] - b[j + 2], t3 = a[j + 3] - b[j + 3];
    s0 += t0 * t0;
    s1 += t1 * t1;
    s2 += t2 * t2;
    s3 += t3 * t3;
  }
  for (; j < d; ++j) {
    const double t = a[j] - b[j];
    s0 += t * t;
  }
  return (s0 + s1) + (s2 + s3);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  return squared_distance(a.data(), b.data(), a.size());
}

inline double distance(std::span<const double> a, std::span<const double> b) {
  return std::sqrt(squared_distance(a, b));
}

inline int worker_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace detail

/// Applies HSC_EVAL_THREADS (0 or unset = OpenMP default). Returns the worker
/// count in effect afterwards.
inline int configure_threads_from_env() {
  if (const char* v = std::getenv("HSC_EVAL_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(v, &end, 10);
    if (end == v || *end != '\0' || n < 0) throw ParameterError("HSC_EVAL_THREADS must be a non-negative integer");
#ifdef _OPENMP
    if (n > 0) omp_set_num_threads(static_cast<int>(n));
#endif
  }
  return detail::worker_count();
}

namespace detail {

/// Exact metric index: points are bucketed around evenly spaced pivot points.
/// A whole cell is skipped when the triangle inequality proves none of its
/// members can be within the query radius. Members of each cell are packed
/// contiguously for locality.
class CellIndex {
 public:
  explicit CellIndex(const PixelMatrix& x, std::size_t target_cell_size = 256) : dim_(x.n_features()) {
    const std::size_t n = x.n_pixels();
    std::size_t cells = n / std::max<std::size_t>(target_cell_size, 1);
    cells = std::clamp<std::size_t>(cells, 1, 512);
    pivots_.resize(cells * dim_);
    for (std::size_t c = 0; c < cells; ++c) {
      const auto r = x.row(c * n / cells);
      std::copy(r.begin(), r.end(), pivots_.begin() + static_cast<std::ptrdiff_t>(c * dim_));
    }
    std::vector<std::size_t> cell_of(n, 0);
    std::vector<double> dist_to_pivot(n, 0.0);
    if (cells > 1) {
#pragma omp parallel for schedule(static)
      for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
        const auto i = static_cast<std::size_t>(si);
        double best = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t c = 0; c < cells; ++c) {
          const double d2 = squared_distance(x.row(i).data(), &pivots_[c * dim_], dim_);
          if (d2 < best) best = d2, arg = c;
        }
        cell_of[i] = arg;
        dist_to_pivot[i] = std::sqrt(best);
      }
    } else {
      for (std::size_t i = 0; i < n; ++i) dist_to_pivot[i] = std::sqrt(squared_distance(x.row(i).data(), pivots_.data(), dim_));
    }
    offsets_.assign(cells + 1, 0);
    for (std::size_t i = 0; i < n; ++i) ++offsets_[cell_of[i] + 1];
    for (std::size_t c = 0; c < cells; ++c) offsets_[c + 1] += offsets_[c];
    order_.resize(n);
    radius_.assign(cells, 0.0);
    std::vector<std::size_t> fill(offsets_.begin(), offsets_.end() - 1);
    for (std::size_t i = 0; i < n; ++i) {
      order_[fill[cell_of[i]]++] = i;
      radius_[cell_of[i]] = std::max(radius_[cell_of[i]], dist_to_pivot[i]);
    }
    packed_.resize(n * dim_);
    for (std::size_t s = 0; s < n; ++s) {
      const auto r = x.row(order_[s]);
      std::copy(r.begin(), r.end(), packed_.begin() + static_cast<std::ptrdiff_t>(s * dim_));
    }
  }

  std::size_t cell_count() const noexcept { return radius_.size(); }

  /// (lower bound on distance from q to any member, cell) for every cell, ascending.
  std::vector<std::pair<double, std::size_t>> cells_by_bound(const double* q) const {
    std::vector<std::pair<double, std::size_t>> out(cell_count());
    for (std::size_t c = 0; c < cell_count(); ++c) {
      const double dp = std::sqrt(squared_distance(q, &pivots_[c * dim_], dim_));
      out[c] = {std::max(0.0, dp - radius_[c]), c};
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  /// Calls f(index, squared distance) for every point with distance <= radius.
  /// Returning false from f stops the scan.
  template <class F>
  void for_each_within(const double* q, double radius, F&& f) const {
    const double r2 = radius * radius;
    for (const auto& [bound, c] : cells_by_bound(q)) {
      if (bound > radius) break;
      for (std::size_t s = offsets_[c]; s < offsets_[c + 1]; ++s) {
        const double d2 = squared_distance(q, &packed_[s * dim_], dim_);
        if (d2 <= r2 && !f(order_[s], d2)) return;
      }
    }
  }

  /// Like for_each_within, but `keep(index)` is consulted before any distance is
  /// computed so callers can skip points they already know about.
  template <class Keep, class F>
  void for_each_within_if(const double* q, double radius, Keep&& keep, F&& f) const {
    const double r2 = radius * radius;
    for (const auto& [bound, c] : cells_by_bound(q)) {
      if (bound > radius) break;
      for (std::size_t s = offsets_[c]; s < offsets_[c + 1]; ++s) {
        if (!keep(order_[s])) continue;
        const double d2 = squared_distance(q, &packed_[s * dim_], dim_);
        if (d2 <= r2 && !f(order_[s], d2)) return;
      }
    }
  }

  /// Distance to the k-th nearest point (the query itself counts if it is a member).
  double kth_distance(const double* q, std::size_t k) const {
    std::priority_queue<double> heap;  // k smallest squared distances, max on top
    for (const auto& [bound, c] : cells_by_bound(q)) {
      if (heap.size() == k && bound * bound > heap.top()) break;
      for (std::size_t s = offsets_[c]; s < offsets_[c + 1]; ++s) {
        const double d2 = squared_distance(q, &packed_[s * dim_], dim_);
        if (heap.size() < k) {
          heap.push(d2);
        } else if (d2 < heap.top()) {
          heap.pop();
          heap.push(d2);
        }
      }
    }
    return heap.empty() ? 0.0 : std::sqrt(heap.top());
  }

 private:
  std::size_t dim_;
  std::vector<double> pivots_;
  std::vector<double> radius_;
  std::vector<std::size_t> offsets_;
  std::vector<std::size_t> order_;
  std::vector<double> packed_;
};

/// Index of the nearest center (lowest index on ties) and its squared distance.
inline std::pair<std::size_t, double> nearest_center(const double* p, std::span<const double> centers, std::size_t dim) {
  std::size_t best = 0;
  double best_d2 = std::numeric_limits<double>::infinity();
  const std::size_t count = centers.size() / dim;
  for (std::size_t c = 0; c < count; ++c) {
    const double d2 = squared_distance(p, centers.data() + c * dim, dim);
    if (d2 < best_d2) best_d2 = d2, best = c;
  }
  return {best, best_d2};
}

class DisjointSets {
 public:
  explicit DisjointSets(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), std::size_t{0}); }

  std::size_t find(std::size_t a) {
    while (parent_[a] != a) {
      parent_[a] = parent_[parent_[a]];
      a = parent_[a];
    }
    return a;
  }

  /// Unites two sets; the smaller root index becomes the representative.
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
  }

 private:
  std::vector<std::size_t> parent_;
};

/// Per-cluster mean vectors for labels 0..K-1 (noise ignored).
inline std::vector<std::vector<double>> cluster_means(const PixelMatrix& x, const LabelArray& labels) {
  const std::size_t k = labels.n_clusters(), d = x.n_features();
  std::vector<std::vector<double>> means(k, std::vector<double>(d, 0.0));
  std::vector<std::size_t> counts(k, 0);
  for (std::size_t i = 0; i < x.n_pixels(); ++i) {
    if (labels[i] < 0) continue;
    const auto l = static_cast<std::size_t>(labels[i]);
    ++counts[l];
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) means[l][j] += r[j];
  }
  for (std::size_t l = 0; l < k; ++l) {
    for (double& v : means[l]) v /= static_cast<double>(counts[l]);
  }
  return means;
}

}  // namespace detail
}  // namespace hsieval
