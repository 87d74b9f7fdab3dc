#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "hsieval/clustering/common.hpp"

namespace hsieval {

namespace detail {

/// Greedy k-means++ seeding: first centre uniform; each later centre is the
/// best of 2 + floor(ln k) candidates drawn proportional to squared distance
/// from the nearest chosen centre, judged by the resulting potential.
inline std::vector<double> kmeanspp_centers(const PixelMatrix& x, std::size_t k, std::mt19937_64& rng) {
  const std::size_t n = x.n_pixels(), d = x.n_features();
  const std::size_t trials = 2 + static_cast<std::size_t>(std::log(static_cast<double>(k)));
  std::vector<double> centers;
  centers.reserve(k * d);
  auto push = [&](std::size_t i) {
    const auto r = x.row(i);
    centers.insert(centers.end(), r.begin(), r.end());
  };
  push(uniform_index(rng, n));
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x.row(i).data(), centers.data(), d);
  std::vector<double> trial_d2(n), best_d2(n);
  for (std::size_t c = 1; c < k; ++c) {
    double total = 0;
    for (double v : d2) total += v;
    if (total <= 0) {
      push(uniform_index(rng, n));
      continue;
    }
    std::size_t best = n;
    double best_potential = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < trials; ++t) {
      const double target = uniform01(rng) * total;
      double acc = 0;
      std::size_t pick = n - 1;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (acc > target && d2[i] > 0) {
          pick = i;
          break;
        }
      }
      const double* cand = x.row(pick).data();
      double potential = 0;
      for (std::size_t i = 0; i < n; ++i) {
        trial_d2[i] = std::min(d2[i], squared_distance(x.row(i).data(), cand, d));
        potential += trial_d2[i];
      }
      if (potential < best_potential) {
        best_potential = potential;
        best = pick;
        best_d2.swap(trial_d2);
      }
    }
    push(best);
    d2.swap(best_d2);
  }
  return centers;
}

struct LloydOutcome {
  std::vector<int> assignment;
  std::vector<double> centers;
  std::vector<double> inertia_history;
  std::size_t iterations = 0;
  bool converged = false;
};

inline double assign_points(const PixelMatrix& x, const std::vector<double>& centers, std::vector<int>& assignment,
                            std::vector<double>& d2) {
  const std::size_t n = x.n_pixels(), d = x.n_features();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    const auto [c, dist2] = nearest_center(x.row(i).data(), centers, d);
    assignment[i] = static_cast<int>(c);
    d2[i] = dist2;
  }
  double inertia = 0;
  for (double v : d2) inertia += v;
  return inertia;
}

inline LloydOutcome lloyd(const PixelMatrix& x, std::size_t k, std::mt19937_64& rng, std::size_t max_iter, double tol) {
  const std::size_t n = x.n_pixels(), d = x.n_features();
  LloydOutcome out;
  out.centers = kmeanspp_centers(x, k, rng);
  out.assignment.assign(n, 0);
  std::vector<double> d2(n);
  for (std::size_t it = 1; it <= max_iter; ++it) {
    out.inertia_history.push_back(assign_points(x, out.centers, out.assignment, d2));
    std::vector<double> next(k * d, 0.0);
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(out.assignment[i]);
      ++counts[c];
      const auto r = x.row(i);
      for (std::size_t j = 0; j < d; ++j) next[c * d + j] += r[j];
    }
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] > 0) {
        for (std::size_t j = 0; j < d; ++j) next[c * d + j] /= static_cast<double>(counts[c]);
        continue;
      }
      // Empty cluster: move it onto the point farthest from its own centre.
      const auto far = static_cast<std::size_t>(std::max_element(d2.begin(), d2.end()) - d2.begin());
      const auto r = x.row(far);
      std::copy(r.begin(), r.end(), next.begin() + static_cast<std::ptrdiff_t>(c * d));
      d2[far] = 0;
    }
    double shift = 0;
    for (std::size_t j = 0; j < k * d; ++j) shift = std::max(shift, std::abs(next[j] - out.centers[j]));
    out.centers = std::move(next);
    out.iterations = it;
    if (shift < tol || shift == 0) {
      out.converged = true;
      break;
    }
  }
  out.inertia_history.push_back(assign_points(x, out.centers, out.assignment, d2));
  return out;
}

}  // namespace detail

/// Lloyd's algorithm from k-means++ seeding. Every pixel gets a label.
inline ClusterResult kmeans(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  if (x.n_pixels() == 0) throw ParameterError("kmeans needs at least one point");
  if (p.k > x.n_pixels()) {
    throw ParameterError("k = " + std::to_string(p.k) + " exceeds the number of points " + std::to_string(x.n_pixels()));
  }
  std::mt19937_64 rng(p.seed);
  auto fit = detail::lloyd(x, p.k, rng, p.max_iter, p.tol);

  ClusterResult r;
  r.labels = LabelArray::compacted(fit.assignment);
  r.centroids = detail::cluster_means(x, r.labels);
  double inertia = 0;
  for (std::size_t i = 0; i < x.n_pixels(); ++i) {
    const auto& c = r.centroids[static_cast<std::size_t>(r.labels[i])];
    inertia += detail::squared_distance(x.row(i), c);
  }
  r.inertia = inertia;
  r.inertia_history = std::move(fit.inertia_history);
  r.inertia_history.push_back(inertia);
  r.iterations = fit.iterations;
  r.converged = fit.converged;
  if (r.labels.n_clusters() < p.k) {
    r.warnings.push_back("only " + std::to_string(r.labels.n_clusters()) + " distinct centres could be placed");
  }
  return r;
}

}  // namespace hsieval
