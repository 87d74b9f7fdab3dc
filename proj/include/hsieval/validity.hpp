#pragma once

// Internal cluster validity indices: Calinski-Harabasz, Davies-Bouldin and
// the mean silhouette. Noise pixels (label -1) are excluded before every
// computation.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/core.hpp"

namespace hsieval {

/// K x N indicator matrix over the non-noise points: w(k, i) = 1 iff point i is in cluster k.
struct MembershipMatrix {
  std::size_t clusters = 0;
  std::vector<std::size_t> points;  // original index of each column
  std::vector<std::uint8_t> w;      // row-major, clusters x points.size()

  int operator()(std::size_t k, std::size_t i) const { return w[k * points.size() + i]; }

  std::size_t column_sum(std::size_t i) const {
    std::size_t s = 0;
    for (std::size_t k = 0; k < clusters; ++k) s += w[k * points.size() + i];
    return s;
  }
};

inline MembershipMatrix membership(const LabelArray& labels) {
  MembershipMatrix m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) m.points.push_back(i);
  }
  if (m.points.empty()) throw EmptyPartitionError("every point is noise; no partition to index");
  m.clusters = labels.n_clusters();
  m.w.assign(m.clusters * m.points.size(), 0);
  for (std::size_t c = 0; c < m.points.size(); ++c) {
    m.w[static_cast<std::size_t>(labels[m.points[c]]) * m.points.size() + c] = 1;
  }
  return m;
}

/// Index value; `degenerate` marks the +infinity sentinel.
struct IndexValue {
  double value = 0.0;
  bool degenerate = false;
};

enum class ChiFormula {
  standard,    ///< [T_B / (K-1)] / [T_W / (N-K)] with squared norms
  as_printed,  ///< T_B with unsquared norms, both terms divided by (K-1)
};

namespace detail {

struct Partition {
  std::vector<std::size_t> points;   // non-noise indices
  std::vector<std::size_t> sizes;    // per cluster
  std::vector<double> centroids;     // K x d
  std::size_t k = 0;
};

inline Partition partition_of(const PixelMatrix& x, const LabelArray& labels, std::string_view index_name) {
  if (labels.size() != x.n_pixels()) throw DimensionError("label count does not match the pixel matrix");
  Partition part;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] != kNoise) part.points.push_back(i);
  }
  if (part.points.empty()) throw EmptyPartitionError("every point is noise; no partition to index");
  part.k = labels.n_clusters();
  if (part.k < 2) {
    throw UndefinedIndexError(std::string(index_name) + " needs at least two clusters, got " + std::to_string(part.k));
  }
  const std::size_t d = x.n_features();
  part.sizes.assign(part.k, 0);
  part.centroids.assign(part.k * d, 0.0);
  for (std::size_t i : part.points) {
    const auto l = static_cast<std::size_t>(labels[i]);
    ++part.sizes[l];
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) part.centroids[l * d + j] += r[j];
  }
  for (std::size_t l = 0; l < part.k; ++l) {
    for (std::size_t j = 0; j < d; ++j) part.centroids[l * d + j] /= static_cast<double>(part.sizes[l]);
  }
  return part;
}

}  // namespace detail

/// Between/within dispersion ratio; larger is better. Zero within-cluster
/// dispersion yields the +infinity sentinel.
inline IndexValue calinski_harabasz(const PixelMatrix& x, const LabelArray& labels,
                                    ChiFormula formula = ChiFormula::standard) {
  const auto part = detail::partition_of(x, labels, "Calinski-Harabasz");
  const std::size_t d = x.n_features(), n = part.points.size(), k = part.k;
  std::vector<double> mean(d, 0.0);
  for (std::size_t i : part.points) {
    const auto r = x.row(i);
    for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
  }
  for (double& v : mean) v /= static_cast<double>(n);

  double between = 0;
  for (std::size_t l = 0; l < k; ++l) {
    const double d2 = detail::squared_distance(&part.centroids[l * d], mean.data(), d);
    between += static_cast<double>(part.sizes[l]) * (formula == ChiFormula::standard ? d2 : std::sqrt(d2));
  }
  double within = 0;
  for (std::size_t i : part.points) {
    within += detail::squared_distance(x.row(i).data(), &part.centroids[static_cast<std::size_t>(labels[i]) * d], d);
  }
  if (within == 0) return {std::numeric_limits<double>::infinity(), true};
  const double kk = static_cast<double>(k);
  if (formula == ChiFormula::as_printed) return {(between / (kk - 1)) / (within / (kk - 1)), false};
  return {(between / (kk - 1)) / (within / (static_cast<double>(n) - kk)), false};
}

/// Mean over clusters of the worst (S_k + S_j) / d_kj ratio; smaller is better.
/// Coincident centroids yield the +infinity sentinel.
inline IndexValue davies_bouldin(const PixelMatrix& x, const LabelArray& labels) {
  const auto part = detail::partition_of(x, labels, "Davies-Bouldin");
  const std::size_t d = x.n_features(), k = part.k;
  std::vector<double> scatter(k, 0.0);
  for (std::size_t i : part.points) {
    const auto l = static_cast<std::size_t>(labels[i]);
    scatter[l] += std::sqrt(detail::squared_distance(x.row(i).data(), &part.centroids[l * d], d));
  }
  for (std::size_t l = 0; l < k; ++l) scatter[l] /= static_cast<double>(part.sizes[l]);

  double total = 0;
  for (std::size_t a = 0; a < k; ++a) {
    double worst = 0;
    for (std::size_t b = 0; b < k; ++b) {
      if (a == b) continue;
      const double sep = std::sqrt(detail::squared_distance(&part.centroids[a * d], &part.centroids[b * d], d));
      if (sep == 0) return {std::numeric_limits<double>::infinity(), true};
      worst = std::max(worst, (scatter[a] + scatter[b]) / sep);
    }
    total += worst;
  }
  return {total / static_cast<double>(k), false};
}

/// Mean silhouette over the non-noise points, or over a seeded sample of
/// `sample_cap` of them; a(x) and b(x) always use every non-noise point.
/// Members of singleton clusters score 0.
inline IndexValue silhouette(const PixelMatrix& x, const LabelArray& labels, std::size_t sample_cap = 5000,
                             std::uint64_t seed = 0) {
  const auto part = detail::partition_of(x, labels, "silhouette");
  const std::size_t n = part.points.size(), k = part.k;
  if (sample_cap == 0) throw ParameterError("silhouette sample_cap must be >= 1");
  const auto picks = detail::sample_indices(n, sample_cap, seed ^ 0x73696c68ull);

  std::vector<double> scores(picks.size());
#pragma omp parallel for schedule(dynamic, 8)
  for (std::ptrdiff_t sp = 0; sp < static_cast<std::ptrdiff_t>(picks.size()); ++sp) {
    const std::size_t i = part.points[picks[static_cast<std::size_t>(sp)]];
    const auto own = static_cast<std::size_t>(labels[i]);
    if (part.sizes[own] == 1) {
      scores[static_cast<std::size_t>(sp)] = 0.0;
      continue;
    }
    std::vector<double> sums(k, 0.0);
    for (std::size_t j : part.points) {
      if (j != i) sums[static_cast<std::size_t>(labels[j])] += detail::distance(x.row(i), x.row(j));
    }
    const double a = sums[own] / static_cast<double>(part.sizes[own] - 1);
    double b = std::numeric_limits<double>::infinity();
    for (std::size_t l = 0; l < k; ++l) {
      if (l != own) b = std::min(b, sums[l] / static_cast<double>(part.sizes[l]));
    }
    const double denom = std::max(a, b);
    scores[static_cast<std::size_t>(sp)] = denom > 0 ? (b - a) / denom : 0.0;
  }
  double total = 0;
  for (double s : scores) total += s;
  return {total / static_cast<double>(scores.size()), false};
}

struct ValidityOptions {
  std::size_t sample_cap = 5000;
  std::uint64_t seed = 0;
  ChiFormula chi_formula = ChiFormula::standard;
};

struct ValidityReport {
  double chi = 0;
  double dbi = 0;
  double silhouette = 0;
  bool chi_degenerate = false;
  bool dbi_degenerate = false;
  std::size_t n_used = 0;
  std::size_t k_used = 0;
};

inline ValidityReport evaluate_validity(const PixelMatrix& x, const LabelArray& labels,
                                        const ValidityOptions& opts = {}) {
  ValidityReport r;
  const auto chi = calinski_harabasz(x, labels, opts.chi_formula);
  const auto dbi = davies_bouldin(x, labels);
  const auto sil = silhouette(x, labels, opts.sample_cap, opts.seed);
  r.chi = chi.value;
  r.chi_degenerate = chi.degenerate;
  r.dbi = dbi.value;
  r.dbi_degenerate = dbi.degenerate;
  r.silhouette = sil.value;
  r.n_used = labels.size() - labels.noise_count();
  r.k_used = labels.n_clusters();
  return r;
}

}  // namespace hsieval
