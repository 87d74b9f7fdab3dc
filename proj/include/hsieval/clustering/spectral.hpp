#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hsieval/clustering/common.hpp"
#include "hsieval/clustering/kmeans.hpp"

namespace hsieval {

/// Restarts of the k-means step in embedding space; the lowest inertia wins.
inline constexpr std::size_t kSpectralKmeansRestarts = 10;

struct SpectralEmbedding {
  std::vector<double> eigenvalues;  // the k smallest of L_sym, ascending
  PixelMatrix embedding;            // one row-normalised row per input point
  std::vector<int> component;       // connected component per point, numbered by first member
  std::size_t components = 0;
};

namespace detail {

/// Symmetrised kNN connectivity: w_ij = (a_ij + a_ji) / 2 with a_ij = 1 when j
/// is among the `neighbors` nearest points of i (self excluded, ties by index).
inline Eigen::MatrixXd knn_affinity(const PixelMatrix& x, std::size_t neighbors) {
  const std::size_t n = x.n_pixels();
  const std::size_t nn = std::min(neighbors, n - 1);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
    const auto i = static_cast<std::size_t>(si);
    std::vector<std::pair<double, std::size_t>> d;
    d.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) d.emplace_back(squared_distance(x.row(i), x.row(j)), j);
    }
    std::partial_sort(d.begin(), d.begin() + static_cast<std::ptrdiff_t>(nn), d.end());
    for (std::size_t t = 0; t < nn; ++t) w(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d[t].second)) = 0.5;
  }
  Eigen::MatrixXd sym = w + w.transpose();
  return sym;
}

inline std::vector<int> connected_components(const Eigen::MatrixXd& w, std::size_t& count) {
  const auto n = static_cast<std::size_t>(w.rows());
  std::vector<int> comp(n, -1);
  int next = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::queue<std::size_t> q;
    q.push(s);
    comp[s] = next;
    while (!q.empty()) {
      const std::size_t u = q.front();
      q.pop();
      for (std::size_t v = 0; v < n; ++v) {
        if (comp[v] < 0 && w(static_cast<Eigen::Index>(u), static_cast<Eigen::Index>(v)) > 0) {
          comp[v] = next;
          q.push(v);
        }
      }
    }
    ++next;
  }
  count = static_cast<std::size_t>(next);
  return comp;
}

/// Eigenvectors of the symmetric tridiagonal matrix (diag, sub) for the given
/// ascending eigenvalues, by inverse iteration. Vectors whose eigenvalues lie
/// within `cluster_gap` of each other are kept mutually orthogonal.
inline Eigen::MatrixXd tridiagonal_eigenvectors(const Eigen::VectorXd& diag, const Eigen::VectorXd& sub,
                                                const std::vector<double>& values) {
  const auto n = static_cast<std::size_t>(diag.size());
  const std::size_t m = values.size();
  double tnorm = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double r = std::abs(diag[static_cast<Eigen::Index>(i)]);
    if (i > 0) r += std::abs(sub[static_cast<Eigen::Index>(i - 1)]);
    if (i + 1 < n) r += std::abs(sub[static_cast<Eigen::Index>(i)]);
    tnorm = std::max(tnorm, r);
  }
  if (tnorm == 0) tnorm = 1;
  const double tiny = std::numeric_limits<double>::epsilon() * tnorm;
  const double cluster_gap = 1e-3 * tnorm;

  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(m));
  std::vector<double> u0(n), u1(n), u2(n), mult(n), x(n);
  std::vector<char> swapped(n);
  std::size_t cluster_start = 0;
  for (std::size_t j = 0; j < m; ++j) {
    if (j > 0 && values[j] - values[j - 1] > cluster_gap) cluster_start = j;
    const double shift = values[j];

    // LU of T - shift*I with partial pivoting; U has two superdiagonals.
    double a = diag[0] - shift, b = n > 1 ? sub[0] : 0.0, c = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const auto ii = static_cast<Eigen::Index>(i);
      const double na = sub[ii], nb = diag[ii + 1] - shift, nc = i + 2 < n ? sub[ii + 1] : 0.0;
      double pa = a, pb = b, pc = c, oa = na, ob = nb, oc = nc;
      swapped[i] = std::abs(na) > std::abs(a);
      if (swapped[i]) {
        std::swap(pa, oa);
        std::swap(pb, ob);
        std::swap(pc, oc);
      }
      if (std::abs(pa) < tiny) pa = std::copysign(tiny, pa);
      u0[i] = pa;
      u1[i] = pb;
      u2[i] = pc;
      mult[i] = oa / pa;
      a = ob - mult[i] * pb;
      b = oc - mult[i] * pc;
      c = 0.0;
    }
    u0[n - 1] = std::abs(a) < tiny ? std::copysign(tiny, a) : a;

    std::mt19937_64 rng(j + 1);
    for (auto& v : x) v = uniform01(rng) - 0.5;
    for (int iter = 0; iter < 8; ++iter) {
      for (std::size_t i = 0; i + 1 < n; ++i) {
        if (swapped[i]) std::swap(x[i], x[i + 1]);
        x[i + 1] -= mult[i] * x[i];
      }
      for (std::size_t r = n; r-- > 0;) {
        double v = x[r];
        if (r + 1 < n) v -= u1[r] * x[r + 1];
        if (r + 2 < n) v -= u2[r] * x[r + 2];
        x[r] = v / u0[r];
      }
      for (std::size_t q = cluster_start; q < j; ++q) {
        double dot = 0;
        for (std::size_t i = 0; i < n; ++i) dot += x[i] * z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
        for (std::size_t i = 0; i < n; ++i) x[i] -= dot * z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(q));
      }
      double norm = 0;
      for (double v : x) norm += v * v;
      norm = std::sqrt(norm);
      if (norm == 0) throw Error("inverse iteration collapsed");
      double change = 0;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] /= norm;
        change = std::max(change, std::abs(std::abs(x[i]) - std::abs(z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)))));
        z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[i];
      }
      if (iter >= 2 && change < 1e-14) break;
    }
  }
  return z;
}

}  // namespace detail

/// Eigen-embedding of the symmetric normalised Laplacian L = I - D^-1/2 W D^-1/2
/// of the kNN graph, keeping the k smallest eigenvectors.
inline SpectralEmbedding spectral_embedding(const PixelMatrix& x, std::size_t k, std::size_t neighbors) {
  const std::size_t n = x.n_pixels();
  if (n < 2) throw ParameterError("spectral embedding needs at least two points");
  if (k > n) throw ParameterError("k exceeds the number of points in the spectral sample");
  const Eigen::MatrixXd w = detail::knn_affinity(x, neighbors);

  SpectralEmbedding out;
  out.component = detail::connected_components(w, out.components);

  const Eigen::VectorXd inv_sqrt_deg = w.rowwise().sum().array().rsqrt();
  Eigen::MatrixXd laplacian = -(inv_sqrt_deg.asDiagonal() * w * inv_sqrt_deg.asDiagonal());
  laplacian.diagonal().array() += 1.0;
  // Only k eigenvectors are needed: reduce to tridiagonal form, take all
  // eigenvalues there, then inverse-iterate for the k smallest and map back.
  const Eigen::Tridiagonalization<Eigen::MatrixXd> tri(laplacian);
  const Eigen::VectorXd diag = tri.diagonal();
  const Eigen::VectorXd sub = tri.subDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> values;
  values.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
  if (values.info() != Eigen::Success) throw Error("eigendecomposition of the graph Laplacian failed");

  out.eigenvalues.assign(values.eigenvalues().data(), values.eigenvalues().data() + k);
  const Eigen::MatrixXd v = tri.matrixQ() * detail::tridiagonal_eigenvectors(diag, sub, out.eigenvalues);
  std::vector<double> rows(n * k);
  for (std::size_t i = 0; i < n; ++i) {
    const double norm = v.row(static_cast<Eigen::Index>(i)).norm();
    for (std::size_t j = 0; j < k; ++j) {
      rows[i * k + j] = norm > 0 ? v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) / norm : 0.0;
    }
  }
  out.embedding = PixelMatrix(n, k, std::move(rows));
  return out;
}

/// Spectral clustering on at most spectral_sample points; remaining pixels take
/// the label of their nearest sampled pixel in feature space.
inline ClusterResult spectral(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  if (p.k < 2) throw ParameterError("spectral clustering needs k >= 2");
  const std::size_t n = x.n_pixels();
  if (n < 2) throw ParameterError("spectral clustering needs at least two points");

  const auto sample = detail::sample_indices(n, p.spectral_sample, p.seed ^ 0x73706563ull);
  const PixelMatrix xs = sample.size() == n ? x : x.select_rows(sample);
  const std::size_t k = std::min(p.k, xs.n_pixels());
  const auto emb = spectral_embedding(xs, k, p.spectral_neighbors);

  ClusterResult r;
  std::vector<int> sample_labels;
  if (emb.components > k) {
    sample_labels = emb.component;
    r.warnings.push_back("kNN graph has " + std::to_string(emb.components) +
                         " connected components, more than k; using one cluster per component");
  } else {
    ClusterParams kp;
    kp.k = k;
    kp.max_iter = p.max_iter;
    kp.tol = p.tol;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t run = 0; run < kSpectralKmeansRestarts; ++run) {
      kp.seed = detail::splitmix64(p.seed + run);
      const auto fit = kmeans(emb.embedding, kp);
      if (*fit.inertia < best) {
        best = *fit.inertia;
        sample_labels.assign(fit.labels.values().begin(), fit.labels.values().end());
      }
    }
  }

  std::vector<int> labels(n);
  if (sample.size() == n) {
    labels = sample_labels;
  } else {
    const std::size_t d = x.n_features();
    const std::vector<double> centers(xs.values().begin(), xs.values().end());
#pragma omp parallel for schedule(static)
    for (std::ptrdiff_t si = 0; si < static_cast<std::ptrdiff_t>(n); ++si) {
      const auto i = static_cast<std::size_t>(si);
      labels[i] = sample_labels[detail::nearest_center(x.row(i).data(), centers, d).first];
    }
  }
  r.labels = LabelArray::compacted(labels);
  r.centroids = detail::cluster_means(x, r.labels);
  r.iterations = 1;
  r.resolved["sample"] = static_cast<double>(sample.size());
  r.resolved["components"] = static_cast<double>(emb.components);
  r.resolved["lambda_min"] = emb.eigenvalues.front();
  return r;
}

}  // namespace hsieval
