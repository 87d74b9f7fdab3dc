#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hsieval/clustering/common.hpp"

namespace hsieval {

/// Clustering feature: point count, per-dimension linear sum, and the sum of
/// squared norms. Features of disjoint sets add component-wise.
struct ClusteringFeature {
  std::size_t n = 0;
  std::vector<double> linear_sum;
  double square_sum = 0.0;

  explicit ClusteringFeature(std::size_t dim = 0) : linear_sum(dim, 0.0) {}

  void add_point(std::span<const double> x) {
    ++n;
    for (std::size_t j = 0; j < x.size(); ++j) {
      linear_sum[j] += x[j];
      square_sum += x[j] * x[j];
    }
  }

  void add(const ClusteringFeature& o) {
    n += o.n;
    for (std::size_t j = 0; j < linear_sum.size(); ++j) linear_sum[j] += o.linear_sum[j];
    square_sum += o.square_sum;
  }

  std::vector<double> centroid() const {
    std::vector<double> c(linear_sum);
    for (double& v : c) v /= static_cast<double>(n);
    return c;
  }

  /// Squared radius (mean squared distance to the centroid) after absorbing x.
  double squared_radius_with(std::span<const double> x) const {
    const double m = static_cast<double>(n + 1);
    double ss = square_sum, c2 = 0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      ss += x[j] * x[j];
      const double c = (linear_sum[j] + x[j]) / m;
      c2 += c * c;
    }
    return ss / m - c2;
  }
};

namespace detail {

struct CfNode;

struct CfEntry {
  ClusteringFeature cf;
  std::unique_ptr<CfNode> child;  // non-leaf entries only
  std::size_t subcluster = 0;     // leaf entries only; stable across splits
};

struct CfNode {
  bool leaf = true;
  std::vector<CfEntry> entries;
};

/// Height-balanced CF tree built in a single pass over the points.
class CfTree {
 public:
  CfTree(std::size_t dim, double threshold, std::size_t branching)
      : dim_(dim), threshold2_(threshold * threshold), branching_(branching), root_(std::make_unique<CfNode>()) {}

  /// Inserts a point and returns the id of the leaf subcluster that holds it.
  std::size_t insert(std::span<const double> x) {
    std::size_t id = 0;
    if (auto split = insert_into(*root_, x, id)) {
      auto root = std::make_unique<CfNode>();
      root->leaf = false;
      root->entries.push_back(std::move(split->first));
      root->entries.push_back(std::move(split->second));
      root_ = std::move(root);
    }
    return id;
  }

  /// Leaf subclusters indexed by id.
  std::vector<ClusteringFeature> subclusters() const {
    std::vector<ClusteringFeature> out(next_id_, ClusteringFeature(dim_));
    collect(*root_, out);
    return out;
  }

  /// True when every non-leaf entry equals the sum of its child's entries
  /// (counts exactly, sums within rel_tol).
  bool check_additivity(double rel_tol = 1e-9) const { return check(*root_, rel_tol); }

  std::size_t depth() const {
    std::size_t h = 1;
    for (const CfNode* node = root_.get(); !node->leaf; node = node->entries.front().child.get()) ++h;
    return h;
  }

  const CfNode& root() const { return *root_; }

 private:
  using Split = std::optional<std::pair<CfEntry, CfEntry>>;

  std::size_t closest_entry(const CfNode& node, std::span<const double> x) const {
    std::size_t best = 0;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (std::size_t e = 0; e < node.entries.size(); ++e) {
      const auto c = node.entries[e].cf.centroid();
      const double d2 = squared_distance(x.data(), c.data(), dim_);
      if (d2 < best_d2) best_d2 = d2, best = e;
    }
    return best;
  }

  Split insert_into(CfNode& node, std::span<const double> x, std::size_t& id) {
    if (node.leaf) {
      if (!node.entries.empty()) {
        CfEntry& e = node.entries[closest_entry(node, x)];
        if (e.cf.squared_radius_with(x) <= threshold2_) {
          e.cf.add_point(x);
          id = e.subcluster;
          return std::nullopt;
        }
      }
      CfEntry fresh{ClusteringFeature(dim_), nullptr, next_id_++};
      fresh.cf.add_point(x);
      id = fresh.subcluster;
      node.entries.push_back(std::move(fresh));
    } else {
      const std::size_t at = closest_entry(node, x);
      if (auto split = insert_into(*node.entries[at].child, x, id)) {
        node.entries[at] = std::move(split->first);
        node.entries.insert(node.entries.begin() + static_cast<std::ptrdiff_t>(at) + 1, std::move(split->second));
      } else {
        node.entries[at].cf.add_point(x);
        return std::nullopt;
      }
    }
    if (node.entries.size() <= branching_) return std::nullopt;
    return split(node);
  }

  /// Splits an overfull node around its two most distant entries.
  Split split(CfNode& node) const {
    const std::size_t m = node.entries.size();
    std::vector<std::vector<double>> centroids;
    for (const auto& e : node.entries) centroids.push_back(e.cf.centroid());
    std::size_t sa = 0, sb = 1;
    double widest = -1;
    for (std::size_t a = 0; a < m; ++a) {
      for (std::size_t b = a + 1; b < m; ++b) {
        const double d2 = squared_distance(centroids[a], centroids[b]);
        if (d2 > widest) widest = d2, sa = a, sb = b;
      }
    }
    auto left = std::make_unique<CfNode>(), right = std::make_unique<CfNode>();
    left->leaf = right->leaf = node.leaf;
    for (std::size_t e = 0; e < m; ++e) {
      const bool to_left = e == sa || (e != sb && squared_distance(centroids[e], centroids[sa]) <=
                                                      squared_distance(centroids[e], centroids[sb]));
      (to_left ? left : right)->entries.push_back(std::move(node.entries[e]));
    }
    node.entries.clear();
    auto summarize = [this](std::unique_ptr<CfNode> child) {
      CfEntry entry{ClusteringFeature(dim_), nullptr, 0};
      for (const auto& e : child->entries) entry.cf.add(e.cf);
      entry.child = std::move(child);
      return entry;
    };
    return std::make_pair(summarize(std::move(left)), summarize(std::move(right)));
  }

  void collect(const CfNode& node, std::vector<ClusteringFeature>& out) const {
    for (const auto& e : node.entries) {
      if (node.leaf) {
        out[e.subcluster] = e.cf;
      } else {
        collect(*e.child, out);
      }
    }
  }

  bool check(const CfNode& node, double rel_tol) const {
    if (node.leaf) return true;
    for (const auto& e : node.entries) {
      ClusteringFeature sum(dim_);
      for (const auto& c : e.child->entries) sum.add(c.cf);
      if (sum.n != e.cf.n) return false;
      auto close = [rel_tol](double a, double b) {
        return std::abs(a - b) <= rel_tol * std::max({1.0, std::abs(a), std::abs(b)});
      };
      if (!close(sum.square_sum, e.cf.square_sum)) return false;
      for (std::size_t j = 0; j < dim_; ++j) {
        if (!close(sum.linear_sum[j], e.cf.linear_sum[j])) return false;
      }
      if (!check(*e.child, rel_tol)) return false;
    }
    return true;
  }

  std::size_t dim_;
  double threshold2_;
  std::size_t branching_;
  std::unique_ptr<CfNode> root_;
  std::size_t next_id_ = 0;
};

/// Ward agglomeration of weighted centroids down to k groups via the
/// nearest-neighbour chain. Returns a group index per input, numbered by the
/// lowest input index in each group.
inline std::vector<int> ward_agglomerate(const std::vector<ClusteringFeature>& parts, std::size_t k) {
  const std::size_t m = parts.size();
  std::vector<int> group(m);
  if (m <= k) {
    for (std::size_t i = 0; i < m; ++i) group[i] = static_cast<int>(i);
    return group;
  }
  std::vector<std::vector<double>> centroid(m);
  std::vector<double> weight(m);
  for (std::size_t i = 0; i < m; ++i) {
    centroid[i] = parts[i].centroid();
    weight[i] = static_cast<double>(parts[i].n);
  }
  std::vector<char> alive(m, 1);
  auto ward = [&](std::size_t a, std::size_t b) {
    return weight[a] * weight[b] / (weight[a] + weight[b]) * squared_distance(centroid[a], centroid[b]);
  };
  struct Merge {
    double height;
    std::size_t a, b;
  };
  std::vector<Merge> merges;
  std::vector<std::size_t> chain;
  std::size_t remaining = m;
  while (remaining > 1) {
    if (chain.empty()) {
      chain.push_back(static_cast<std::size_t>(std::find(alive.begin(), alive.end(), 1) - alive.begin()));
    }
    const std::size_t a = chain.back();
    const std::size_t prev = chain.size() >= 2 ? chain[chain.size() - 2] : m;
    std::size_t b = prev;
    double best = prev < m ? ward(a, prev) : std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < m; ++c) {
      if (!alive[c] || c == a) continue;
      const double h = ward(a, c);
      if (h < best) best = h, b = c;
    }
    if (b != prev) {
      chain.push_back(b);
      continue;
    }
    chain.pop_back();
    chain.pop_back();
    const std::size_t keep = std::min(a, b), drop = std::max(a, b);
    merges.push_back({best, keep, drop});
    const double w = weight[keep] + weight[drop];
    for (std::size_t j = 0; j < centroid[keep].size(); ++j) {
      centroid[keep][j] = (weight[keep] * centroid[keep][j] + weight[drop] * centroid[drop][j]) / w;
    }
    weight[keep] = w;
    alive[drop] = 0;
    --remaining;
  }
  std::stable_sort(merges.begin(), merges.end(), [](const Merge& x, const Merge& y) { return x.height < y.height; });
  DisjointSets sets(m);
  for (std::size_t i = 0; i + k < m; ++i) sets.unite(merges[i].a, merges[i].b);
  std::vector<int> id_of_root(m, -1);
  int next = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t r = sets.find(i);
    if (id_of_root[r] < 0) id_of_root[r] = next++;
    group[i] = id_of_root[r];
  }
  return group;
}

}  // namespace detail

/// Single-pass CF-tree build, then Ward agglomeration of the leaf subclusters
/// down to k. Each pixel takes the final label of the subcluster that absorbed it.
inline ClusterResult birch(const PixelMatrix& x, const ClusterParams& p) {
  p.validate();
  const std::size_t n = x.n_pixels();
  if (n == 0) throw ParameterError("birch needs at least one point");
  detail::CfTree tree(x.n_features(), p.birch_threshold, p.birch_branching);
  std::vector<std::size_t> member(n);
  for (std::size_t i = 0; i < n; ++i) member[i] = tree.insert(x.row(i));

  const auto parts = tree.subclusters();
  const auto group = detail::ward_agglomerate(parts, p.k);
  std::vector<int> labels(n);
  for (std::size_t i = 0; i < n; ++i) labels[i] = group[member[i]];

  ClusterResult r;
  r.labels = LabelArray::compacted(labels);
  r.centroids = detail::cluster_means(x, r.labels);
  r.iterations = 1;
  r.resolved["subclusters"] = static_cast<double>(parts.size());
  r.resolved["tree_depth"] = static_cast<double>(tree.depth());
  if (!tree.check_additivity(1e-9)) r.warnings.push_back("CF additivity check failed");
  return r;
}

}  // namespace hsieval
