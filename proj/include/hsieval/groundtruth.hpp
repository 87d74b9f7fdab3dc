#pragma once

// Verification of cluster labels against a binary annotation mask.
//
// Both rasters become identifier arrays: the annotation uses 0 (intact) and
// 10 (deteriorated), the clustering uses 1..K with noise as 0. For each
// candidate cluster identifier the arrays are rewritten so that the candidate
// is the positive class, scored, and the best-scoring identifier is kept.

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "hsieval/core.hpp"

namespace hsieval {

enum class IdentifierDomain { annotation, clustered };

struct IdentifierArray {
  std::vector<int> ids;
  IdentifierDomain domain = IdentifierDomain::clustered;

  std::size_t size() const noexcept { return ids.size(); }
};

inline IdentifierArray rgb_to_identifiers(const RgbImage& image, IdentifierDomain domain,
                                          const Palette& palette = Palette::default_palette()) {
  IdentifierArray out{std::vector<int>(image.pixels.size()), domain};
  for (std::size_t i = 0; i < image.pixels.size(); ++i) {
    const Rgb& p = image.pixels[i];
    if (domain == IdentifierDomain::annotation) {
      if (p == kWhite) {
        out.ids[i] = AnnotationMask::kDeteriorated;
      } else if (p == kBlack) {
        out.ids[i] = AnnotationMask::kIntact;
      } else {
        throw MappingError("colour is not an annotation colour", i % image.width, i / image.width);
      }
    } else if (p == palette.noise()) {
      out.ids[i] = 0;
    } else if (auto idx = palette.find(p)) {
      out.ids[i] = static_cast<int>(*idx) + 1;
    } else {
      throw MappingError("colour is not in the palette", i % image.width, i / image.width);
    }
  }
  return out;
}

inline IdentifierArray identifiers_from_mask(const AnnotationMask& mask) {
  return {mask.identifiers, IdentifierDomain::annotation};
}

/// Raw path: label l becomes identifier l + 1, noise becomes 0.
inline IdentifierArray identifiers_from_labels(const LabelArray& labels) {
  IdentifierArray out{std::vector<int>(labels.size()), IdentifierDomain::clustered};
  for (std::size_t i = 0; i < labels.size(); ++i) out.ids[i] = labels[i] == kNoise ? 0 : labels[i] + 1;
  return out;
}

struct AdaptedPair {
  std::vector<int> y_true;
  std::vector<int> y_pred;
};

/// Annotation 10 becomes `label`, everything else 0; cluster positions keep
/// `label` only where they already hold it.
inline AdaptedPair adapt_for_label(const IdentifierArray& annot, const IdentifierArray& clus, int label) {
  if (annot.size() != clus.size()) {
    throw DimensionError("annotation has " + std::to_string(annot.size()) + " pixels, clustering has " +
                         std::to_string(clus.size()));
  }
  AdaptedPair out{std::vector<int>(annot.size()), std::vector<int>(clus.size())};
  for (std::size_t i = 0; i < annot.size(); ++i) {
    out.y_true[i] = annot.ids[i] == AnnotationMask::kDeteriorated ? label : 0;
    out.y_pred[i] = clus.ids[i] == label ? label : 0;
  }
  return out;
}

struct BinaryScores {
  double accuracy = 0;
  double precision = 0;
  double recall = 0;
  double f1 = 0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
};

/// Confusion counts with `label` as the positive class. Empty denominators give 0.
inline BinaryScores binary_scores(const std::vector<int>& y_true, const std::vector<int>& y_pred, int label) {
  if (y_true.size() != y_pred.size()) throw DimensionError("y_true and y_pred differ in length");
  BinaryScores s;
  for (std::size_t i = 0; i < y_true.size(); ++i) {
    const bool t = y_true[i] == label, p = y_pred[i] == label;
    if (t && p) ++s.tp;
    else if (!t && p) ++s.fp;
    else if (t && !p) ++s.fn;
    else ++s.tn;
  }
  const auto ratio = [](std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); };
  s.accuracy = ratio(s.tp + s.tn, y_true.size());
  s.precision = ratio(s.tp, s.tp + s.fp);
  s.recall = ratio(s.tp, s.tp + s.fn);
  s.f1 = s.precision + s.recall > 0 ? 2 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

enum class MatchCriterion { f1, accuracy };

inline std::string_view to_string(MatchCriterion c) { return c == MatchCriterion::f1 ? "f1" : "accuracy"; }

inline MatchCriterion parse_criterion(std::string_view s) {
  if (s == "f1") return MatchCriterion::f1;
  if (s == "accuracy") return MatchCriterion::accuracy;
  throw ParameterError("unknown match criterion '" + std::string(s) + "'");
}

struct LabelScore {
  int label = 0;
  BinaryScores scores;
};

struct MatchResult {
  int best_label = 0;
  std::vector<LabelScore> per_label;  // ascending identifier

  const BinaryScores& best() const {
    return std::find_if(per_label.begin(), per_label.end(), [&](const LabelScore& s) { return s.label == best_label; })
        ->scores;
  }
};

/// Scores every non-zero cluster identifier and keeps the best by the chosen
/// criterion; ties go to higher recall, then the lower identifier.
inline MatchResult best_match(const IdentifierArray& annot, const IdentifierArray& clus,
                              MatchCriterion criterion = MatchCriterion::f1) {
  if (annot.size() != clus.size()) throw DimensionError("annotation and clustering differ in pixel count");
  std::vector<int> candidates;
  for (int id : clus.ids) {
    if (id != 0) candidates.push_back(id);
  }
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
  if (candidates.empty()) throw EmptyClusteringError("clustering has no non-noise identifiers");

  MatchResult result;
  for (int label : candidates) {
    const auto adapted = adapt_for_label(annot, clus, label);
    result.per_label.push_back({label, binary_scores(adapted.y_true, adapted.y_pred, label)});
  }
  const auto key = [criterion](const BinaryScores& s) { return criterion == MatchCriterion::f1 ? s.f1 : s.accuracy; };
  const LabelScore* best = &result.per_label.front();
  for (const auto& c : result.per_label) {
    const double a = key(c.scores), b = key(best->scores);
    if (a > b || (a == b && c.scores.recall > best->scores.recall)) best = &c;
  }
  result.best_label = best->label;
  return result;
}

}  // namespace hsieval
