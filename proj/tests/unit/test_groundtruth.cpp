#include <gtest/gtest.h>

#include <random>

#include "hsieval/groundtruth.hpp"
#include "hsieval/raster_io.hpp"

using namespace hsieval;

namespace {

IdentifierArray annot(std::vector<int> ids) { return {std::move(ids), IdentifierDomain::annotation}; }
IdentifierArray clus(std::vector<int> ids) { return {std::move(ids), IdentifierDomain::clustered}; }

}  // namespace

TEST(RgbToIdentifiers, Annotation) {
  const RgbImage img(2, 1, {kWhite, kBlack});
  EXPECT_EQ(rgb_to_identifiers(img, IdentifierDomain::annotation).ids, (std::vector<int>{10, 0}));
}

TEST(RgbToIdentifiers, ClusteredPaletteAndNoise) {
  const auto pal = Palette::default_palette();
  const RgbImage img(3, 1, {pal.colors()[0], pal.colors()[2], pal.noise()});
  EXPECT_EQ(rgb_to_identifiers(img, IdentifierDomain::clustered).ids, (std::vector<int>{1, 3, 0}));
}

TEST(RgbToIdentifiers, UnknownColourReportsPixel) {
  const RgbImage img(2, 2, {kWhite, kBlack, kWhite, Rgb{1, 2, 3}});
  try {
    rgb_to_identifiers(img, IdentifierDomain::annotation);
    FAIL() << "expected MappingError";
  } catch (const MappingError& e) {
    EXPECT_EQ(e.x(), 1u);
    EXPECT_EQ(e.y(), 1u);
  }
  EXPECT_THROW(rgb_to_identifiers(RgbImage(1, 1, {kWhite}), IdentifierDomain::clustered), MappingError);
}

TEST(AdaptForLabel, WorkedMapping) {
  const auto a = annot({0, 10, 10, 0});
  const auto c = clus({2, 3, 3, 1});
  const auto three = adapt_for_label(a, c, 3);
  EXPECT_EQ(three.y_true, (std::vector<int>{0, 3, 3, 0}));
  EXPECT_EQ(three.y_pred, (std::vector<int>{0, 3, 3, 0}));
  const auto two = adapt_for_label(a, c, 2);
  EXPECT_EQ(two.y_true, (std::vector<int>{0, 2, 2, 0}));
  EXPECT_EQ(two.y_pred, (std::vector<int>{2, 0, 0, 0}));
  EXPECT_EQ(binary_scores(two.y_true, two.y_pred, 2).tp, 0u);
  EXPECT_EQ(adapt_for_label(annot({0, 0, 0}), clus({1, 2, 1}), 1).y_true, (std::vector<int>{0, 0, 0}));
  EXPECT_THROW(adapt_for_label(a, clus({1, 2}), 1), DimensionError);
}

TEST(BinaryScores, Examples) {
  const auto perfect = binary_scores({0, 3, 3, 0}, {0, 3, 3, 0}, 3);
  EXPECT_EQ(perfect.accuracy, 1);
  EXPECT_EQ(perfect.precision, 1);
  EXPECT_EQ(perfect.recall, 1);
  EXPECT_EQ(perfect.f1, 1);

  const auto missed = binary_scores({3, 3, 0, 0}, {0, 0, 0, 0}, 3);
  EXPECT_EQ(missed.tp, 0u);
  EXPECT_EQ(missed.fn, 2u);
  EXPECT_EQ(missed.tn, 2u);
  EXPECT_EQ(missed.accuracy, 0.5);
  EXPECT_EQ(missed.recall, 0);
  EXPECT_EQ(missed.precision, 0);
  EXPECT_EQ(missed.f1, 0);

  const auto false_alarm = binary_scores({0, 0}, {3, 3}, 3);
  EXPECT_EQ(false_alarm.fp, 2u);
  EXPECT_EQ(false_alarm.accuracy, 0);
  EXPECT_EQ(false_alarm.precision, 0);
  EXPECT_EQ(false_alarm.recall, 0);
  EXPECT_EQ(false_alarm.f1, 0);
}

TEST(BinaryScores, CountsAndRangesOnRandomArrays) {
  std::mt19937 rng(4);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = 1 + rng() % 50;
    std::vector<int> yt(n), yp(n);
    for (std::size_t i = 0; i < n; ++i) {
      yt[i] = (rng() % 2) ? 5 : 0;
      yp[i] = (rng() % 2) ? 5 : 0;
    }
    const auto s = binary_scores(yt, yp, 5);
    EXPECT_EQ(s.tp + s.fp + s.tn + s.fn, n);
    for (double v : {s.accuracy, s.precision, s.recall, s.f1}) {
      EXPECT_GE(v, 0);
      EXPECT_LE(v, 1);
    }
    if (s.precision + s.recall > 0) EXPECT_NEAR(s.f1, 2 * s.precision * s.recall / (s.precision + s.recall), 1e-15);
  }
}

TEST(BestMatch, Examples) {
  const auto planted = best_match(annot({10, 10, 0, 0, 10}), clus({4, 4, 1, 2, 4}));
  EXPECT_EQ(planted.best_label, 4);
  EXPECT_EQ(planted.best().f1, 1);

  const auto split = best_match(annot({10, 10, 0, 0}), clus({1, 1, 2, 2}));
  EXPECT_EQ(split.best_label, 1);
  ASSERT_EQ(split.per_label.size(), 2u);
  EXPECT_EQ(split.per_label[0].scores.f1, 1);
  EXPECT_EQ(split.per_label[1].scores.f1, 0);

  const auto tie = best_match(annot({10, 0, 10, 0}), clus({1, 1, 2, 2}));
  EXPECT_EQ(tie.per_label[0].scores.f1, 0.5);
  EXPECT_EQ(tie.per_label[1].scores.f1, 0.5);
  EXPECT_EQ(tie.best_label, 1);
}

TEST(BestMatch, RecallBreaksTies) {
  // label 1: tp 1, fp 0, fn 2 -> p 1, r 1/3, f1 0.5
  // label 2: tp 2, fp 3, fn 1 -> p 0.4, r 2/3, f1 0.5
  const auto m = best_match(annot({10, 10, 10, 0, 0, 0, 0}), clus({1, 2, 2, 2, 2, 2, 3}));
  EXPECT_DOUBLE_EQ(m.per_label[0].scores.f1, 0.5);
  EXPECT_DOUBLE_EQ(m.per_label[1].scores.f1, 0.5);
  EXPECT_EQ(m.best_label, 2);
}

TEST(BestMatch, AccuracyCriterion) {
  // f1 prefers the broad label 1; accuracy prefers label 2, which is mostly negatives correctly left out.
  const auto a = annot({10, 10, 0, 0, 0, 0, 0, 0});
  const auto c = clus({1, 1, 1, 1, 1, 1, 2, 0});
  EXPECT_EQ(best_match(a, c, MatchCriterion::f1).best_label, 1);
  EXPECT_EQ(best_match(a, c, MatchCriterion::accuracy).best_label, 2);
  EXPECT_EQ(parse_criterion("accuracy"), MatchCriterion::accuracy);
  EXPECT_EQ(to_string(MatchCriterion::f1), "f1");
  EXPECT_THROW(parse_criterion("auc"), ParameterError);
}

TEST(BestMatch, NoiseCountsAsNegative) {
  const auto m = best_match(annot({10, 10, 0}), clus({1, 0, 0}));
  ASSERT_EQ(m.per_label.size(), 1u);
  EXPECT_EQ(m.best().fn, 1u);
  EXPECT_EQ(m.best().tn, 1u);
  EXPECT_THROW(best_match(annot({10, 0}), clus({0, 0})), EmptyClusteringError);
  EXPECT_THROW(best_match(annot({10, 0}), clus({1})), DimensionError);
}

TEST(BestMatch, RenamingInvariance) {
  std::mt19937 rng(12);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 30;
    std::vector<int> a(n), c(n);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = (rng() % 3 == 0) ? 10 : 0;
      c[i] = static_cast<int>(rng() % 5);  // includes noise 0
    }
    if (std::all_of(c.begin(), c.end(), [](int v) { return v == 0; })) c[0] = 1;
    const std::vector<int> rename = {0, 3, 5, 1, 2};  // noise stays 0
    std::vector<int> c2(n);
    for (std::size_t i = 0; i < n; ++i) c2[i] = rename[static_cast<std::size_t>(c[i])];
    const auto m1 = best_match(annot(a), clus(c));
    const auto m2 = best_match(annot(a), clus(c2));
    const auto& s1 = m1.best();
    const auto& s2 = m2.best();
    EXPECT_EQ(s1.f1, s2.f1);
    EXPECT_EQ(s1.recall, s2.recall);
    // The winner may differ only when two labels tie on f1 and recall.
    if (rename[static_cast<std::size_t>(m1.best_label)] != m2.best_label) {
      EXPECT_EQ(s1.tp, s2.tp);
      EXPECT_EQ(s1.fp, s2.fp);
    }
  }
}

TEST(Composition, RenderedImagesRoundTripToSameMatch) {
  std::mt19937 rng(33);
  for (int t = 0; t < 100; ++t) {
    const std::size_t w = 1 + rng() % 8, h = 1 + rng() % 8;
    const std::size_t k = 1 + rng() % 6;
    std::vector<int> raw(w * h);
    for (auto& v : raw) v = static_cast<int>(rng() % (k + 1)) - 1;
    raw[0] = 0;
    const auto labels = LabelArray::compacted(raw);
    const auto img = render_labels(labels, w, h, Palette::default_palette());
    const auto from_img = rgb_to_identifiers(img, IdentifierDomain::clustered);
    const auto direct = identifiers_from_labels(labels);
    EXPECT_EQ(from_img.ids, direct.ids);

    std::vector<int> mask(w * h);
    for (auto& v : mask) v = (rng() % 2) ? 10 : 0;
    const AnnotationMask am(w, h, mask);
    EXPECT_EQ(best_match(identifiers_from_mask(am), from_img).best_label,
              best_match(identifiers_from_mask(am), direct).best_label);
  }
}
