#include <gtest/gtest.h>

#include <set>

#include "framewarp/templates.hpp"
#include "oracles.hpp"

using namespace framewarp;

namespace {

/// Series that dwells `repeat[i]` frames on frame i of `base`.
TimeSeries stretched(const TimeSeries& base, const std::vector<Index>& repeat) {
  std::vector<FrameVector> frames;
  for (Index i = 0; i < base.length(); ++i) {
    for (Index r = 0; r < repeat[i]; ++r) frames.push_back(base[i]);
  }
  return TimeSeries(std::move(frames));
}

}  // namespace

TEST(ClassCenter, TrivialCases) {
  Rng rng(1);
  const auto a = oracle::random_series(rng, 4, 3);
  EXPECT_EQ(select_class_center({a}), 0u);
  EXPECT_EQ(select_class_center({a, oracle::random_series(rng, 5, 3)}), 0u);  // symmetric sums tie
  EXPECT_THROW(select_class_center({}), InvariantError);
}

TEST(ClassCenter, MatchesPairwiseEnumeration) {
  Rng rng(2);
  for (int i = 0; i < 20; ++i) {
    std::vector<TimeSeries> xs;
    const Index n = 3 + rng.below(3);
    for (Index j = 0; j < n; ++j) xs.push_back(oracle::random_series(rng, 2 + rng.below(4), 3));
    std::vector<double> sums(n, 0.0);
    for (Index a = 0; a < n; ++a) {
      for (Index b = 0; b < n; ++b) {
        if (a == b) continue;
        std::vector<std::vector<double>> d(xs[a].length(), std::vector<double>(xs[b].length()));
        for (Index t = 0; t < xs[a].length(); ++t) {
          for (Index u = 0; u < xs[b].length(); ++u) d[t][u] = frame_distance(xs[a][t], xs[b][u]);
        }
        const auto means = oracle::dtw_optimal_means(d);
        ASSERT_EQ(means.size(), 1u);  // continuous random costs: a unique optimum
        sums[a] += means.front();
      }
    }
    const auto expected = static_cast<Index>(std::min_element(sums.begin(), sums.end()) - sums.begin());
    EXPECT_EQ(select_class_center(xs), expected);
    EXPECT_EQ(select_class_center(xs, 3), expected);
  }
}

TEST(LengthBounds, MinAndMax) {
  Rng rng(3);
  EXPECT_EQ(length_bounds({oracle::random_series(rng, 5, 2)}), (std::pair<Index, Index>{5, 5}));
  EXPECT_EQ(length_bounds({oracle::random_series(rng, 3, 2), oracle::random_series(rng, 7, 2),
                           oracle::random_series(rng, 5, 2)}),
            (std::pair<Index, Index>{3, 7}));
  EXPECT_THROW(length_bounds({}), InvariantError);
}

TEST(ClassTemplateBuild, SingleExampleGivesSingletonMetaframes) {
  Rng rng(4);
  const auto x = oracle::random_series(rng, 6, 3);
  const auto tpl = build_class_template(2, {x});
  ASSERT_EQ(tpl.length(), 6u);
  for (Index t = 0; t < 6; ++t) {
    ASSERT_EQ(tpl.metaframes[t].size(), 1u);
    EXPECT_EQ(tpl.metaframes[t].frames[0], x[t]);
  }
  EXPECT_EQ(tpl.t_min, 6u);
  EXPECT_EQ(tpl.t_max, 6u);
}

TEST(ClassTemplateBuild, IdenticalExamplesDoubleEveryMetaframe) {
  Rng rng(5);
  const auto x = oracle::random_series(rng, 5, 3);
  const auto tpl = build_class_template(1, {x, x});
  for (const auto& m : tpl.metaframes) {
    ASSERT_EQ(m.size(), 2u);
    EXPECT_EQ(m.frames[0], m.frames[1]);
  }
}

TEST(ClassTemplateBuild, SpeedVariedExamplesGiveUnevenPopulations) {
  Rng rng(6);
  const auto base = oracle::random_series(rng, 6, 4);
  const std::vector<TimeSeries> xs{base, stretched(base, {2, 2, 2, 1, 1, 1}), stretched(base, {1, 1, 1, 3, 3, 3}),
                                   stretched(base, {1, 2, 1, 2, 1, 2})};
  const auto tpl = build_class_template(1, xs);
  std::set<Index> sizes;
  for (const auto& m : tpl.metaframes) sizes.insert(m.size());
  EXPECT_GT(sizes.size(), 1u);
}

TEST(ClassTemplateBuild, PropertyEveryTrainingFrameLandsOnce) {
  Rng rng(7);
  for (int i = 0; i < 30; ++i) {
    std::vector<TimeSeries> xs;
    const Index n = 1 + rng.below(5);
    for (Index j = 0; j < n; ++j) xs.push_back(oracle::random_series(rng, 2 + rng.below(8), 3));
    const auto tpl = build_class_template(1, xs);
    const Index center = select_class_center(xs);
    EXPECT_EQ(tpl.length(), xs[center].length());
    EXPECT_LE(tpl.t_min, tpl.length());
    EXPECT_GE(tpl.t_max, tpl.length());
    std::set<std::pair<Index, Index>> seen;
    Index total = 0;
    for (const auto& m : tpl.metaframes) {
      ASSERT_EQ(m.frames.size(), m.sources.size());
      for (Index k = 0; k < m.size(); ++k) {
        const auto& src = m.sources[k];
        EXPECT_EQ(m.frames[k], xs[src.example][src.frame]);
        EXPECT_TRUE(seen.insert({src.example, src.frame}).second);
        ++total;
      }
    }
    Index expected = 0;
    for (const auto& x : xs) expected += x.length();
    EXPECT_EQ(total, expected);
  }
}

TEST(ClassTemplateBuild, RejectsBadInput) {
  Rng rng(8);
  EXPECT_THROW(build_class_template(1, {}), InvariantError);
  EXPECT_THROW(build_class_template(0, {oracle::random_series(rng, 3, 2)}), InvariantError);
  EXPECT_THROW(build_class_template(1, {oracle::random_series(rng, 3, 2), oracle::random_series(rng, 3, 3)}),
               DimensionError);
}

TEST(NullTemplate, HoldsBackgroundFrames) {
  Rng rng(9);
  std::vector<FrameVector> bg;
  for (int i = 0; i < 10; ++i) bg.push_back(oracle::random_frame(rng, 3));
  const auto tpl = build_null_template(bg);
  EXPECT_TRUE(tpl.is_null);
  EXPECT_EQ(tpl.label, kNullLabel);
  EXPECT_EQ(tpl.length(), 1u);
  EXPECT_EQ(tpl.metaframes[0].size(), 10u);
  EXPECT_EQ(tpl.t_max, kUnboundedLength);

  for (int i = 0; i < 990; ++i) bg.push_back(oracle::random_frame(rng, 3));
  EXPECT_EQ(build_null_template(bg, 512).metaframes[0].size(), 512u);
  EXPECT_THROW(build_null_template({}), InvariantError);
}

TEST(SuperTemplateBuild, OffsetsAndValidation) {
  Rng rng(10);
  std::vector<ClassTemplate> tpls;
  for (Index len : {4, 5, 6}) {
    tpls.push_back(build_class_template(static_cast<Label>(len), {oracle::random_series(rng, len, 2)}));
  }
  const auto model = build_super_template(tpls);
  EXPECT_EQ(model.total_length(), 15u);
  EXPECT_EQ(model.offset(2), 9u);
  EXPECT_EQ(model.order(), (std::vector<Label>{4, 5, 6}));
  EXPECT_NO_THROW(build_super_template({tpls[0]}));
  tpls.push_back(tpls[1]);
  EXPECT_THROW(build_super_template(tpls), InvariantError);
}

TEST(TrainModel, CutsAnnotatedSequences) {
  Rng rng(11);
  const auto z = oracle::random_series(rng, 12, 3);
  TrainingSet data;
  data.add_annotated(z, Segmentation({{0, 3, 1}, {4, 5, 0}, {6, 11, 2}}));
  EXPECT_EQ(data.background.size(), 2u);
  TrainOptions opts;
  opts.pattern_labels = {2};
  const auto model = train_model(data, opts);
  ASSERT_EQ(model.size(), 3u);
  EXPECT_EQ(model.order(), (std::vector<Label>{1, 2, 0}));
  EXPECT_FALSE(model[0].is_pattern);
  EXPECT_TRUE(model[1].is_pattern);
  EXPECT_TRUE(model[2].is_null);
  EXPECT_EQ(model[0].length(), 4u);
  EXPECT_EQ(model[1].length(), 6u);
  EXPECT_THROW(train_model(TrainingSet{}), InvariantError);
}
