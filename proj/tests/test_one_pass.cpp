#include <gtest/gtest.h>

#include "framewarp/isolated.hpp"
#include "framewarp/one_pass.hpp"
#include "framewarp/templates.hpp"
#include "oracles.hpp"

using namespace framewarp;

namespace {

ClassTemplate singleton_template(const std::vector<FrameVector>& frames, Label label, Index t_min = 1,
                                 Index t_max = kUnboundedLength) {
  ClassTemplate tpl;
  tpl.label = label;
  for (const auto& f : frames) tpl.metaframes.push_back({{f}, {}});
  tpl.t_min = t_min;
  tpl.t_max = t_max;
  return tpl;
}

/// Checks the structural promises of a one-pass path.
void check_path(const OnePassResult& r, const std::vector<TemplateShape>& shapes, Index rows, bool enforced) {
  ASSERT_FALSE(r.path.empty());
  std::map<Label, Index> index;
  for (Index l = 0; l < shapes.size(); ++l) index[shapes[l].label] = l;
  r.segmentation.validate(rows);
  EXPECT_EQ(r.frame_labels, r.segmentation.frame_labels());
  EXPECT_EQ(r.path.back().t, rows - 1);

  Index i = 0;
  for (const auto& seg : r.segmentation.segments()) {
    const auto& shape = shapes[index.at(seg.label)];
    ASSERT_LT(i, r.path.size());
    EXPECT_EQ(r.path[i].t, seg.begin);
    EXPECT_EQ(r.path[i].t_prime, 0u);
    Index j = i;
    while (j + 1 < r.path.size() && r.path[j + 1].t <= seg.end) {
      const auto& a = r.path[j];
      const auto& b = r.path[j + 1];
      EXPECT_EQ(a.label, b.label);
      const auto dt = static_cast<long>(b.t) - static_cast<long>(a.t);
      const auto dtp = static_cast<long>(b.t_prime) - static_cast<long>(a.t_prime);
      EXPECT_NE(transition_penalty(static_cast<int>(dt), static_cast<int>(dtp)), kInf);
      ++j;
    }
    EXPECT_EQ(r.path[j].t, seg.end);
    EXPECT_EQ(r.path[j].t_prime, shape.length - 1);
    if (enforced) {
      EXPECT_TRUE(shape.admits(seg.length()));
    }
    i = j + 1;
  }
  EXPECT_EQ(i, r.path.size());
}

}  // namespace

TEST(OnePass, TwoOrthogonalTemplatesSplitExactly) {
  const Index dim = 6;
  const SuperTemplate model({singleton_template({oracle::one_hot(dim, 0), oracle::one_hot(dim, 1), oracle::one_hot(dim, 2)}, 1),
                             singleton_template({oracle::one_hot(dim, 3), oracle::one_hot(dim, 4)}, 2)});
  std::vector<FrameVector> frames;
  for (Index k : {0, 0, 1, 2, 2, 3, 4, 4, 4}) frames.push_back(oracle::one_hot(dim, k));
  const auto r = op_dfw_segment(TimeSeries(frames), model, DistanceParams{});
  EXPECT_EQ(r.segmentation, Segmentation({{0, 4, 1}, {5, 8, 2}}));
  EXPECT_NEAR(r.score, 0.0, 1e-12);
  EXPECT_FALSE(r.relaxed);
}

TEST(OnePass, SingleActionGivesSingleSegment) {
  const Index dim = 6;
  const SuperTemplate model({singleton_template({oracle::one_hot(dim, 0), oracle::one_hot(dim, 1), oracle::one_hot(dim, 2)}, 1),
                             singleton_template({oracle::one_hot(dim, 3), oracle::one_hot(dim, 4)}, 2)});
  std::vector<FrameVector> frames;
  for (Index k : {3, 3, 4, 4}) frames.push_back(oracle::one_hot(dim, k));
  const auto r = op_dfw_segment(TimeSeries(frames), model, DistanceParams{});
  EXPECT_EQ(r.segmentation, Segmentation({{0, 3, 2}}));
}

TEST(OnePass, RepeatedPatternIsSplitAtEveryRepetition) {
  const Index dim = 4;
  const SuperTemplate model({singleton_template({oracle::one_hot(dim, 0), oracle::one_hot(dim, 1), oracle::one_hot(dim, 2)}, 11)});
  std::vector<FrameVector> frames;
  for (int r = 0; r < 3; ++r) {
    for (Index k : {0, 1, 2}) frames.push_back(oracle::one_hot(dim, k));
  }
  const auto r = op_dfw_segment(TimeSeries(frames), model, DistanceParams{});
  EXPECT_EQ(r.segmentation, Segmentation({{0, 2, 11}, {3, 5, 11}, {6, 8, 11}}));
  EXPECT_EQ(alias_segmentation(r.segmentation, {{11, 1}}), Segmentation({{0, 8, 1}}));
}

TEST(OnePass, ExactDecodeMatchesEnumeration) {
  Rng rng(2024);
  for (int i = 0; i < 300; ++i) {
    const bool bounds = i % 2 == 1;
    const auto inst = oracle::random_op_instance(rng, 8, 3, 4, bounds);
    const auto table = oracle::to_distance_table(inst);
    const double constrained = oracle::op_enumerate(inst.table, inst.shapes, true);
    const double free = oracle::op_enumerate(inst.table, inst.shapes, false);
    if (free == oracle::inf) {
      // some template longer than the series with no way to finish
      EXPECT_THROW(op_dfw_decode(table, inst.shapes), InvariantError);
      continue;
    }
    const auto r = op_dfw_decode(table, inst.shapes);
    if (constrained < oracle::inf) {
      EXPECT_FALSE(r.relaxed);
      EXPECT_NEAR(r.accumulated, constrained, 1e-9) << "instance " << i;
    } else {
      EXPECT_TRUE(r.relaxed);
      EXPECT_NEAR(r.accumulated, free, 1e-9) << "instance " << i;
    }
    check_path(r, inst.shapes, inst.table.size(), !r.relaxed);

    OnePassOptions off;
    off.enforce_lengths = false;
    EXPECT_NEAR(op_dfw_decode(table, inst.shapes, off).accumulated, free, 1e-9);
  }
}

TEST(OnePass, PerCellGateIsNeverCheaperAndAgreesWithoutBounds) {
  Rng rng(77);
  for (int i = 0; i < 300; ++i) {
    const auto inst = oracle::random_op_instance(rng, 8, 3, 4, true);
    if (oracle::op_enumerate(inst.table, inst.shapes, false) == oracle::inf) continue;
    const auto table = oracle::to_distance_table(inst);
    OnePassOptions exact, greedy;
    greedy.gate = LengthGate::per_cell;
    const auto a = op_dfw_decode(table, inst.shapes, exact);
    const auto b = op_dfw_decode(table, inst.shapes, greedy);
    if (!a.relaxed && !b.relaxed) {
      EXPECT_GE(b.accumulated, a.accumulated - 1e-12);
    }
    check_path(b, inst.shapes, inst.table.size(), !b.relaxed);

    exact.enforce_lengths = greedy.enforce_lengths = false;
    const auto c = op_dfw_decode(table, inst.shapes, exact);
    const auto d = op_dfw_decode(table, inst.shapes, greedy);
    EXPECT_EQ(c.accumulated, d.accumulated);
    EXPECT_EQ(c.path, d.path);
  }
}

TEST(OnePass, NullTemplateIsAlwaysAdmissible) {
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    auto inst = oracle::random_op_instance(rng, 8, 2, 3, true);
    TemplateShape null_shape;
    null_shape.label = kNullLabel;
    null_shape.is_null = true;
    inst.shapes.push_back(null_shape);
    for (auto& row : inst.table) row.push_back({rng.uniform(0.0, 2.0)});
    const auto r = op_dfw_decode(oracle::to_distance_table(inst), inst.shapes);
    EXPECT_FALSE(r.relaxed);  // the null template can always absorb the series
    EXPECT_NEAR(r.accumulated, oracle::op_enumerate(inst.table, inst.shapes, true), 1e-9);
  }
}

TEST(OnePass, SingleTemplateWithoutJumpsFollowsIsolatedAlignment) {
  Rng rng(6);
  for (int i = 0; i < 30; ++i) {
    // Distinct one-hot metaframes walked once in order: a self-jump would pay
    // a full mismatch, so the one-pass path is the isolated one.
    const Index len = 2 + rng.below(4);
    std::vector<FrameVector> tpl_frames, frames;
    for (Index k = 0; k < len; ++k) tpl_frames.push_back(oracle::one_hot(len, k));
    for (Index k = 0; k < len; ++k) {
      for (Index r = 0; r <= rng.below(3); ++r) frames.push_back(oracle::one_hot(len, k));
    }
    const auto tpl = singleton_template(tpl_frames, 1);
    const TimeSeries z(frames);
    OnePassOptions off;
    off.enforce_lengths = false;
    const auto one = op_dfw_segment(z, SuperTemplate({tpl}), DistanceParams{}, off);
    const auto iso = dfw_align(z, tpl, DistanceParams{});
    EXPECT_EQ(one.path, iso.path);
    EXPECT_EQ(one.segmentation.size(), 1u);
  }
}

TEST(OnePass, TemplateOrderOnlyMattersThroughTies) {
  Rng rng(7);
  for (int i = 0; i < 100; ++i) {
    const auto inst = oracle::random_op_instance(rng, 8, 3, 4, i % 2 == 0);
    if (oracle::op_enumerate(inst.table, inst.shapes, false) == oracle::inf) continue;
    const auto a = op_dfw_decode(oracle::to_distance_table(inst), inst.shapes);
    oracle::OpInstance flipped = inst;
    std::reverse(flipped.shapes.begin(), flipped.shapes.end());
    for (auto& row : flipped.table) std::reverse(row.begin(), row.end());
    const auto b = op_dfw_decode(oracle::to_distance_table(flipped), flipped.shapes);
    EXPECT_NEAR(a.accumulated, b.accumulated, 1e-12);
    EXPECT_EQ(a.frame_labels, b.frame_labels);  // random costs: no ties
  }
}

TEST(OnePass, UnsatisfiableBoundsAreRelaxed) {
  const Index dim = 3;
  const SuperTemplate model({singleton_template({oracle::one_hot(dim, 0), oracle::one_hot(dim, 1)}, 1, 10, 12)});
  const TimeSeries z({oracle::one_hot(dim, 0), oracle::one_hot(dim, 1), oracle::one_hot(dim, 1)});
  const auto r = op_dfw_segment(z, model, DistanceParams{});
  EXPECT_TRUE(r.relaxed);
  EXPECT_EQ(r.segmentation, Segmentation({{0, 2, 1}}));
  OnePassOptions strict;
  strict.gate = LengthGate::per_cell;
  EXPECT_TRUE(op_dfw_segment(z, model, DistanceParams{}, strict).relaxed);
}

TEST(OnePass, LengthBoundsForceTheRightSplit) {
  // One template, frames identical everywhere: only the bounds decide how
  // the 9 frames are split into instances of 3 frames.
  const Index dim = 2;
  const SuperTemplate model({singleton_template({oracle::one_hot(dim, 0)}, 1, 3, 3)});
  const TimeSeries z(std::vector<FrameVector>(9, oracle::one_hot(dim, 0)));
  const auto r = op_dfw_segment(z, model, DistanceParams{});
  EXPECT_FALSE(r.relaxed);
  EXPECT_EQ(r.segmentation, Segmentation({{0, 2, 1}, {3, 5, 1}, {6, 8, 1}}));
}

TEST(OnePass, ThreadCountDoesNotChangeTheResult) {
  Rng rng(8);
  std::vector<ClassTemplate> tpls;
  for (Label l = 1; l <= 3; ++l) {
    std::vector<TimeSeries> xs;
    for (int e = 0; e < 3; ++e) xs.push_back(oracle::random_series(rng, 4 + rng.below(4), 5));
    tpls.push_back(build_class_template(l, xs));
  }
  tpls.push_back(build_null_template({oracle::random_frame(rng, 5), oracle::random_frame(rng, 5)}));
  const SuperTemplate model(tpls);
  const auto z = oracle::random_series(rng, 40, 5);
  OnePassOptions opts;
  opts.keep_grid = true;
  const auto a = op_dfw_segment(z, model, DistanceParams{}, opts, 1);
  const auto b = op_dfw_segment(z, model, DistanceParams{}, opts, 4);
  EXPECT_EQ(a.path, b.path);
  EXPECT_EQ(a.accumulated, b.accumulated);
  EXPECT_EQ(a.grid, b.grid);
  EXPECT_EQ(a.grid_rows, 40u);
  EXPECT_EQ(a.grid_cols, model.total_length());
  EXPECT_EQ(a.distance_evaluations, 40 * model.total_length());
}

TEST(OnePass, RejectsEmptyInputs) {
  Rng rng(9);
  const SuperTemplate model({singleton_template({oracle::random_frame(rng, 2)}, 1)});
  EXPECT_THROW(op_dfw_segment(TimeSeries(), model, DistanceParams{}), InvariantError);
  EXPECT_THROW(op_dfw_segment(oracle::random_series(rng, 3, 2), SuperTemplate(), DistanceParams{}), InvariantError);
}

TEST(StreamLabels, AliasMergesPatternsIntoActions) {
  const Segmentation seg({{0, 3, 11}, {4, 7, 11}, {8, 10, 11}, {11, 12, 0}, {13, 15, 2}});
  const LabelAlias alias{{11, 1}, {2, 2}};
  EXPECT_EQ(alias_segmentation(seg, alias), Segmentation({{0, 10, 1}, {11, 12, 0}, {13, 15, 2}}));
  EXPECT_EQ(op_dfw_stream_labels(seg, alias), alias_segmentation(seg, alias).frame_labels());
}

TEST(StreamLabels, IdentityKeepsTheTrack) {
  const Segmentation seg({{0, 1, 1}, {2, 4, 2}, {5, 5, 1}});
  EXPECT_EQ(op_dfw_stream_labels(seg, {{1, 1}, {2, 2}}), seg.frame_labels());
}

TEST(StreamLabels, MissingEntryThrows) {
  const Segmentation seg({{0, 1, 1}, {2, 4, 2}});
  EXPECT_THROW(op_dfw_stream_labels(seg, {{1, 1}}), InvariantError);
}
