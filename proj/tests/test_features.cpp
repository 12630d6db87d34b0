#include <gtest/gtest.h>

#include <cmath>

#include "framewarp/features.hpp"
#include "oracles.hpp"

using namespace framewarp;

namespace {

Keypoint point(Index frame, std::initializer_list<double> desc) {
  Keypoint p;
  p.frame = frame;
  p.descriptor = Eigen::Map<const Eigen::VectorXd>(desc.begin(), static_cast<Eigen::Index>(desc.size()));
  return p;
}

KeypointStream stream_at(Index length, const std::vector<Index>& frames) {
  KeypointStream s;
  s.video_length = length;
  s.dim = 1;
  for (Index f : frames) s.points.push_back(point(f, {0.0}));
  return s;
}

/// Window by direct growth, counting keypoints with a loop.
Window grow(const KeypointStream& s, Index t, Index q, Index cap) {
  if (cap == 0) cap = s.video_length;
  auto make = [&](Index w) {
    Window win{t >= w ? t - w : 0, std::min(s.video_length - 1, t + w), 0};
    for (const auto& p : s.points) win.count += p.frame >= win.lo && p.frame <= win.hi;
    return win;
  };
  for (Index w = 0; w <= cap; ++w) {
    const auto win = make(w);
    if (win.count >= q) return win;
  }
  return make(cap);
}

}  // namespace

TEST(Dictionary, TwoClustersGiveTheirMeans) {
  Rng rng(41);
  KeypointStream s;
  s.video_length = 1;
  s.dim = 2;
  Eigen::Vector2d sum_a = Eigen::Vector2d::Zero(), sum_b = Eigen::Vector2d::Zero();
  for (int i = 0; i < 50; ++i) {
    const Eigen::Vector2d a(rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    const Eigen::Vector2d b(100.0 + rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0));
    sum_a += a;
    sum_b += b;
    s.points.push_back({0, a});
    s.points.push_back({0, b});
  }
  const auto dict = build_dictionary({s}, 2, 7);
  ASSERT_EQ(dict.size(), 2u);
  const Eigen::Vector2d ma = sum_a / 50.0, mb = sum_b / 50.0;
  const Eigen::Vector2d c0 = dict.words.col(0), c1 = dict.words.col(1);
  const bool straight = (c0 - ma).norm() < (c0 - mb).norm();
  EXPECT_LT(((straight ? c0 : c1) - ma).norm(), 1e-6);
  EXPECT_LT(((straight ? c1 : c0) - mb).norm(), 1e-6);
  EXPECT_EQ(dict.idf, Eigen::VectorXd::Ones(2));
  EXPECT_EQ(build_dictionary({s}, 2, 7), dict);
}

TEST(Dictionary, DistinctPointsAreReproducedExactly) {
  Rng rng(42);
  KeypointStream s;
  s.video_length = 3;
  s.dim = 3;
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 6; ++i) pts.push_back(Eigen::VectorXd::Random(3) * 10.0);
  for (int r = 0; r < 3; ++r) {
    for (const auto& p : pts) s.points.push_back({static_cast<Index>(r), p});
  }
  const auto dict = build_dictionary({s}, 6, 3);
  for (const auto& p : pts) {
    EXPECT_LT((dict.words.col(static_cast<Eigen::Index>(dict.nearest(p))) - p).norm(), 1e-12);
  }
}

TEST(Dictionary, RejectsTooFewKeypoints) {
  const auto s = stream_at(2, {0, 1});
  EXPECT_THROW(build_dictionary({s}, 3, 1), CapacityError);
  EXPECT_THROW(build_dictionary({s}, 1, 1), InvariantError);
}

TEST(AdaptiveWindow, Examples) {
  auto s = stream_at(20, {10, 10, 10});
  EXPECT_EQ(adaptive_window(s, 10, 3), (Window{10, 10, 3}));
  s = stream_at(20, {7, 13});
  EXPECT_EQ(adaptive_window(s, 10, 1), (Window{7, 13, 2}));
  s = stream_at(20, {});
  EXPECT_EQ(adaptive_window(s, 10, 1, 4), (Window{6, 14, 0}));
  EXPECT_THROW(adaptive_window(s, 20, 1), InvariantError);
  EXPECT_THROW(adaptive_window(s, 0, 0), InvariantError);
}

TEST(AdaptiveWindow, PropertyMatchesDirectGrowthAndIsMonotoneInQ) {
  Rng rng(43);
  for (int i = 0; i < 200; ++i) {
    const Index length = 1 + rng.below(30);
    std::vector<Index> frames;
    for (Index k = 0; k < rng.below(20); ++k) frames.push_back(rng.below(length));
    const auto s = stream_at(length, frames);
    const Index t = rng.below(length);
    const Index cap = rng.below(6);
    Index previous = 0;
    for (Index q = 1; q < 8; ++q) {
      const auto w = adaptive_window(s, t, q, cap);
      const auto expected = grow(s, t, q, cap);
      EXPECT_EQ(w.count, expected.count);
      if (expected.count >= q) {
        EXPECT_EQ(w, expected);
      }
      const Index width = w.hi - w.lo;
      EXPECT_GE(width, previous);
      previous = width;
    }
  }
}

TEST(Featurize, ThreeFourFiveHistogram) {
  KeypointStream s;
  s.video_length = 1;
  s.dim = 1;
  for (int i = 0; i < 3; ++i) s.points.push_back(point(0, {0.0}));
  for (int i = 0; i < 4; ++i) s.points.push_back(point(0, {1.0}));
  Dictionary dict;
  dict.words = Eigen::MatrixXd(1, 2);
  dict.words << 0.0, 1.0;
  dict.idf = Eigen::VectorXd::Ones(2);
  const auto z = featurize(s, dict, WindowPolicy::adaptive(1));
  ASSERT_EQ(z.length(), 1u);
  EXPECT_NEAR(z[0][0], 0.6, 1e-12);
  EXPECT_NEAR(z[0][1], 0.8, 1e-12);
}

TEST(Featurize, EmptyWindowGivesZeroFrame) {
  auto s = stream_at(10, {0});
  Dictionary dict;
  dict.words = Eigen::MatrixXd(1, 2);
  dict.words << 0.0, 5.0;
  dict.idf = Eigen::VectorXd::Ones(2);
  const auto z = featurize(s, dict, WindowPolicy::adaptive(1, 2));
  EXPECT_FALSE(z[0].empty());
  EXPECT_FALSE(z[2].empty());
  EXPECT_TRUE(z[3].empty());
  EXPECT_TRUE(z[9].empty());
}

TEST(Featurize, GlobalWindowCountsEveryKeypoint) {
  Rng rng(44);
  KeypointStream s;
  s.video_length = 12;
  s.dim = 2;
  for (int i = 0; i < 40; ++i) s.points.push_back({rng.below(12), Eigen::VectorXd::Random(2)});
  Dictionary dict;
  dict.words = Eigen::MatrixXd::Random(2, 5);
  dict.idf = Eigen::VectorXd::Ones(5);
  const auto counts = window_counts(s, dict, WindowPolicy::fixed(30));
  for (Eigen::Index t = 0; t < counts.cols(); ++t) EXPECT_EQ(counts.col(t).sum(), 40.0);
  EXPECT_EQ(window_counts(s, dict, WindowPolicy::fixed(30), 4), counts);
}

TEST(Featurize, FixedWindowIsSymmetric) {
  const auto s = stream_at(20, {0, 5, 10, 15});
  const auto w = frame_windows(s, WindowPolicy::fixed(15));
  EXPECT_EQ(w[10], (Window{3, 17, 3}));
  EXPECT_EQ(w[0], (Window{0, 7, 2}));
}

TEST(Idf, Cases) {
  Eigen::MatrixXd a(3, 4);
  // word 0 everywhere, word 1 once, word 2 never
  a << 1, 2, 1, 3,
       0, 1, 0, 0,
       0, 0, 0, 0;
  const auto idf = compute_idf({a});
  EXPECT_DOUBLE_EQ(idf(0), 0.0);
  EXPECT_DOUBLE_EQ(idf(1), std::log(4.0));
  EXPECT_DOUBLE_EQ(idf(2), std::log(4.0));

  Eigen::MatrixXd b(3, 4);
  b << 1, 0, 0, 0,
       1, 0, 0, 0,
       0, 0, 0, 1;
  const auto both = compute_idf({a, b});
  EXPECT_DOUBLE_EQ(both(0), std::log(8.0 / 5.0));
  EXPECT_DOUBLE_EQ(both(1), std::log(8.0 / 2.0));
  EXPECT_DOUBLE_EQ(both(2), std::log(8.0 / 1.0));
  EXPECT_THROW(compute_idf({}), InvariantError);
  EXPECT_THROW(compute_idf({Eigen::MatrixXd::Zero(2, 3)}), InvariantError);
}
