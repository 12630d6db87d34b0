#pragma once

// Runtime scaling of the one-pass decoder with the test length.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <vector>

#include "framewarp/eval.hpp"
#include "framewarp/model.hpp"
#include "framewarp/one_pass.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/two_pass.hpp"

namespace framewarp {

/// A test series of `length` frames stitched from random template instances:
/// one random member frame per metaframe, templates chosen uniformly.
inline TimeSeries series_from_model(const SuperTemplate& model, Index length, std::uint64_t seed) {
  if (model.empty()) throw InvariantError("series_from_model: empty model");
  Rng rng(seed);
  std::vector<FrameVector> frames;
  frames.reserve(length);
  while (frames.size() < length) {
    const auto& tpl = model[rng.below(model.size())];
    for (const auto& m : tpl.metaframes) {
      if (frames.size() == length) break;
      frames.push_back(m.frames[rng.below(m.frames.size())]);
    }
  }
  return TimeSeries(std::move(frames));
}

struct BenchRow {
  Index length = 0;
  double seconds = 0.0;  // fastest of the repeats
  Index distance_evaluations = 0;
  Index expected_evaluations = 0;  // templates' total length x test length
  Index subsequences = 0;          // scored by the two-pass action level; 0 when skipped
  Index expected_subsequences = 0;
};

struct BenchReport {
  std::vector<BenchRow> rows;
  LinearFit fit;  // seconds against length
};

struct BenchOptions {
  DistanceParams params;
  Index repeats = 3;
  Index two_pass_max_length = 400;  // also run the two-pass action level up to this length
  Index t_min_gap = kDefaultMinGap;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

inline BenchReport benchmark_scaling(const SuperTemplate& model, const std::vector<Index>& lengths,
                                     const BenchOptions& options = {}) {
  if (lengths.size() < 2) throw InvariantError("benchmark needs at least two lengths");
  for (Index i = 0; i < lengths.size(); ++i) {
    if (lengths[i] == 0 || (i > 0 && lengths[i] <= lengths[i - 1])) {
      throw InvariantError("benchmark lengths must be positive and increasing");
    }
  }
  using clock = std::chrono::steady_clock;
  BenchReport report;
  std::vector<double> xs, ys;
  for (Index length : lengths) {
    const TimeSeries z = series_from_model(model, length, options.seed + length);
    BenchRow row;
    row.length = length;
    row.expected_evaluations = model.total_length() * length;
    row.seconds = kInf;
    for (Index r = 0; r < std::max<Index>(1, options.repeats); ++r) {
      const auto start = clock::now();
      const auto result = op_dfw_segment(z, model, options.params, {}, options.threads);
      const std::chrono::duration<double> took = clock::now() - start;
      row.seconds = std::min(row.seconds, took.count());
      row.distance_evaluations = result.distance_evaluations;
    }
    if (length <= options.two_pass_max_length && length > options.t_min_gap) {
      row.subsequences = action_level_pass(z, model, options.params, options.t_min_gap, options.threads)
                             .evaluated_subsequences();
      row.expected_subsequences = subsequence_count(length, options.t_min_gap);
    }
    xs.push_back(static_cast<double>(length));
    ys.push_back(row.seconds);
    report.rows.push_back(row);
  }
  report.fit = fit_line(xs, ys);
  return report;
}

}  // namespace framewarp
