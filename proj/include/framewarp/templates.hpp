#pragma once

// Template learning. Each class keeps its most central training example as
// the time axis; every other example is warped onto it and the frames landing
// on center position t' form metaframe t'.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "framewarp/dtw.hpp"
#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"
#include "framewarp/parallel.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

/// argmin_i sum_{j != i} DTW(X_i, X_j); ties go to the lowest index.
inline Index select_class_center(const std::vector<TimeSeries>& examples, unsigned threads = 1) {
  if (examples.empty()) throw InvariantError("select_class_center: no examples");
  const Index n = examples.size();
  std::vector<double> sums(n, 0.0);
  parallel_for(n, threads, [&](Index i) {
    double s = 0.0;
    for (Index j = 0; j < n; ++j) {
      if (j != i) s += dtw_align(examples[i], examples[j]).score;
    }
    sums[i] = s;
  });
  return static_cast<Index>(std::min_element(sums.begin(), sums.end()) - sums.begin());
}

/// (min, max) example length.
inline std::pair<Index, Index> length_bounds(const std::vector<TimeSeries>& examples) {
  if (examples.empty()) throw InvariantError("length_bounds: no examples");
  Index lo = kUnboundedLength;
  Index hi = 0;
  for (const auto& x : examples) {
    lo = std::min(lo, x.length());
    hi = std::max(hi, x.length());
  }
  return {lo, hi};
}

struct TemplateOptions {
  bool is_pattern = false;
  unsigned threads = 1;
};

inline ClassTemplate build_class_template(Label label, const std::vector<TimeSeries>& examples,
                                          const TemplateOptions& options = {}) {
  if (examples.empty()) throw InvariantError("build_class_template: no examples for label " + std::to_string(label));
  if (label == kNullLabel) throw InvariantError("label 0 is reserved for the null class");
  for (const auto& x : examples) {
    if (x.empty()) throw InvariantError("build_class_template: empty example");
    if (x.dim() != examples.front().dim()) throw DimensionError("build_class_template: examples differ in dimension");
  }
  const Index center = select_class_center(examples, options.threads);
  const TimeSeries& y = examples[center];

  ClassTemplate tpl;
  tpl.label = label;
  tpl.is_pattern = options.is_pattern;
  tpl.metaframes.resize(y.length());
  for (Index tp = 0; tp < y.length(); ++tp) {
    tpl.metaframes[tp].frames.push_back(y[tp]);
    tpl.metaframes[tp].sources.push_back({center, tp});
  }

  // Center on the rows, example on the columns. Each example frame joins the
  // metaframe of the first center frame it is matched with, so the example's
  // frames are partitioned; center frames skipped over by horizontal moves get
  // nothing from that example.
  std::vector<AlignmentPath> paths(examples.size());
  parallel_for(examples.size(), options.threads, [&](Index j) {
    if (j != center) paths[j] = dtw_align(y, examples[j]).path;
  });
  for (Index j = 0; j < examples.size(); ++j) {
    if (j == center) continue;
    Index next = 0;
    for (const auto& step : paths[j]) {
      if (step.t_prime == next) {
        tpl.metaframes[step.t].frames.push_back(examples[j][step.t_prime]);
        tpl.metaframes[step.t].sources.push_back({j, step.t_prime});
        ++next;
      }
    }
  }
  std::tie(tpl.t_min, tpl.t_max) = length_bounds(examples);
  return tpl;
}

/// Length-1 template holding (a subsample of) all background frames.
inline ClassTemplate build_null_template(const std::vector<FrameVector>& background, Index max_frames = 512,
                                         std::uint64_t seed = 0) {
  if (background.empty()) throw InvariantError("build_null_template: no background frames");
  ClassTemplate tpl;
  tpl.label = kNullLabel;
  tpl.is_null = true;
  tpl.metaframes.resize(1);
  for (Index i : subsample_indices(background.size(), max_frames, seed)) {
    tpl.metaframes[0].frames.push_back(background[i]);
    tpl.metaframes[0].sources.push_back({0, i});
  }
  tpl.t_min = 1;
  tpl.t_max = kUnboundedLength;
  return tpl;
}

inline SuperTemplate build_super_template(std::vector<ClassTemplate> templates) {
  return SuperTemplate(std::move(templates));
}

/// Per-class examples plus background frames, usually cut from annotated
/// continuous sequences.
struct TrainingSet {
  std::map<Label, std::vector<TimeSeries>> examples;
  std::vector<FrameVector> background;

  /// Splits `series` at the segment boundaries. Null segments feed the background.
  void add_annotated(const TimeSeries& series, const Segmentation& segments) {
    segments.validate(series.length());
    for (const auto& s : segments.segments()) {
      if (s.label == kNullLabel) {
        for (Index t = s.begin; t <= s.end; ++t) background.push_back(series[t]);
      } else {
        examples[s.label].push_back(series.slice(s.begin, s.end));
      }
    }
  }
};

struct TrainOptions {
  std::set<Label> pattern_labels;
  bool with_null = true;  // only if background frames exist
  Index null_max_frames = 512;
  std::uint64_t seed = 0;
  unsigned threads = 1;
};

/// Class templates in ascending label order, then the null template.
inline SuperTemplate train_model(const TrainingSet& data, const TrainOptions& options = {}) {
  if (data.examples.empty()) throw InvariantError("train_model: no labeled examples");
  std::vector<ClassTemplate> templates;
  for (const auto& [label, examples] : data.examples) {
    TemplateOptions opts;
    opts.is_pattern = options.pattern_labels.count(label) > 0;
    opts.threads = options.threads;
    templates.push_back(build_class_template(label, examples, opts));
  }
  if (options.with_null && !data.background.empty()) {
    templates.push_back(build_null_template(data.background, options.null_max_frames, options.seed));
  }
  return build_super_template(std::move(templates));
}

}  // namespace framewarp
