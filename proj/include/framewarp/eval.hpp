#pragma once

// Frame-level evaluation: accuracy, confusion matrix over all labels seen in
// either track (null included), per-class accuracy and boundary offsets.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "framewarp/types.hpp"

namespace framewarp {

struct EvalReport {
  double frame_accuracy = 0.0;                // percent
  std::vector<Label> labels;                  // row/column order of `confusion`, ascending, always holds 0
  std::vector<std::vector<Index>> confusion;  // [truth][prediction]
  std::vector<double> per_class_accuracy;     // percent per truth label; NaN when the label never occurs in truth
  double boundary_mae = std::numeric_limits<double>::quiet_NaN();
  Index frames = 0;

  Index index_of(Label l) const {
    const auto it = std::lower_bound(labels.begin(), labels.end(), l);
    if (it == labels.end() || *it != l) throw InvariantError("label " + std::to_string(l) + " not in report");
    return static_cast<Index>(it - labels.begin());
  }
};

inline EvalReport frame_accuracy(const LabelTrack& pred, const LabelTrack& truth) {
  if (pred.size() != truth.size()) {
    throw InvariantError("prediction has " + std::to_string(pred.size()) + " frames, ground truth " +
                         std::to_string(truth.size()));
  }
  std::set<Label> all(truth.begin(), truth.end());
  all.insert(pred.begin(), pred.end());
  all.insert(kNullLabel);

  EvalReport r;
  r.labels.assign(all.begin(), all.end());
  r.frames = truth.size();
  const Index n = r.labels.size();
  r.confusion.assign(n, std::vector<Index>(n, 0));
  Index hits = 0;
  for (Index t = 0; t < truth.size(); ++t) {
    ++r.confusion[r.index_of(truth[t])][r.index_of(pred[t])];
    if (truth[t] == pred[t]) ++hits;
  }
  r.frame_accuracy = truth.empty() ? 100.0 : 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
  for (Index i = 0; i < n; ++i) {
    Index row = 0;
    for (Index c : r.confusion[i]) row += c;
    r.per_class_accuracy.push_back(row == 0 ? std::numeric_limits<double>::quiet_NaN()
                                            : 100.0 * static_cast<double>(r.confusion[i][i]) / static_cast<double>(row));
  }
  return r;
}

/// Mean distance from each boundary to the nearest boundary of the other set,
/// averaged over both directions. A boundary with nothing to match costs
/// length / 2. Two empty sets give 0.
inline double boundary_mae(const std::vector<Index>& predicted, const std::vector<Index>& truth, Index length) {
  const double miss = static_cast<double>(length) / 2.0;
  auto one_way = [miss](const std::vector<Index>& from, const std::vector<Index>& to, double& sum) {
    for (Index b : from) {
      double best = miss;
      for (Index c : to) best = std::min(best, std::abs(static_cast<double>(b) - static_cast<double>(c)));
      sum += best;
    }
  };
  const Index count = predicted.size() + truth.size();
  if (count == 0) return 0.0;
  double sum = 0.0;
  one_way(predicted, truth, sum);
  one_way(truth, predicted, sum);
  return sum / static_cast<double>(count);
}

inline double boundary_mae(const Segmentation& predicted, const Segmentation& truth) {
  if (predicted.length() != truth.length()) throw InvariantError("segmentations cover different lengths");
  return boundary_mae(predicted.boundaries(), truth.boundaries(), truth.length());
}

/// Least-squares line y = slope * x + intercept and its coefficient of determination.
struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InvariantError("fit_line needs at least two paired points");
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw InvariantError("fit_line: x values are all equal");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.r_squared = syy == 0.0 ? 1.0 : (sxy * sxy) / (sxx * syy);
  return f;
}

}  // namespace framewarp
