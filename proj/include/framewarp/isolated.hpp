#pragma once

// Isolated recognition: warp a single-action series against each class
// template with the frame-to-metaframe distance and keep the cheapest.

#include <string>
#include <utility>
#include <vector>

#include "framewarp/dtw.hpp"
#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"

namespace framewarp {

/// DFW of the rows [first, last] of a precomputed table against template l.
inline WarpResult dfw_align(const DistanceTable& table, Index l, Label label, Index first, Index last) {
  const auto g = warp_grid(last - first + 1, table.template_length(l),
                           [&](Index t, Index tp) { return table(first + t, l, tp); });
  auto result = trace(g, label);
  for (auto& step : result.path) step.t += first;
  return result;
}

inline WarpResult dfw_align(const TimeSeries& z, const ClassTemplate& tpl, const DistanceParams& params,
                            unsigned threads = 1) {
  if (z.empty()) throw InvariantError("dfw_align: empty series");
  if (tpl.is_null) throw InvariantError("dfw_align: the null template is not an action template");
  const SuperTemplate single({tpl});
  const auto table = DistanceTable::compute(z, single, params, threads);
  return dfw_align(table, 0, tpl.label, 0, z.length() - 1);
}

struct IsolatedResult {
  Label label = kNullLabel;
  std::vector<std::pair<Label, double>> scores;  // per non-null template, model order
};

/// Lowest DFW score among non-null templates; ties go to the lowest label.
inline IsolatedResult classify_isolated(const DistanceTable& table, const SuperTemplate& model) {
  IsolatedResult out;
  double best = kInf;
  for (Index l = 0; l < model.size(); ++l) {
    if (model[l].is_null) continue;
    const double s = dfw_align(table, l, model[l].label, 0, table.rows() - 1).score;
    out.scores.emplace_back(model[l].label, s);
    if (s < best || (s == best && model[l].label < out.label)) {
      best = s;
      out.label = model[l].label;
    }
  }
  if (out.scores.empty()) throw InvariantError("classify_isolated: model has no action templates");
  return out;
}

inline IsolatedResult classify_isolated(const TimeSeries& z, const SuperTemplate& model, const DistanceParams& params,
                                        unsigned threads = 1) {
  if (z.empty()) throw InvariantError("classify_isolated: empty series");
  return classify_isolated(DistanceTable::compute(z, model, params, threads), model);
}

}  // namespace framewarp
