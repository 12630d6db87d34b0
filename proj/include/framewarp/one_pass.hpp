#pragma once

// One-pass continuous recognition over the (test frame) x (super-template)
// grid. Inside a template the usual warping moves apply; from the last
// metaframe of any template k at t-1 the path may jump to the first metaframe
// of any template l at t. A template instance may only be left (or end the
// sequence) when the number of test frames it consumed lies within the
// template's [t_min, t_max]; vertical moves do not consume frames.
//
// Two ways of tracking the consumed length are provided:
//
//  * LengthGate::exact keeps one DP state per (cell, consumed length), so the
//    gate is applied to every path and the result is the true constrained
//    optimum.
//  * LengthGate::per_cell keeps a single length per cell, inherited from the
//    cheapest predecessor. It is cheaper but can miss the constrained optimum
//    when a costlier prefix would have had an admissible length.
//
// Without length enforcement both reduce to the same recurrence.

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "framewarp/dtw.hpp"
#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

enum class LengthGate { exact, per_cell };

struct OnePassOptions {
  bool enforce_lengths = true;
  LengthGate gate = LengthGate::exact;
  bool keep_grid = false;  // fill OnePassResult::grid
};

struct OnePassResult {
  Segmentation segmentation;  // one segment per template instance (split at every jump)
  AlignmentPath path;
  LabelTrack frame_labels;
  double score = kInf;        // mean frame-to-metaframe distance along the path
  double accumulated = kInf;  // penalty-weighted cost at the terminal cell
  bool relaxed = false;       // length constraints were unsatisfiable and got dropped
  Index distance_evaluations = 0;

  // Accumulated cost per (t, super-template column), minimised over tracked
  // lengths; only filled when OnePassOptions::keep_grid is set.
  std::vector<float> grid;
  Index grid_rows = 0;
  Index grid_cols = 0;
};

namespace detail {

enum class OpMove : std::uint8_t { start, diagonal, horizontal, vertical, stay, jump, none };

inline OpMove to_op(Move m) {
  switch (m) {
    case Move::diagonal: return OpMove::diagonal;
    case Move::horizontal: return OpMove::horizontal;
    case Move::vertical: return OpMove::vertical;
    default: return OpMove::start;
  }
}

/// DP state layout: per template l, per metaframe j, per tracked length bucket b.
struct StateLayout {
  std::vector<Index> offset;
  std::vector<Index> buckets;
  std::vector<bool> gated;
  Index size = 0;

  Index at(Index l, Index j, Index b) const { return offset[l] + j * buckets[l] + b; }
};

struct JumpSource {
  Index tmpl = 0;
  Index bucket = 0;
  bool valid = false;
};

struct DecodeState {
  Index t;
  Index l;
  Index j;
  Index b;
};

inline void check_inputs(const DistanceTable& table, const std::vector<TemplateShape>& shapes) {
  if (table.rows() == 0) throw InvariantError("op_dfw: empty series");
  if (shapes.empty()) throw InvariantError("op_dfw: model has no templates");
  if (table.template_count() != shapes.size()) throw InvariantError("op_dfw: table and model disagree");
  for (Index l = 0; l < shapes.size(); ++l) {
    if (shapes[l].length == 0 || shapes[l].length != table.template_length(l)) {
      throw InvariantError("op_dfw: template length mismatch");
    }
  }
}

/// Turns a backtracked state sequence into the public result.
inline void assemble(OnePassResult& out, const DistanceTable& table, const std::vector<TemplateShape>& shapes,
                     std::vector<DecodeState> states, std::vector<Index> entries) {
  std::reverse(states.begin(), states.end());
  const Index rows = table.rows();
  out.frame_labels.assign(rows, kNullLabel);
  double sum = 0.0;
  for (const auto& s : states) {
    out.path.push_back({s.t, s.j, shapes[s.l].label});
    out.frame_labels[s.t] = shapes[s.l].label;
    sum += table(s.t, s.l, s.j);
  }
  out.score = sum / static_cast<double>(states.size());

  std::sort(entries.begin(), entries.end());
  std::vector<Segment> segs;
  Index begin = 0;
  for (Index e : entries) {
    segs.push_back({begin, e - 1, out.frame_labels[e - 1]});
    begin = e;
  }
  segs.push_back({begin, rows - 1, out.frame_labels[rows - 1]});
  out.segmentation = Segmentation(std::move(segs));
  out.segmentation.validate(rows);
}

inline OnePassResult decode_exact(const DistanceTable& table, const std::vector<TemplateShape>& shapes,
                                  bool enforce, bool keep_grid) {
  const Index rows = table.rows();
  const Index count = shapes.size();

  StateLayout layout;
  for (const auto& s : shapes) {
    const bool gated = enforce && !s.is_null;
    layout.offset.push_back(layout.size);
    layout.gated.push_back(gated);
    layout.buckets.push_back(gated ? std::min(s.t_max, rows) : 1);
    layout.size += s.length * layout.buckets.back();
  }
  auto admissible = [&](Index l, Index b) { return !layout.gated[l] || shapes[l].admits(b + 1); };

  std::vector<OpMove> back(rows * layout.size, OpMove::none);
  std::vector<JumpSource> jumps(rows);
  std::vector<double> prev(layout.size, kInf);
  std::vector<double> cur(layout.size, kInf);

  OnePassResult out;
  if (keep_grid) {
    out.grid_rows = rows;
    out.grid_cols = table.cols();
    out.grid.assign(rows * table.cols(), std::numeric_limits<float>::infinity());
  }
  auto record_grid = [&](Index t, const std::vector<double>& layer) {
    if (!keep_grid) return;
    for (Index l = 0; l < count; ++l) {
      for (Index j = 0; j < shapes[l].length; ++j) {
        double m = kInf;
        for (Index b = 0; b < layout.buckets[l]; ++b) m = std::min(m, layer[layout.at(l, j, b)]);
        out.grid[t * table.cols() + table.offset(l) + j] = static_cast<float>(m);
      }
    }
  };

  for (Index l = 0; l < count; ++l) {
    prev[layout.at(l, 0, 0)] = table(0, l, 0);
    back[layout.at(l, 0, 0)] = OpMove::start;
  }
  record_grid(0, prev);

  for (Index t = 1; t < rows; ++t) {
    // Cheapest admissible template end at t-1; ties go to the lowest template, then shortest length.
    JumpSource& src = jumps[t];
    double best_end = kInf;
    for (Index k = 0; k < count; ++k) {
      const Index end = shapes[k].length - 1;
      for (Index b = 0; b < layout.buckets[k]; ++b) {
        const double v = prev[layout.at(k, end, b)];
        if (admissible(k, b) && v < best_end) {
          best_end = v;
          src = {k, b, true};
        }
      }
    }

    std::fill(cur.begin(), cur.end(), kInf);
    OpMove* moves = &back[t * layout.size];
    for (Index l = 0; l < count; ++l) {
      const Index buckets = layout.buckets[l];
      const bool gated = layout.gated[l];
      const double d0 = table(t, l, 0);

      // First metaframe: stay (horizontal) or enter through a jump.
      if (gated) {
        if (src.valid) {
          cur[layout.at(l, 0, 0)] = best_end + d0;
          moves[layout.at(l, 0, 0)] = OpMove::jump;
        }
        for (Index b = 1; b < buckets; ++b) {
          cur[layout.at(l, 0, b)] = prev[layout.at(l, 0, b - 1)] + d0;
          moves[layout.at(l, 0, b)] = OpMove::stay;
        }
      } else {
        const double stay = prev[layout.at(l, 0, 0)] + d0;
        const double jump = src.valid ? best_end + d0 : kInf;
        const bool take_jump = jump < stay;
        cur[layout.at(l, 0, 0)] = take_jump ? jump : stay;
        moves[layout.at(l, 0, 0)] = take_jump ? OpMove::jump : OpMove::stay;
      }

      // Remaining metaframes, bottom-up so vertical moves see this column.
      for (Index j = 1; j < shapes[l].length; ++j) {
        const double d = table(t, l, j);
        for (Index b = 0; b < buckets; ++b) {
          double diag = kInf;
          double horiz = kInf;
          if (!gated) {
            diag = prev[layout.at(l, j - 1, 0)];
            horiz = prev[layout.at(l, j, 0)];
          } else if (b > 0) {
            diag = prev[layout.at(l, j - 1, b - 1)];
            horiz = prev[layout.at(l, j, b - 1)];
          }
          const double vert = cur[layout.at(l, j - 1, b)];
          const auto r = relax_cell(diag, horiz, vert, d);
          cur[layout.at(l, j, b)] = r.cost;
          moves[layout.at(l, j, b)] = to_op(r.move);
        }
      }
    }
    record_grid(t, cur);
    std::swap(prev, cur);
  }

  // Terminal: cheapest admissible template end at the last frame; ties to the lowest label.
  double best = kInf;
  DecodeState at{rows - 1, 0, 0, 0};
  bool found = false;
  for (Index l = 0; l < count; ++l) {
    const Index end = shapes[l].length - 1;
    for (Index b = 0; b < layout.buckets[l]; ++b) {
      const double v = prev[layout.at(l, end, b)];
      if (!admissible(l, b) || v == kInf) continue;
      if (v < best || (v == best && shapes[l].label < shapes[at.l].label)) {
        best = v;
        at = {rows - 1, l, end, b};
        found = true;
      }
    }
  }
  if (!found) return out;  // accumulated stays +inf
  out.accumulated = best;

  std::vector<DecodeState> states;
  std::vector<Index> entries;
  while (true) {
    states.push_back(at);
    const OpMove m = back[at.t * layout.size + layout.at(at.l, at.j, at.b)];
    const bool gated = layout.gated[at.l];
    const Index shorter = gated ? at.b - 1 : 0;
    switch (m) {
      case OpMove::start:
        assemble(out, table, shapes, std::move(states), std::move(entries));
        return out;
      case OpMove::diagonal: at = {at.t - 1, at.l, at.j - 1, shorter}; break;
      case OpMove::horizontal: at = {at.t - 1, at.l, at.j, shorter}; break;
      case OpMove::vertical: at = {at.t, at.l, at.j - 1, at.b}; break;
      case OpMove::stay: at = {at.t - 1, at.l, 0, shorter}; break;
      case OpMove::jump: {
        entries.push_back(at.t);
        const JumpSource& src = jumps[at.t];
        at = {at.t - 1, src.tmpl, shapes[src.tmpl].length - 1, src.bucket};
        break;
      }
      case OpMove::none: throw InvariantError("op_dfw: broken back-pointer chain");
    }
  }
}

inline OnePassResult decode_per_cell(const DistanceTable& table, const std::vector<TemplateShape>& shapes,
                                     bool enforce, bool keep_grid) {
  const Index rows = table.rows();
  const Index count = shapes.size();
  const Index cols = table.cols();
  auto col = [&](Index l, Index j) { return table.offset(l) + j; };
  auto admissible = [&](Index l, Index len) { return !enforce || shapes[l].admits(len); };

  std::vector<OpMove> back(rows * cols, OpMove::none);
  std::vector<JumpSource> jumps(rows);
  std::vector<double> prev(cols, kInf), cur(cols, kInf);
  std::vector<Index> prev_len(cols, 0), cur_len(cols, 0);

  OnePassResult out;
  if (keep_grid) {
    out.grid_rows = rows;
    out.grid_cols = cols;
    out.grid.assign(rows * cols, std::numeric_limits<float>::infinity());
  }
  auto record_grid = [&](Index t, const std::vector<double>& layer) {
    if (!keep_grid) return;
    for (Index c = 0; c < cols; ++c) out.grid[t * cols + c] = static_cast<float>(layer[c]);
  };

  for (Index l = 0; l < count; ++l) {
    prev[col(l, 0)] = table(0, l, 0);
    prev_len[col(l, 0)] = 1;
    back[col(l, 0)] = OpMove::start;
  }
  record_grid(0, prev);

  for (Index t = 1; t < rows; ++t) {
    JumpSource& src = jumps[t];
    double best_end = kInf;
    for (Index k = 0; k < count; ++k) {
      const Index c = col(k, shapes[k].length - 1);
      if (admissible(k, prev_len[c]) && prev[c] < best_end) {
        best_end = prev[c];
        src = {k, 0, true};
      }
    }
    std::fill(cur.begin(), cur.end(), kInf);
    OpMove* moves = &back[t * cols];
    for (Index l = 0; l < count; ++l) {
      const Index c0 = col(l, 0);
      const double d0 = table(t, l, 0);
      const double stay = prev[c0] + d0;
      const double jump = src.valid ? best_end + d0 : kInf;
      if (jump < stay) {
        cur[c0] = jump;
        cur_len[c0] = 1;
        moves[c0] = OpMove::jump;
      } else {
        cur[c0] = stay;
        cur_len[c0] = prev_len[c0] + 1;
        moves[c0] = OpMove::stay;
      }
      for (Index j = 1; j < shapes[l].length; ++j) {
        const Index c = col(l, j);
        const auto r = relax_cell(prev[c - 1], prev[c], cur[c - 1], table(t, l, j));
        cur[c] = r.cost;
        moves[c] = to_op(r.move);
        cur_len[c] = r.move == Move::diagonal ? prev_len[c - 1] + 1
                     : r.move == Move::horizontal ? prev_len[c] + 1
                                                  : cur_len[c - 1];
      }
    }
    record_grid(t, cur);
    std::swap(prev, cur);
    std::swap(prev_len, cur_len);
  }

  double best = kInf;
  DecodeState at{rows - 1, 0, 0, 0};
  bool found = false;
  for (Index l = 0; l < count; ++l) {
    const Index end = shapes[l].length - 1;
    const Index c = col(l, end);
    if (!admissible(l, prev_len[c]) || prev[c] == kInf) continue;
    if (prev[c] < best || (prev[c] == best && shapes[l].label < shapes[at.l].label)) {
      best = prev[c];
      at = {rows - 1, l, end, 0};
      found = true;
    }
  }
  if (!found) return out;
  out.accumulated = best;

  std::vector<DecodeState> states;
  std::vector<Index> entries;
  while (true) {
    states.push_back(at);
    switch (back[at.t * cols + col(at.l, at.j)]) {
      case OpMove::start:
        assemble(out, table, shapes, std::move(states), std::move(entries));
        return out;
      case OpMove::diagonal: at = {at.t - 1, at.l, at.j - 1, 0}; break;
      case OpMove::horizontal: at = {at.t - 1, at.l, at.j, 0}; break;
      case OpMove::vertical: at = {at.t, at.l, at.j - 1, 0}; break;
      case OpMove::stay: at = {at.t - 1, at.l, 0, 0}; break;
      case OpMove::jump:
        entries.push_back(at.t);
        at = {at.t - 1, jumps[at.t].tmpl, shapes[jumps[at.t].tmpl].length - 1, 0};
        break;
      case OpMove::none: throw InvariantError("op_dfw: broken back-pointer chain");
    }
  }
}

}  // namespace detail

/// Decodes a precomputed distance table. If length enforcement leaves no
/// feasible terminal cell the decode is repeated without it and the result is
/// flagged `relaxed`; if even that fails an InvariantError is thrown.
inline OnePassResult op_dfw_decode(const DistanceTable& table, const std::vector<TemplateShape>& shapes,
                                   const OnePassOptions& options = {}) {
  detail::check_inputs(table, shapes);
  auto run = [&](bool enforce) {
    return options.gate == LengthGate::exact ? detail::decode_exact(table, shapes, enforce, options.keep_grid)
                                             : detail::decode_per_cell(table, shapes, enforce, options.keep_grid);
  };
  auto out = run(options.enforce_lengths);
  if (out.accumulated == kInf && options.enforce_lengths) {
    out = run(false);
    out.relaxed = true;
  }
  if (out.accumulated == kInf) {
    throw InvariantError("op_dfw: no template can end at the last frame (series too short for every template)");
  }
  out.distance_evaluations = table.evaluations();
  return out;
}

inline OnePassResult op_dfw_segment(const TimeSeries& z, const SuperTemplate& model, const DistanceParams& params,
                                    const OnePassOptions& options = {}, unsigned threads = 1) {
  if (z.empty()) throw InvariantError("op_dfw_segment: empty series");
  if (model.empty()) throw InvariantError("op_dfw_segment: empty model");
  return op_dfw_decode(DistanceTable::compute(z, model, params, threads), shapes_of(model), options);
}

/// Pattern label -> reported label. The null label always maps to itself.
using LabelAlias = std::map<Label, Label>;

/// Relabels segments through `alias` and merges neighbours that end up equal.
inline Segmentation alias_segmentation(const Segmentation& seg, const LabelAlias& alias) {
  std::vector<Segment> out;
  for (const auto& s : seg.segments()) {
    Label mapped = s.label;
    if (s.label != kNullLabel) {
      const auto it = alias.find(s.label);
      if (it == alias.end()) throw InvariantError("no alias entry for label " + std::to_string(s.label));
      mapped = it->second;
    }
    if (!out.empty() && out.back().label == mapped) {
      out.back().end = s.end;
    } else {
      out.push_back({s.begin, s.end, mapped});
    }
  }
  return Segmentation(std::move(out));
}

inline LabelTrack op_dfw_stream_labels(const Segmentation& seg, const LabelAlias& alias) {
  return alias_segmentation(seg, alias).frame_labels();
}

}  // namespace framewarp
