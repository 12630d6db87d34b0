#pragma once

// Two-pass continuous recognition. The first pass classifies every
// subsequence [t_b, t_e] of at least t_min_gap + 1 frames in isolation; the
// second tiles the series with the cheapest sequence of classified pieces.

#include <algorithm>
#include <atomic>
#include <string>
#include <vector>

#include "framewarp/dtw.hpp"
#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"
#include "framewarp/parallel.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

inline constexpr Index kDefaultMinGap = 2;

/// Best label and score for each subsequence; cells with t_e - t_b < t_min_gap
/// (or t_e < t_b) hold +inf and the null label.
class SubsequenceTables {
 public:
  SubsequenceTables() = default;
  SubsequenceTables(Index length, Index t_min_gap)
      : length_(length), gap_(t_min_gap), label_(length * length, kNullLabel), cost_(length * length, kInf) {}

  Index length() const noexcept { return length_; }
  Index t_min_gap() const noexcept { return gap_; }
  bool defined(Index tb, Index te) const noexcept { return te < length_ && te >= tb && te - tb >= gap_; }

  Label best_label(Index tb, Index te) const { return label_[tb * length_ + te]; }
  double best_cost(Index tb, Index te) const { return cost_[tb * length_ + te]; }
  void set(Index tb, Index te, Label label, double cost) {
    label_[tb * length_ + te] = label;
    cost_[tb * length_ + te] = cost;
  }

  /// Number of subsequences scored by the action-level pass.
  Index evaluated_subsequences() const noexcept { return evaluated_; }
  void set_evaluated(Index n) noexcept { evaluated_ = n; }

 private:
  Index length_ = 0;
  Index gap_ = kDefaultMinGap;
  std::vector<Label> label_;
  std::vector<double> cost_;
  Index evaluated_ = 0;
};

/// (T - g)(T - g + 1) / 2 subsequences have at least g + 1 frames.
constexpr Index subsequence_count(Index length, Index t_min_gap) noexcept {
  if (length <= t_min_gap) return 0;
  const Index n = length - t_min_gap;
  return n * (n + 1) / 2;
}

/// Scores all subsequences against every template on a shared distance table.
/// For each start t_b and template the warping DP is restarted once; the cell
/// at (t_e, last metaframe) then holds the warp of [t_b, t_e], whose mean
/// path distance is carried alongside the weighted cost.
inline SubsequenceTables action_level_pass(const DistanceTable& table, const std::vector<TemplateShape>& shapes,
                                           Index t_min_gap = kDefaultMinGap, unsigned threads = 1) {
  const Index rows = table.rows();
  if (t_min_gap < 1) throw InvariantError("t_min must be >= 1");
  if (rows <= t_min_gap) {
    throw InvariantError("series of " + std::to_string(rows) + " frames is too short for t_min " +
                         std::to_string(t_min_gap));
  }
  if (shapes.empty() || table.template_count() != shapes.size()) {
    throw InvariantError("action_level_pass: table and model disagree");
  }

  SubsequenceTables out(rows, t_min_gap);
  std::atomic<Index> scored{0};
  const Index starts = rows - t_min_gap;
  parallel_for(starts, threads, [&](Index tb) {
    const Index span = rows - tb;
    std::vector<double> best(span, kInf);
    std::vector<Label> best_label(span, kNullLabel);
    for (Index l = 0; l < shapes.size(); ++l) {
      const Index n = shapes[l].length;
      // Rolling rows of weighted cost, unweighted sum and path length.
      std::vector<double> dp(n), ds(n), cd(n), cs(n);
      std::vector<Index> dn(n), cn(n);
      for (Index i = 0; i < span; ++i) {
        const Index t = tb + i;
        for (Index j = 0; j < n; ++j) {
          const double d = table(t, l, j);
          if (i == 0 && j == 0) {
            cd[j] = d;
            cs[j] = d;
            cn[j] = 1;
            continue;
          }
          const double diag = (i > 0 && j > 0) ? dp[j - 1] : kInf;
          const double horiz = i > 0 ? dp[j] : kInf;
          const double vert = j > 0 ? cd[j - 1] : kInf;
          const auto r = relax_cell(diag, horiz, vert, d);
          cd[j] = r.cost;
          switch (r.move) {
            case Move::diagonal: cs[j] = ds[j - 1] + d; cn[j] = dn[j - 1] + 1; break;
            case Move::horizontal: cs[j] = ds[j] + d; cn[j] = dn[j] + 1; break;
            default: cs[j] = cs[j - 1] + d; cn[j] = cn[j - 1] + 1; break;
          }
        }
        if (i >= t_min_gap) {
          const double score = cs[n - 1] / static_cast<double>(cn[n - 1]);
          if (score < best[i] || (score == best[i] && shapes[l].label < best_label[i])) {
            best[i] = score;
            best_label[i] = shapes[l].label;
          }
        }
        std::swap(dp, cd);
        std::swap(ds, cs);
        std::swap(dn, cn);
      }
    }
    for (Index i = t_min_gap; i < span; ++i) out.set(tb, tb + i, best_label[i], best[i]);
    scored.fetch_add(span - t_min_gap, std::memory_order_relaxed);
  });
  out.set_evaluated(scored.load());
  return out;
}

inline SubsequenceTables action_level_pass(const TimeSeries& z, const SuperTemplate& model,
                                           const DistanceParams& params, Index t_min_gap = kDefaultMinGap,
                                           unsigned threads = 1) {
  if (z.length() <= t_min_gap) {
    throw InvariantError("series of " + std::to_string(z.length()) + " frames is too short for t_min " +
                         std::to_string(t_min_gap));
  }
  return action_level_pass(DistanceTable::compute(z, model, params, threads), shapes_of(model), t_min_gap, threads);
}

struct TwoPassResult {
  Segmentation segmentation;
  double score = kInf;  // summed best costs of the chosen pieces
  Index evaluated_subsequences = 0;
};

/// Cheapest tiling of [0, T) into pieces of at least t_min_gap + 1 frames.
inline TwoPassResult sequence_level_pass(const SubsequenceTables& tables) {
  const Index rows = tables.length();
  const Index gap = tables.t_min_gap();
  if (rows < gap + 1) {
    throw InvariantError("no feasible tiling: " + std::to_string(rows) + " frames, minimum segment " +
                         std::to_string(gap + 1));
  }
  // acc(tb, te): cheapest tiling of [0, te] whose last piece is [tb, te].
  std::vector<double> acc(rows * rows, kInf);
  std::vector<Index> from(rows * rows, 0);
  auto at = [rows](Index tb, Index te) { return tb * rows + te; };

  for (Index te = gap; te < rows; ++te) acc[at(0, te)] = tables.best_cost(0, te);
  for (Index tb = gap + 1; tb < rows; ++tb) {
    // Best tiling of [0, tb - 1]; ties to the earliest last-piece start.
    double prefix = kInf;
    Index arg = 0;
    for (Index k = 0; k + gap + 1 <= tb; ++k) {
      if (acc[at(k, tb - 1)] < prefix) {
        prefix = acc[at(k, tb - 1)];
        arg = k;
      }
    }
    if (prefix == kInf) continue;
    for (Index te = tb + gap; te < rows; ++te) {
      acc[at(tb, te)] = prefix + tables.best_cost(tb, te);
      from[at(tb, te)] = arg;
    }
  }

  double best = kInf;
  Index tb = 0;
  for (Index k = 0; k + gap < rows; ++k) {
    if (acc[at(k, rows - 1)] < best) {
      best = acc[at(k, rows - 1)];
      tb = k;
    }
  }
  if (best == kInf) throw InvariantError("no feasible tiling");

  std::vector<Segment> segs;
  Index te = rows - 1;
  while (true) {
    segs.push_back({tb, te, tables.best_label(tb, te)});
    if (tb == 0) break;
    const Index prev = from[at(tb, te)];
    te = tb - 1;
    tb = prev;
  }
  std::reverse(segs.begin(), segs.end());

  TwoPassResult out;
  out.segmentation = Segmentation(std::move(segs));
  out.segmentation.validate(rows);
  out.score = best;
  out.evaluated_subsequences = tables.evaluated_subsequences();
  return out;
}

inline TwoPassResult tp_dfw_segment(const TimeSeries& z, const SuperTemplate& model, const DistanceParams& params,
                                    Index t_min_gap = kDefaultMinGap, unsigned threads = 1) {
  return sequence_level_pass(action_level_pass(z, model, params, t_min_gap, threads));
}

}  // namespace framewarp
