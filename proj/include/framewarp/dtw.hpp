#pragma once

// Baseline dynamic time warping with the transition set {(0,1),(1,0),(1,1)}
// and penalty r(tau, tau') = tau + tau'.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "framewarp/types.hpp"

namespace framewarp {

/// Squared Euclidean distance; 2.0 if either operand is zero-flagged.
inline double frame_distance(const FrameVector& a, const FrameVector& b) {
  if (a.dim() != b.dim()) {
    throw DimensionError("frame_distance: dimension " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  if (a.empty() || b.empty()) return kEmptyFrameDistance;
  return (a.values() - b.values()).squaredNorm();
}

/// tau + tau' for the three allowed moves, +inf otherwise.
constexpr double transition_penalty(int tau, int tau_prime) {
  const bool allowed = (tau == 0 && tau_prime == 1) || (tau == 1 && tau_prime == 0) || (tau == 1 && tau_prime == 1);
  return allowed ? static_cast<double>(tau + tau_prime) : kInf;
}

/// How a grid cell was reached. Horizontal advances the test axis only,
/// vertical advances the template axis only.
enum class Move : std::uint8_t { start, diagonal, horizontal, vertical };

struct Relaxation {
  double cost;
  Move move;
};

/// Within-template recurrence for one cell; ties prefer diagonal, then
/// horizontal, then vertical.
inline Relaxation relax_cell(double from_diagonal, double from_horizontal, double from_vertical, double d) {
  Relaxation best{from_diagonal + transition_penalty(1, 1) * d, Move::diagonal};
  const double h = from_horizontal + transition_penalty(1, 0) * d;
  if (h < best.cost) best = {h, Move::horizontal};
  const double v = from_vertical + transition_penalty(0, 1) * d;
  if (v < best.cost) best = {v, Move::vertical};
  return best;
}

/// Accumulated cost D and back-pointers over a rows x cols grid (row = test frame).
struct CostGrid {
  Index rows = 0;
  Index cols = 0;
  std::vector<double> local;        // d(t, t')
  std::vector<double> accumulated;  // D(t, t')
  std::vector<Move> back;

  Index at(Index t, Index tp) const noexcept { return t * cols + tp; }
  double cost(Index t, Index tp) const { return accumulated[at(t, tp)]; }
};

struct WarpResult {
  AlignmentPath path;
  double score = kInf;        // mean local distance along the path
  double accumulated = kInf;  // penalty-weighted objective at the terminal cell
};

/// Forward pass. `cost(t, t')` is evaluated exactly once per cell.
template <class Cost>
CostGrid warp_grid(Index rows, Index cols, Cost&& cost) {
  if (rows == 0 || cols == 0) throw InvariantError("cannot align an empty sequence");
  CostGrid g;
  g.rows = rows;
  g.cols = cols;
  g.local.resize(rows * cols);
  g.accumulated.assign(rows * cols, kInf);
  g.back.assign(rows * cols, Move::start);
  for (Index t = 0; t < rows; ++t) {
    for (Index tp = 0; tp < cols; ++tp) {
      const double d = cost(t, tp);
      g.local[g.at(t, tp)] = d;
      if (t == 0 && tp == 0) {
        g.accumulated[0] = d;
        continue;
      }
      const double diag = (t > 0 && tp > 0) ? g.accumulated[g.at(t - 1, tp - 1)] : kInf;
      const double horiz = t > 0 ? g.accumulated[g.at(t - 1, tp)] : kInf;
      const double vert = tp > 0 ? g.accumulated[g.at(t, tp - 1)] : kInf;
      const auto r = relax_cell(diag, horiz, vert, d);
      g.accumulated[g.at(t, tp)] = r.cost;
      g.back[g.at(t, tp)] = r.move;
    }
  }
  return g;
}

/// Backward pass from (rows-1, cols-1) to (0, 0).
inline WarpResult trace(const CostGrid& g, Label label = kNullLabel) {
  WarpResult out;
  Index t = g.rows - 1;
  Index tp = g.cols - 1;
  out.accumulated = g.cost(t, tp);
  double sum = 0.0;
  while (true) {
    out.path.push_back({t, tp, label});
    sum += g.local[g.at(t, tp)];
    const Move m = g.back[g.at(t, tp)];
    if (m == Move::start) break;
    if (m != Move::vertical) --t;
    if (m != Move::horizontal) --tp;
  }
  std::reverse(out.path.begin(), out.path.end());
  out.score = sum / static_cast<double>(out.path.size());
  return out;
}

/// Aligns Z (rows) against Y (columns) under `dist`.
template <class Dist>
WarpResult dtw_align(const TimeSeries& z, const TimeSeries& y, Dist&& dist) {
  if (z.empty() || y.empty()) throw InvariantError("dtw_align: both series must be non-empty");
  const auto g = warp_grid(z.length(), y.length(), [&](Index t, Index tp) { return dist(z[t], y[tp]); });
  return trace(g);
}

inline WarpResult dtw_align(const TimeSeries& z, const TimeSeries& y) {
  return dtw_align(z, y, [](const FrameVector& a, const FrameVector& b) { return frame_distance(a, b); });
}

}  // namespace framewarp
