#pragma once

// Independent reference implementations used by the unit and acceptance
// tests: exhaustive path and tiling enumerators, a grid search for the
// frame-to-metaframe distance, and small random generators.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "framewarp/metaframe_distance.hpp"
#include "framewarp/model.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/types.hpp"

namespace oracle {

using framewarp::Index;
constexpr double inf = std::numeric_limits<double>::infinity();

/// Every monotone path from (0,0) to (R-1,C-1) with steps (1,0), (0,1), (1,1);
/// cost = d(0,0) + sum over steps of (dt + dt') * d(next).
inline double dtw_enumerate(const std::vector<std::vector<double>>& d) {
  const Index rows = d.size();
  const Index cols = d.front().size();
  double best = inf;
  std::function<void(Index, Index, double)> walk = [&](Index t, Index tp, double acc) {
    if (t == rows - 1 && tp == cols - 1) {
      best = std::min(best, acc);
      return;
    }
    if (t + 1 < rows && tp + 1 < cols) walk(t + 1, tp + 1, acc + 2.0 * d[t + 1][tp + 1]);
    if (t + 1 < rows) walk(t + 1, tp, acc + d[t + 1][tp]);
    if (tp + 1 < cols) walk(t, tp + 1, acc + d[t][tp + 1]);
  };
  walk(0, 0, d[0][0]);
  return best;
}

/// Same enumeration, also returning the mean local distance of every optimal path.
inline std::vector<double> dtw_optimal_means(const std::vector<std::vector<double>>& d, double tol = 1e-12) {
  const Index rows = d.size();
  const Index cols = d.front().size();
  const double best = dtw_enumerate(d);
  std::vector<double> means;
  std::function<void(Index, Index, double, double, Index)> walk = [&](Index t, Index tp, double acc, double sum,
                                                                      Index n) {
    if (acc > best + tol) return;
    if (t == rows - 1 && tp == cols - 1) {
      means.push_back(sum / static_cast<double>(n));
      return;
    }
    if (t + 1 < rows && tp + 1 < cols) walk(t + 1, tp + 1, acc + 2.0 * d[t + 1][tp + 1], sum + d[t + 1][tp + 1], n + 1);
    if (t + 1 < rows) walk(t + 1, tp, acc + d[t + 1][tp], sum + d[t + 1][tp], n + 1);
    if (tp + 1 < cols) walk(t, tp + 1, acc + d[t][tp + 1], sum + d[t][tp + 1], n + 1);
  };
  walk(0, 0, d[0][0], d[0][0], 1);
  return means;
}

/// Local distances of a one-pass instance: d[t][l][j].
using OpTable = std::vector<std::vector<std::vector<double>>>;

/// Cheapest accumulated cost over every concatenation of template instances
/// and every monotone path inside each instance. The sequence starts at the
/// first metaframe of some template at t = 0 (no template-axis moves before
/// the first test frame is consumed) and must finish on a last metaframe at
/// t = T-1. An instance may be left or finish the sequence only if the test
/// frames it consumed are admitted by its shape (when `enforce`).
inline double op_enumerate(const OpTable& d, const std::vector<framewarp::TemplateShape>& shapes, bool enforce) {
  const Index rows = d.size();
  double best = inf;
  auto ok = [&](Index l, Index len) { return !enforce || shapes[l].admits(len); };
  std::function<void(Index, Index, Index, Index, double)> walk = [&](Index t, Index l, Index j, Index len, double acc) {
    if (acc >= best) return;  // distances are non-negative
    const Index last = shapes[l].length - 1;
    if (t == rows - 1 && j == last && ok(l, len)) best = std::min(best, acc);
    if (t + 1 < rows) {
      if (j < last) walk(t + 1, l, j + 1, len + 1, acc + 2.0 * d[t + 1][l][j + 1]);
      walk(t + 1, l, j, len + 1, acc + d[t + 1][l][j]);
      if (j == last && ok(l, len)) {
        for (Index k = 0; k < shapes.size(); ++k) walk(t + 1, k, 0, 1, acc + d[t + 1][k][0]);
      }
    }
    if (t > 0 && j < last) walk(t, l, j + 1, len, acc + d[t][l][j + 1]);
  };
  for (Index l = 0; l < shapes.size(); ++l) walk(0, l, 0, 1, d[0][l][0]);
  return best;
}

/// Cheapest tiling of [0, T) into pieces [b, e] with e - b >= gap, piece cost c[b][e].
inline double tiling_enumerate(const std::vector<std::vector<double>>& c, Index gap) {
  const Index rows = c.size();
  std::function<double(Index)> from = [&](Index b) -> double {
    if (b == rows) return 0.0;
    double best = inf;
    for (Index e = b + gap; e < rows; ++e) best = std::min(best, c[b][e] + from(e + 1));
    return best;
  };
  return from(0);
}

/// min over unit vectors u in span(X) of ||z - u||^2, span of up to three
/// columns. Orthonormal basis by QR, then a coarse angle grid refined twice
/// around the best point.
inline double metaframe_grid(const Eigen::VectorXd& z, const Eigen::MatrixXd& x) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  const auto rank = qr.rank();
  if (rank == 0) return inf;
  const Eigen::MatrixXd q = Eigen::MatrixXd(qr.householderQ()).leftCols(rank);
  auto value = [&](double a, double b) {
    Eigen::VectorXd c = Eigen::VectorXd::Zero(rank);
    if (rank == 1) {
      c(0) = std::cos(a) >= 0 ? 1.0 : -1.0;
    } else if (rank == 2) {
      c << std::cos(a), std::sin(a);
    } else {
      c << std::cos(a) * std::cos(b), std::sin(a) * std::cos(b), std::sin(b);
    }
    return (z - q * c).squaredNorm();
  };
  const double pi = std::acos(-1.0);
  double best = inf, ca = 0.0, cb = 0.0;
  double half_a = pi, half_b = rank == 3 ? pi / 2 : 0.0, step = pi / 180.0;
  for (int pass = 0; pass < 3; ++pass) {
    const double sa = ca, sb = cb;
    const long na = std::lround(half_a / step), nb = std::lround(half_b / step);
    for (long i = -na; i <= na; ++i) {
      for (long j = -nb; j <= nb; ++j) {
        const double a = sa + static_cast<double>(i) * step, b = sb + static_cast<double>(j) * step;
        const double v = value(a, b);
        if (v < best) {
          best = v;
          ca = a;
          cb = b;
        }
      }
    }
    half_a = step;
    half_b = rank == 3 ? step : 0.0;
    step /= 20.0;
  }
  return best;
}

// ---------------------------------------------------------------- generators

inline framewarp::FrameVector random_frame(framewarp::Rng& rng, Index dim, bool nonnegative = true) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
  for (Index k = 0; k < dim; ++k) {
    const double x = rng.normal();
    v(static_cast<Eigen::Index>(k)) = nonnegative ? std::abs(x) : x;
  }
  return framewarp::FrameVector(std::move(v));
}

inline framewarp::TimeSeries random_series(framewarp::Rng& rng, Index length, Index dim) {
  std::vector<framewarp::FrameVector> frames;
  for (Index t = 0; t < length; ++t) frames.push_back(random_frame(rng, dim));
  return framewarp::TimeSeries(std::move(frames));
}

/// One-hot frame on word k.
inline framewarp::FrameVector one_hot(Index dim, Index k) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return framewarp::FrameVector(std::move(v));
}

/// Random one-pass instance over at most `max_templates` templates of length
/// at most `max_length`; optional length bounds around each length.
struct OpInstance {
  OpTable table;
  std::vector<framewarp::TemplateShape> shapes;
};

inline OpInstance random_op_instance(framewarp::Rng& rng, Index max_rows, Index max_templates, Index max_length,
                                     bool bounds) {
  OpInstance inst;
  const Index rows = 1 + rng.below(max_rows);
  const Index count = 1 + rng.below(max_templates);
  for (Index l = 0; l < count; ++l) {
    framewarp::TemplateShape s;
    s.label = static_cast<framewarp::Label>(l + 1);
    s.length = 1 + rng.below(max_length);
    if (bounds) {
      s.t_min = 1 + rng.below(4);
      s.t_max = s.t_min + rng.below(4);
    }
    inst.shapes.push_back(s);
  }
  inst.table.assign(rows, std::vector<std::vector<double>>(count));
  for (Index t = 0; t < rows; ++t) {
    for (Index l = 0; l < count; ++l) {
      for (Index j = 0; j < inst.shapes[l].length; ++j) inst.table[t][l].push_back(rng.uniform(0.0, 2.0));
    }
  }
  return inst;
}

inline framewarp::DistanceTable to_distance_table(const OpInstance& inst) {
  std::vector<Index> lengths;
  for (const auto& s : inst.shapes) lengths.push_back(s.length);
  framewarp::DistanceTable table(inst.table.size(), lengths);
  for (Index t = 0; t < inst.table.size(); ++t) {
    for (Index l = 0; l < inst.shapes.size(); ++l) {
      for (Index j = 0; j < inst.shapes[l].length; ++j) table.at(t, l, j) = inst.table[t][l][j];
    }
  }
  return table;
}

}  // namespace oracle
