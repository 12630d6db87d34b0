#pragma once

// Frame-to-metaframe distance. A test frame is sparsely coded over the
// metaframe's training frames with orthogonal matching pursuit, then the
// distance to the normalized reconstruction is evaluated in closed form on the
// selected support:
//
//   d~(z, Y) = min_{sum w = 1} || z - Xw / ||Xw|| ||^2 = 2 - 2 ||P_S z||
//
// where P_S projects onto the span of the selected columns. The sum-to-one
// constraint only fixes the scale of w, so the optimum is the unit vector of
// the span closest to z.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "framewarp/model.hpp"
#include "framewarp/parallel.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

struct DistanceParams {
  double gamma = 0.05;          // OMP stops once the residual norm drops to this
  Index max_support = 8;        // further capped by the number of usable columns
  Index w_meta = 1;             // odd pooling window over neighbouring metaframes
  Index null_max_frames = 512;  // larger metaframes are subsampled before coding

  void validate() const {
    if (!(gamma >= 0.0)) throw InvariantError("gamma must be >= 0");
    if (max_support < 1) throw InvariantError("max_support must be >= 1");
    if (w_meta < 1 || w_meta % 2 == 0) throw InvariantError("w_meta must be odd and >= 1");
    if (null_max_frames < 1) throw InvariantError("null_max_frames must be >= 1");
  }
};

inline constexpr double kGramRidge = 1e-10;
inline constexpr double kZeroColumnNorm = 1e-12;
inline constexpr double kExactResidual = 1e-12;  // relative to ||z||; below this the fit counts as exact

struct SparseCode {
  Eigen::VectorXd coefficients;        // length N, zero outside the support
  std::vector<Index> support;          // in selection order
  double residual = 0.0;               // ||z - X w||
  std::vector<double> residual_history;  // residual before the first and after each iteration
};

/// Orthogonal matching pursuit of z over the columns of `columns` (K x N).
/// All-zero columns are never selected.
inline SparseCode sparse_code(const Eigen::VectorXd& z, const Eigen::MatrixXd& columns, double gamma,
                              Index max_support) {
  if (columns.rows() != z.size()) {
    throw DimensionError("sparse_code: frame dimension " + std::to_string(z.size()) + " vs column dimension " +
                         std::to_string(columns.rows()));
  }
  const auto n = static_cast<Index>(columns.cols());
  const auto k = static_cast<Index>(columns.rows());

  std::vector<double> norms(n);
  std::vector<Index> usable;
  for (Index j = 0; j < n; ++j) {
    norms[j] = columns.col(static_cast<Eigen::Index>(j)).norm();
    if (norms[j] > kZeroColumnNorm) usable.push_back(j);
  }

  SparseCode code;
  code.coefficients = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
  Eigen::VectorXd residual = z;
  code.residual = residual.norm();
  code.residual_history.push_back(code.residual);

  const Index limit = std::min({max_support, static_cast<Index>(usable.size()), k});
  const double stop = std::max(gamma, kExactResidual * code.residual);
  std::vector<bool> taken(n, false);
  Eigen::VectorXd solution;
  while (code.support.size() < limit && code.residual > stop) {
    Index best = usable.front();
    double best_corr = -1.0;
    for (Index j : usable) {
      if (taken[j]) continue;
      const double corr = std::abs(columns.col(static_cast<Eigen::Index>(j)).dot(residual)) / norms[j];
      if (corr > best_corr) {
        best_corr = corr;
        best = j;
      }
    }
    taken[best] = true;
    code.support.push_back(best);

    Eigen::MatrixXd selected(columns.rows(), static_cast<Eigen::Index>(code.support.size()));
    for (Index i = 0; i < code.support.size(); ++i) {
      selected.col(static_cast<Eigen::Index>(i)) = columns.col(static_cast<Eigen::Index>(code.support[i]));
    }
    solution = selected.colPivHouseholderQr().solve(z);
    residual = z - selected * solution;
    code.residual = residual.norm();
    code.residual_history.push_back(code.residual);
  }
  for (Index i = 0; i < code.support.size(); ++i) {
    code.coefficients(static_cast<Eigen::Index>(code.support[i])) = solution(static_cast<Eigen::Index>(i));
  }
  return code;
}

/// 2 - 2 ||P z|| for the span of `selected` (K x |S|), clamped to [0, 2].
/// The projection comes from the |S| x |S| normal equations; a near-singular
/// Gram matrix gets a small ridge on its diagonal.
inline double frame_to_metaframe(const Eigen::VectorXd& z, const Eigen::MatrixXd& selected) {
  if (selected.rows() != z.size()) throw DimensionError("frame_to_metaframe: dimension mismatch");
  if (selected.cols() == 0) return kEmptyFrameDistance;
  const Eigen::MatrixXd gram = selected.transpose() * selected;
  const Eigen::VectorXd rhs = selected.transpose() * z;

  Eigen::LDLT<Eigen::MatrixXd> ldlt(gram);
  const auto pivots = ldlt.vectorD().cwiseAbs();
  const bool degenerate = ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
                          pivots.minCoeff() <= 1e-12 * std::max(1.0, pivots.maxCoeff());
  if (degenerate) {
    ldlt.compute(gram + kGramRidge * Eigen::MatrixXd::Identity(gram.rows(), gram.cols()));
  }
  const Eigen::VectorXd w = ldlt.solve(rhs);
  const double projected_sq = rhs.dot(w);
  if (!(projected_sq > 0.0)) return kEmptyFrameDistance;
  const double d = 2.0 - 2.0 * std::sqrt(std::min(projected_sq, 1.0));
  return std::clamp(d, 0.0, kEmptyFrameDistance);
}

/// Same, restricted to the columns listed in `support`.
inline double frame_to_metaframe(const Eigen::VectorXd& z, const Eigen::MatrixXd& columns,
                                 const std::vector<Index>& support) {
  Eigen::MatrixXd selected(columns.rows(), static_cast<Eigen::Index>(support.size()));
  for (Index i = 0; i < support.size(); ++i) {
    selected.col(static_cast<Eigen::Index>(i)) = columns.col(static_cast<Eigen::Index>(support[i]));
  }
  return frame_to_metaframe(z, selected);
}

/// Code-then-project distance of z to a set of training frames.
inline double metaframe_distance(const FrameVector& z, const Eigen::MatrixXd& columns, const DistanceParams& params) {
  if (z.empty() || columns.cols() == 0) return kEmptyFrameDistance;
  const Index cap = std::min(params.max_support, static_cast<Index>(columns.cols()));
  const auto code = sparse_code(z.values(), columns, params.gamma, cap);
  if (code.support.empty()) return kEmptyFrameDistance;
  return frame_to_metaframe(z.values(), columns, code.support);
}

/// Uniform random subset of at most `max_frames` frames, original order kept.
inline std::vector<Index> subsample_indices(Index count, Index max_frames, std::uint64_t seed) {
  std::vector<Index> idx(count);
  std::iota(idx.begin(), idx.end(), Index{0});
  if (count <= max_frames) return idx;
  Rng rng(seed);
  rng.shuffle(idx);
  idx.resize(max_frames);
  std::sort(idx.begin(), idx.end());
  return idx;
}

/// Non-empty frames of metaframes [t' - h, t' + h] of the same template, as columns.
inline Eigen::MatrixXd pooled_columns(const ClassTemplate& tpl, Index t_prime, Index w_meta, Index max_frames) {
  if (w_meta < 1 || w_meta % 2 == 0) throw InvariantError("w_meta must be odd and >= 1");
  if (t_prime >= tpl.length()) throw InvariantError("metaframe index out of range");
  const Index half = (w_meta - 1) / 2;
  const Index lo = t_prime >= half ? t_prime - half : 0;
  const Index hi = std::min(tpl.length() - 1, t_prime + half);
  std::vector<const FrameVector*> frames;
  for (Index m = lo; m <= hi; ++m) {
    for (const auto& f : tpl.metaframes[m].frames) {
      if (!f.empty()) frames.push_back(&f);
    }
  }
  const auto keep = subsample_indices(frames.size(), max_frames, 0x5eed0000ULL + t_prime);
  Eigen::MatrixXd cols(static_cast<Eigen::Index>(tpl.dim()), static_cast<Eigen::Index>(keep.size()));
  for (Index i = 0; i < keep.size(); ++i) cols.col(static_cast<Eigen::Index>(i)) = frames[keep[i]]->values();
  return cols;
}

inline double pooled_distance(const FrameVector& z, const ClassTemplate& tpl, Index t_prime, Index w_meta,
                              const DistanceParams& params) {
  if (z.dim() != tpl.dim()) throw DimensionError("pooled_distance: frame and template dimensions differ");
  return metaframe_distance(z, pooled_columns(tpl, t_prime, w_meta, params.null_max_frames), params);
}

/// Distances d~(z_t, template l, metaframe j) for every cell of the
/// (test frame) x (super-template column) grid, computed once and shared by
/// all decoders.
class DistanceTable {
 public:
  DistanceTable() = default;

  /// Zero-filled table with the given template lengths; cells are set with at().
  DistanceTable(Index rows, std::vector<Index> template_lengths)
      : rows_(rows), lengths_(std::move(template_lengths)) {
    for (Index len : lengths_) {
      offsets_.push_back(cols_);
      cols_ += len;
    }
    values_.assign(rows_ * cols_, 0.0);
  }

  static DistanceTable compute(const TimeSeries& z, const SuperTemplate& model, const DistanceParams& params,
                               unsigned threads = 1) {
    params.validate();
    if (z.empty()) throw InvariantError("cannot compute distances for an empty series");
    if (model.empty()) throw InvariantError("model has no templates");
    if (z.dim() != model.dim()) {
      throw DimensionError("series dimension " + std::to_string(z.dim()) + " does not match model dimension " +
                           std::to_string(model.dim()));
    }
    std::vector<Index> lengths;
    for (const auto& t : model.templates()) lengths.push_back(t.length());
    DistanceTable table(z.length(), std::move(lengths));

    std::vector<Eigen::MatrixXd> columns;
    columns.reserve(table.cols_);
    for (const auto& tpl : model.templates()) {
      for (Index j = 0; j < tpl.length(); ++j) {
        columns.push_back(pooled_columns(tpl, j, params.w_meta, params.null_max_frames));
      }
    }
    std::atomic<Index> evaluations{0};
    parallel_for(table.rows_, threads, [&](Index t) {
      for (Index c = 0; c < table.cols_; ++c) {
        table.values_[t * table.cols_ + c] = metaframe_distance(z[t], columns[c], params);
        evaluations.fetch_add(1, std::memory_order_relaxed);
      }
    });
    table.evaluations_ = evaluations.load();
    return table;
  }

  Index rows() const noexcept { return rows_; }
  Index cols() const noexcept { return cols_; }
  Index template_count() const noexcept { return lengths_.size(); }
  Index template_length(Index l) const { return lengths_[l]; }
  Index offset(Index l) const { return offsets_[l]; }

  double operator()(Index t, Index l, Index j) const { return values_[t * cols_ + offsets_[l] + j]; }
  double& at(Index t, Index l, Index j) { return values_[t * cols_ + offsets_[l] + j]; }

  /// Number of frame-to-metaframe evaluations performed by compute().
  Index evaluations() const noexcept { return evaluations_; }

 private:
  Index rows_ = 0;
  Index cols_ = 0;
  std::vector<Index> lengths_;
  std::vector<Index> offsets_;
  std::vector<double> values_;
  Index evaluations_ = 0;
};

}  // namespace framewarp
