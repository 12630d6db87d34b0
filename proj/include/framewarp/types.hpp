#pragma once

// Domain types shared by every module. Indices are 0-based in memory and
// 1-based in every file format.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "framewarp/errors.hpp"

namespace framewarp {

using Index = std::size_t;
using Label = int;

inline constexpr Label kNullLabel = 0;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Distance assigned whenever a zero-flagged frame takes part in a comparison
/// (the squared distance between two orthogonal unit vectors).
inline constexpr double kEmptyFrameDistance = 2.0;

/// Frames whose norm is off by more than this are renormalized.
inline constexpr double kUnitNormTolerance = 1e-6;

/// A per-frame descriptor: unit l2 norm, or all-zero and flagged empty.
class FrameVector {
 public:
  FrameVector() = default;

  /// Takes raw values; normalizes unless all-zero. Non-finite input is rejected.
  explicit FrameVector(Eigen::VectorXd raw) : values_(std::move(raw)) {
    if (values_.size() == 0) throw DimensionError("frame vector must have dimension > 0");
    if (!values_.allFinite()) throw InvariantError("frame vector contains non-finite values");
    const double norm = values_.norm();
    if (norm == 0.0) {
      empty_ = true;
    } else if (std::abs(norm - 1.0) > kUnitNormTolerance) {
      values_ /= norm;
    }
  }

  FrameVector(std::initializer_list<double> raw)
      : FrameVector(Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(raw.begin(), static_cast<Eigen::Index>(raw.size())))) {}

  static FrameVector zero(Index dim) { return FrameVector(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))); }

  const Eigen::VectorXd& values() const noexcept { return values_; }
  bool empty() const noexcept { return empty_; }
  Index dim() const noexcept { return static_cast<Index>(values_.size()); }
  double operator[](Index i) const { return values_(static_cast<Eigen::Index>(i)); }

  friend bool operator==(const FrameVector& a, const FrameVector& b) {
    return a.empty_ == b.empty_ && a.values_.size() == b.values_.size() && a.values_ == b.values_;
  }

 private:
  Eigen::VectorXd values_;
  bool empty_ = false;
};

/// Ordered frames of a common dimension.
class TimeSeries {
 public:
  TimeSeries() = default;

  explicit TimeSeries(std::vector<FrameVector> frames) : frames_(std::move(frames)) {
    if (frames_.empty()) return;
    dim_ = frames_.front().dim();
    for (Index t = 0; t < frames_.size(); ++t) {
      if (frames_[t].dim() != dim_) {
        throw DimensionError("frame " + std::to_string(t + 1) + " has dimension " +
                             std::to_string(frames_[t].dim()) + ", expected " + std::to_string(dim_));
      }
    }
  }

  Index length() const noexcept { return frames_.size(); }
  Index dim() const noexcept { return dim_; }
  bool empty() const noexcept { return frames_.empty(); }
  const FrameVector& operator[](Index t) const { return frames_[t]; }
  const std::vector<FrameVector>& frames() const noexcept { return frames_; }
  auto begin() const noexcept { return frames_.begin(); }
  auto end() const noexcept { return frames_.end(); }

  /// Frames [begin, end] inclusive.
  TimeSeries slice(Index begin, Index end) const {
    if (begin > end || end >= frames_.size()) throw InvariantError("slice out of range");
    return TimeSeries(std::vector<FrameVector>(frames_.begin() + static_cast<std::ptrdiff_t>(begin),
                                               frames_.begin() + static_cast<std::ptrdiff_t>(end) + 1));
  }

  TimeSeries reversed() const { return TimeSeries(std::vector<FrameVector>(frames_.rbegin(), frames_.rend())); }

  friend bool operator==(const TimeSeries& a, const TimeSeries& b) { return a.frames_ == b.frames_; }

 private:
  std::vector<FrameVector> frames_;
  Index dim_ = 0;
};

/// Per-frame category ids; 0 is the null class.
using LabelTrack = std::vector<Label>;

struct Segment {
  Index begin = 0;  // inclusive
  Index end = 0;    // inclusive
  Label label = kNullLabel;

  Index length() const noexcept { return end - begin + 1; }
  friend bool operator==(const Segment&, const Segment&) = default;
};

/// Labeled intervals tiling [0, length).
class Segmentation {
 public:
  Segmentation() = default;
  explicit Segmentation(std::vector<Segment> segments) : segments_(std::move(segments)) { validate(); }

  /// Collapses runs of equal labels.
  static Segmentation from_frame_labels(const LabelTrack& labels) {
    std::vector<Segment> out;
    for (Index t = 0; t < labels.size(); ++t) {
      if (out.empty() || out.back().label != labels[t]) {
        out.push_back({t, t, labels[t]});
      } else {
        out.back().end = t;
      }
    }
    return Segmentation(std::move(out));
  }

  const std::vector<Segment>& segments() const noexcept { return segments_; }
  Index size() const noexcept { return segments_.size(); }
  Index length() const noexcept { return segments_.empty() ? 0 : segments_.back().end + 1; }
  bool empty() const noexcept { return segments_.empty(); }
  const Segment& operator[](Index j) const { return segments_[j]; }

  LabelTrack frame_labels() const {
    LabelTrack labels(length());
    for (const auto& s : segments_) {
      for (Index t = s.begin; t <= s.end; ++t) labels[t] = s.label;
    }
    return labels;
  }

  /// Begin frames of segments 2..J.
  std::vector<Index> boundaries() const {
    std::vector<Index> out;
    for (Index j = 1; j < segments_.size(); ++j) out.push_back(segments_[j].begin);
    return out;
  }

  /// Throws InvariantError unless the segments tile [0, length()) and, if
  /// `expected_length` is non-zero, length() equals it.
  void validate(Index expected_length = 0) const {
    Index next = 0;
    for (Index j = 0; j < segments_.size(); ++j) {
      const auto& s = segments_[j];
      if (s.begin != next) {
        throw InvariantError("segment " + std::to_string(j + 1) + " begins at frame " + std::to_string(s.begin + 1) +
                             ", expected " + std::to_string(next + 1) + " (segments must tile the series)");
      }
      if (s.end < s.begin) throw InvariantError("segment " + std::to_string(j + 1) + " ends before it begins");
      next = s.end + 1;
    }
    if (expected_length != 0 && next != expected_length) {
      throw InvariantError("segmentation covers " + std::to_string(next) + " frames, expected " +
                           std::to_string(expected_length));
    }
  }

  friend bool operator==(const Segmentation&, const Segmentation&) = default;

 private:
  std::vector<Segment> segments_;
};

struct PathStep {
  Index t = 0;        // test frame
  Index t_prime = 0;  // template frame
  Label label = kNullLabel;
  friend bool operator==(const PathStep&, const PathStep&) = default;
};

using AlignmentPath = std::vector<PathStep>;

}  // namespace framewarp
