#pragma once

// Bag-of-words featurization of keypoint descriptor streams: a k-means
// codebook, per-frame word histograms pooled over a temporal window, optional
// IDF weighting, then l2 normalization.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "framewarp/parallel.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

struct Keypoint {
  Index frame = 0;  // 0-based
  Eigen::VectorXd descriptor;
};

struct KeypointStream {
  Index video_length = 0;
  Index dim = 0;
  std::vector<Keypoint> points;

  void validate() const {
    if (dim == 0) throw DimensionError("keypoint stream has dimension 0");
    for (Index i = 0; i < points.size(); ++i) {
      const auto& p = points[i];
      if (p.frame >= video_length) {
        throw InvariantError("keypoint " + std::to_string(i + 1) + " at frame " + std::to_string(p.frame + 1) +
                             " is outside the video (" + std::to_string(video_length) + " frames)");
      }
      if (static_cast<Index>(p.descriptor.size()) != dim) {
        throw DimensionError("keypoint " + std::to_string(i + 1) + " has dimension " +
                             std::to_string(p.descriptor.size()) + ", expected " + std::to_string(dim));
      }
      if (!p.descriptor.allFinite()) throw InvariantError("keypoint " + std::to_string(i + 1) + " is not finite");
    }
  }
};

struct Dictionary {
  Eigen::MatrixXd words;  // dim x K
  Eigen::VectorXd idf;    // K

  Index size() const noexcept { return static_cast<Index>(words.cols()); }
  Index dim() const noexcept { return static_cast<Index>(words.rows()); }

  void validate() const {
    if (size() < 2) throw InvariantError("dictionary needs at least 2 words");
    if (static_cast<Index>(idf.size()) != size()) throw InvariantError("dictionary idf length differs from K");
    if (!words.allFinite()) throw InvariantError("dictionary words must be finite");
    if (!idf.allFinite() || (idf.array() < 0.0).any()) throw InvariantError("idf weights must be finite and >= 0");
  }

  /// Closest word in squared Euclidean distance; ties go to the lowest index.
  Index nearest(const Eigen::VectorXd& x) const {
    if (static_cast<Index>(x.size()) != dim()) throw DimensionError("descriptor and dictionary dimensions differ");
    Index best = 0;
    double best_d = kInf;
    for (Index k = 0; k < size(); ++k) {
      const double d = (words.col(static_cast<Eigen::Index>(k)) - x).squaredNorm();
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  }

  friend bool operator==(const Dictionary& a, const Dictionary& b) {
    return a.words.rows() == b.words.rows() && a.words.cols() == b.words.cols() && a.words == b.words &&
           a.idf.size() == b.idf.size() && a.idf == b.idf;
  }
};

struct KMeansOptions {
  Index max_iterations = 100;
  double tolerance = 1e-6;  // stop once no centroid moves farther than this
};

/// k-means with k-means++ seeding over all keypoints of all streams.
inline Dictionary build_dictionary(const std::vector<KeypointStream>& streams, Index k, std::uint64_t seed,
                                   const KMeansOptions& options = {}) {
  if (k < 2) throw InvariantError("dictionary size K must be >= 2");
  Index dim = 0;
  std::vector<const Eigen::VectorXd*> points;
  for (const auto& s : streams) {
    s.validate();
    if (dim == 0) dim = s.dim;
    if (s.dim != dim) throw DimensionError("keypoint streams have different dimensions");
    for (const auto& p : s.points) points.push_back(&p.descriptor);
  }
  const Index n = points.size();
  if (n < k) {
    throw CapacityError("cannot build " + std::to_string(k) + " words from " + std::to_string(n) + " keypoints");
  }

  Rng rng(seed);
  Eigen::MatrixXd centers(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
  std::vector<double> nearest_sq(n, kInf);
  Index pick = rng.below(n);
  for (Index c = 0; c < k; ++c) {
    centers.col(static_cast<Eigen::Index>(c)) = *points[pick];
    double total = 0.0;
    for (Index i = 0; i < n; ++i) {
      nearest_sq[i] = std::min(nearest_sq[i], (*points[i] - centers.col(static_cast<Eigen::Index>(c))).squaredNorm());
      total += nearest_sq[i];
    }
    if (c + 1 == k) break;
    if (total > 0.0) {
      const double target = rng.uniform() * total;
      double run = 0.0;
      pick = n - 1;
      for (Index i = 0; i < n; ++i) {
        run += nearest_sq[i];
        if (run > target && nearest_sq[i] > 0.0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = rng.below(n);  // every point already coincides with a center
    }
  }

  std::vector<Index> assign(n, 0);
  for (Index iter = 0; iter < options.max_iterations; ++iter) {
    for (Index i = 0; i < n; ++i) {
      double best = kInf;
      for (Index c = 0; c < k; ++c) {
        const double d = (*points[i] - centers.col(static_cast<Eigen::Index>(c))).squaredNorm();
        if (d < best) {
          best = d;
          assign[i] = c;
        }
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(centers.rows(), centers.cols());
    std::vector<Index> counts(k, 0);
    for (Index i = 0; i < n; ++i) {
      sums.col(static_cast<Eigen::Index>(assign[i])) += *points[i];
      ++counts[assign[i]];
    }
    double shift = 0.0;
    for (Index c = 0; c < k; ++c) {
      if (counts[c] == 0) continue;  // an empty cluster keeps its center
      const Eigen::VectorXd mean = sums.col(static_cast<Eigen::Index>(c)) / static_cast<double>(counts[c]);
      shift = std::max(shift, (mean - centers.col(static_cast<Eigen::Index>(c))).norm());
      centers.col(static_cast<Eigen::Index>(c)) = mean;
    }
    if (shift < options.tolerance) break;
  }

  Dictionary dict;
  dict.words = std::move(centers);
  dict.idf = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(k));
  return dict;
}

/// Frames [lo, hi] (inclusive, 0-based) pooled for one output frame.
struct Window {
  Index lo = 0;
  Index hi = 0;
  Index count = 0;  // keypoints inside
  friend bool operator==(const Window&, const Window&) = default;
};

/// How the pooling window is chosen: grow symmetrically until `q` keypoints
/// are covered (half-width at most `cap`), or use a fixed width.
struct WindowPolicy {
  Index q = 10;
  Index cap = 0;          // 0 = video length
  Index fixed_width = 0;  // > 0 selects the fixed window of this many frames

  static WindowPolicy adaptive(Index q, Index cap = 0) { return {q, cap, 0}; }
  static WindowPolicy fixed(Index width) { return {1, 0, width}; }
};

/// Keypoints per frame, as a prefix sum of length video_length + 1.
inline std::vector<Index> keypoint_prefix(const KeypointStream& stream) {
  std::vector<Index> prefix(stream.video_length + 1, 0);
  for (const auto& p : stream.points) ++prefix[p.frame + 1];
  for (Index t = 0; t < stream.video_length; ++t) prefix[t + 1] += prefix[t];
  return prefix;
}

inline Window window_at(const std::vector<Index>& prefix, Index t, Index half) {
  const Index length = prefix.size() - 1;
  const Index lo = t >= half ? t - half : 0;
  const Index hi = std::min(length - 1, t + std::min(half, length));
  return {lo, hi, prefix[hi + 1] - prefix[lo]};
}

/// Smallest symmetric window around t holding at least q keypoints, or the
/// half-width `cap` window if none does. cap = 0 means the video length.
inline Window adaptive_window(const std::vector<Index>& prefix, Index t, Index q, Index cap) {
  const Index length = prefix.size() - 1;
  if (t >= length) throw InvariantError("frame " + std::to_string(t + 1) + " is outside the video");
  if (q < 1) throw InvariantError("Q must be >= 1");
  if (cap == 0) cap = length;
  for (Index w = 0; w < cap; ++w) {
    const Window win = window_at(prefix, t, w);
    if (win.count >= q) return win;
    if (win.lo == 0 && win.hi == length - 1) return win;  // growing further changes nothing
  }
  return window_at(prefix, t, cap);
}

inline Window adaptive_window(const KeypointStream& stream, Index t, Index q, Index cap = 0) {
  return adaptive_window(keypoint_prefix(stream), t, q, cap);
}

inline std::vector<Window> frame_windows(const KeypointStream& stream, const WindowPolicy& policy) {
  const auto prefix = keypoint_prefix(stream);
  std::vector<Window> out;
  out.reserve(stream.video_length);
  for (Index t = 0; t < stream.video_length; ++t) {
    out.push_back(policy.fixed_width > 0 ? window_at(prefix, t, policy.fixed_width / 2)
                                         : adaptive_window(prefix, t, policy.q, policy.cap));
  }
  return out;
}

/// Raw word counts per frame (K x video_length), each pooled over its window.
inline Eigen::MatrixXd window_counts(const KeypointStream& stream, const Dictionary& dict,
                                     const WindowPolicy& policy, unsigned threads = 1) {
  stream.validate();
  if (stream.dim != dict.dim()) {
    throw DimensionError("stream dimension " + std::to_string(stream.dim) + " does not match dictionary dimension " +
                         std::to_string(dict.dim()));
  }
  const auto k = static_cast<Eigen::Index>(dict.size());
  const Index length = stream.video_length;
  std::vector<Index> words(stream.points.size());
  parallel_for(stream.points.size(), threads, [&](Index i) { words[i] = dict.nearest(stream.points[i].descriptor); });

  // Column t + 1 of `prefix` counts words over frames [0, t].
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(k, static_cast<Eigen::Index>(length + 1));
  for (Index i = 0; i < words.size(); ++i) {
    prefix(static_cast<Eigen::Index>(words[i]), static_cast<Eigen::Index>(stream.points[i].frame + 1)) += 1.0;
  }
  for (Index t = 0; t < length; ++t) {
    prefix.col(static_cast<Eigen::Index>(t + 1)) += prefix.col(static_cast<Eigen::Index>(t));
  }
  const auto windows = frame_windows(stream, policy);
  Eigen::MatrixXd counts(k, static_cast<Eigen::Index>(length));
  for (Index t = 0; t < length; ++t) {
    counts.col(static_cast<Eigen::Index>(t)) =
        prefix.col(static_cast<Eigen::Index>(windows[t].hi + 1)) - prefix.col(static_cast<Eigen::Index>(windows[t].lo));
  }
  return counts;
}

/// idf[k] = ln(N / n_k) over all frames, n_k = frames where word k occurs;
/// unseen words get ln(N).
inline Eigen::VectorXd compute_idf(const std::vector<Eigen::MatrixXd>& counts) {
  if (counts.empty()) throw InvariantError("compute_idf: no training data");
  const Eigen::Index k = counts.front().rows();
  Eigen::VectorXd seen = Eigen::VectorXd::Zero(k);
  double frames = 0.0;
  bool any = false;
  for (const auto& c : counts) {
    if (c.rows() != k) throw DimensionError("compute_idf: histograms differ in word count");
    for (Eigen::Index t = 0; t < c.cols(); ++t) {
      frames += 1.0;
      for (Eigen::Index w = 0; w < k; ++w) {
        if (c(w, t) > 0.0) {
          seen(w) += 1.0;
          any = true;
        }
      }
    }
  }
  if (!any) throw InvariantError("compute_idf: every frame is empty");
  Eigen::VectorXd idf(k);
  for (Eigen::Index w = 0; w < k; ++w) idf(w) = seen(w) > 0.0 ? std::log(frames / seen(w)) : std::log(frames);
  return idf;
}

/// Normalized (optionally IDF-weighted) histograms, one frame per video frame.
inline TimeSeries featurize(const KeypointStream& stream, const Dictionary& dict, const WindowPolicy& policy,
                            bool use_idf = true, unsigned threads = 1) {
  dict.validate();
  const Eigen::MatrixXd counts = window_counts(stream, dict, policy, threads);
  std::vector<FrameVector> frames;
  frames.reserve(stream.video_length);
  for (Eigen::Index t = 0; t < counts.cols(); ++t) {
    Eigen::VectorXd h = counts.col(t);
    if (use_idf) h = h.cwiseProduct(dict.idf);
    frames.emplace_back(std::move(h));
  }
  return TimeSeries(std::move(frames));
}

}  // namespace framewarp
