#pragma once

// Deterministic synthetic corpora. Every class owns a smooth trajectory over a
// handful of words of a bag-of-words vocabulary: at phase s in [0, 1) word i
// of the class peaks at its own phase. Half of the length jitter is an actor
// speed, half is per instance; actors also differ in a nonlinear time warp. Noise scales each word weight by
// (1 + noise * N(0,1)), clipped at zero, and adds a stray count to about one
// word in ten. Periodic
// classes cycle through a shared set of words in a class-specific order and
// repeat that cycle several times. Null gaps draw random signatures over
// words that no class uses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "framewarp/features.hpp"
#include "framewarp/rng.hpp"
#include "framewarp/templates.hpp"
#include "framewarp/types.hpp"

namespace framewarp {

struct SynthConfig {
  Index n_classes = 3;
  Index n_actors = 5;
  Index sequences_per_actor = 3;
  Index min_actions = 4;  // per sequence
  Index max_actions = 8;
  double mean_action_length = 40.0;
  double length_jitter = 0.3;     // relative spread of action lengths, half actor speed, half instance
  double alignment_jitter = 0.0;  // strength of the per-actor nonlinear time warp, < 1
  double signature_noise = 0.1;
  Index words_per_class = 8;
  Index null_words = 8;
  double null_gap_prob = 0.0;    // chance of a null gap before each action
  double null_gap_length = 0.0;  // mean gap length; 0 = mean_action_length
  bool periodic = false;
  Index pattern_length = 10;
  Index min_repeats = 3;
  Index max_repeats = 6;
  bool keypoints = false;
  double keypoint_rate = 8.0;  // mean keypoints per frame
  Index descriptor_dim = 16;
  double descriptor_noise = 0.05;
  std::uint64_t seed = 1;

  void validate() const {
    auto positive = [](Index v, const char* name) {
      if (v == 0) throw InvariantError(std::string(name) + " must be positive");
    };
    positive(n_classes, "n_classes");
    positive(n_actors, "n_actors");
    positive(sequences_per_actor, "sequences_per_actor");
    positive(min_actions, "min_actions");
    positive(words_per_class, "words_per_class");
    positive(pattern_length, "pattern_length");
    positive(min_repeats, "min_repeats");
    positive(descriptor_dim, "descriptor_dim");
    if (max_actions < min_actions) throw InvariantError("max_actions must be >= min_actions");
    if (max_repeats < min_repeats) throw InvariantError("max_repeats must be >= min_repeats");
    if (!(mean_action_length >= 3.0)) throw InvariantError("mean_action_length must be >= 3");
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw InvariantError(std::string(name) + " must lie in [0, 1]");
    };
    unit(length_jitter, "length_jitter");
    unit(signature_noise, "signature_noise");
    unit(null_gap_prob, "null_gap_prob");
    if (!(alignment_jitter >= 0.0 && alignment_jitter < 1.0)) throw InvariantError("alignment_jitter must lie in [0, 1)");
    if (null_gap_prob > 0.0 && null_words == 0) throw InvariantError("null gaps need null_words > 0");
    if (!(null_gap_length >= 0.0)) throw InvariantError("null_gap_length must be >= 0");
    if (!(keypoint_rate > 0.0)) throw InvariantError("keypoint_rate must be > 0");
    if (!(descriptor_noise >= 0.0)) throw InvariantError("descriptor_noise must be >= 0");
    if (periodic && n_classes > cyclic_orders(words_per_class)) {
      throw InvariantError("periodic mode needs more words_per_class to give every class its own cycle");
    }
  }

  /// Cyclic word orders available for periodic classes, a cycle and its
  /// reverse counted once: (m - 1)! / 2 for m >= 3.
  static Index cyclic_orders(Index m) {
    Index n = 1;
    for (Index i = 2; i < m; ++i) n *= i;
    return m < 3 ? 1 : n / 2;
  }

  Index class_words() const { return periodic ? words_per_class : n_classes * words_per_class; }
  Index vocabulary() const { return class_words() + null_words; }
};

struct SynthSequence {
  Index actor = 0;
  TimeSeries series;
  Segmentation truth;      // runs of equal labels
  Segmentation instances;  // one segment per action instance (per repetition for periodic classes)
  KeypointStream keypoints;
};

struct SynthCorpus {
  SynthConfig config;
  Index dim = 0;
  std::vector<SynthSequence> sequences;
  Eigen::MatrixXd word_centers;  // descriptor_dim x vocabulary, keypoint mode only
  std::set<Label> pattern_labels;

  /// Training examples cut from the sequences whose actor passes `keep`.
  template <class Keep>
  TrainingSet training_set(Keep keep) const {
    TrainingSet out;
    for (const auto& s : sequences) {
      if (keep(s.actor)) out.add_annotated(s.series, s.instances);
    }
    return out;
  }
};

namespace detail {

inline constexpr double kBumpWidth = 0.6;  // in units of the spacing between word peaks
inline constexpr double kStrayWordRate = 0.1;

/// Word weights of one class at phase s.
inline void class_signature(Eigen::VectorXd& raw, const std::vector<Index>& words, double s, bool periodic) {
  const double m = static_cast<double>(words.size());
  for (Index i = 0; i < words.size(); ++i) {
    const double center = (static_cast<double>(i) + 0.5) / m;
    double delta = std::abs(s - center);
    if (periodic) delta = std::min(delta, 1.0 - delta);
    const double z = delta * m / kBumpWidth;
    raw(static_cast<Eigen::Index>(words[i])) += std::exp(-0.5 * z * z);
  }
}

/// Monotone warp of [0, 1] onto itself; |beta| < 1.
inline double warp_phase(double u, double beta) {
  return u + beta * std::sin(2.0 * std::numbers::pi * u) / (2.0 * std::numbers::pi);
}

/// Cyclic orders of 0..m-1 that start with 0, one of each mirror pair (a
/// reversed cycle blends the same neighbouring words), in a seeded order.
inline std::vector<std::vector<Index>> distinct_cycles(Index m, Index count, Rng& rng) {
  std::vector<Index> rest(m > 0 ? m - 1 : 0);
  for (Index i = 0; i < rest.size(); ++i) rest[i] = i + 1;
  std::vector<std::vector<Index>> all;
  do {
    if (rest.size() >= 2 && rest.front() > rest.back()) continue;
    std::vector<Index> c{0};
    c.insert(c.end(), rest.begin(), rest.end());
    all.push_back(c);
  } while (std::next_permutation(rest.begin(), rest.end()));
  rng.shuffle(all);
  all.resize(count);
  return all;
}

}  // namespace detail

inline SynthCorpus generate_corpus(const SynthConfig& cfg) {
  cfg.validate();
  SynthCorpus corpus;
  corpus.config = cfg;
  corpus.dim = cfg.vocabulary();
  const auto dim = static_cast<Eigen::Index>(corpus.dim);
  const Index null_base = cfg.class_words();

  Rng rng(cfg.seed);
  std::vector<std::vector<Index>> class_words(cfg.n_classes);
  if (cfg.periodic) {
    class_words = detail::distinct_cycles(cfg.words_per_class, cfg.n_classes, rng);
    for (Index c = 0; c < cfg.n_classes; ++c) corpus.pattern_labels.insert(static_cast<Label>(c + 1));
  } else {
    for (Index c = 0; c < cfg.n_classes; ++c) {
      for (Index i = 0; i < cfg.words_per_class; ++i) class_words[c].push_back(c * cfg.words_per_class + i);
    }
  }

  std::vector<double> speed(cfg.n_actors), skew(cfg.n_actors);
  for (Index a = 0; a < cfg.n_actors; ++a) {
    speed[a] = 1.0 + 0.5 * cfg.length_jitter * rng.uniform(-1.0, 1.0);
    skew[a] = rng.uniform(-1.0, 1.0);
  }

  auto noisy = [&](Eigen::VectorXd raw) {
    for (Eigen::Index k = 0; k < dim; ++k) {
      raw(k) *= std::max(0.0, 1.0 + cfg.signature_noise * rng.normal());
      if (rng.uniform() < detail::kStrayWordRate) raw(k) += cfg.signature_noise * std::abs(rng.normal());
    }
    return raw;
  };

  for (Index a = 0; a < cfg.n_actors; ++a) {
    for (Index q = 0; q < cfg.sequences_per_actor; ++q) {
      std::vector<Eigen::VectorXd> raw_frames;
      std::vector<Segment> instances;
      auto emit = [&](Eigen::VectorXd raw) {
        raw_frames.push_back(std::move(raw));
        instances.back().end = raw_frames.size() - 1;
      };
      auto open = [&](Label label) { instances.push_back({raw_frames.size(), raw_frames.size(), label}); };

      const auto actions = static_cast<Index>(rng.between(static_cast<long long>(cfg.min_actions),
                                                          static_cast<long long>(cfg.max_actions)));
      for (Index n = 0; n < actions; ++n) {
        if (cfg.null_gap_prob > 0.0 && rng.uniform() < cfg.null_gap_prob) {
          const double mean = cfg.null_gap_length > 0.0 ? cfg.null_gap_length : cfg.mean_action_length;
          const auto len = std::max<Index>(2, static_cast<Index>(std::lround(mean * rng.uniform(0.5, 1.5))));
          Eigen::VectorXd base = Eigen::VectorXd::Zero(dim);
          for (Index k = 0; k < cfg.null_words; ++k) base(static_cast<Eigen::Index>(null_base + k)) = rng.uniform();
          open(kNullLabel);
          for (Index t = 0; t < len; ++t) {
            Eigen::VectorXd raw = base;
            for (Index k = 0; k < cfg.null_words; ++k) {
              raw(static_cast<Eigen::Index>(null_base + k)) += 0.5 * std::abs(rng.normal());
            }
            emit(noisy(std::move(raw)));
          }
        }

        const Index cls = rng.below(cfg.n_classes);
        const auto label = static_cast<Label>(cls + 1);
        const double beta = std::clamp(cfg.alignment_jitter * (0.7 * skew[a] + 0.3 * rng.uniform(-1.0, 1.0)), -0.95, 0.95);
        auto instance = [&](double mean_length) {
          const double stretch = speed[a] * (1.0 + 0.5 * cfg.length_jitter * rng.uniform(-1.0, 1.0));
          const auto len = std::max<Index>(3, static_cast<Index>(std::lround(mean_length * stretch)));
          open(label);
          for (Index t = 0; t < len; ++t) {
            const double u = (static_cast<double>(t) + 0.5) / static_cast<double>(len);
            Eigen::VectorXd raw = Eigen::VectorXd::Zero(dim);
            detail::class_signature(raw, class_words[cls], detail::warp_phase(u, beta), cfg.periodic);
            emit(noisy(std::move(raw)));
          }
        };
        if (cfg.periodic) {
          const auto repeats = static_cast<Index>(rng.between(static_cast<long long>(cfg.min_repeats),
                                                              static_cast<long long>(cfg.max_repeats)));
          for (Index r = 0; r < repeats; ++r) instance(static_cast<double>(cfg.pattern_length));
        } else {
          instance(cfg.mean_action_length);
        }
      }

      SynthSequence seq;
      seq.actor = a;
      std::vector<FrameVector> frames;
      frames.reserve(raw_frames.size());
      for (const auto& r : raw_frames) frames.emplace_back(r);
      seq.series = TimeSeries(std::move(frames));
      seq.instances = Segmentation(instances);
      seq.truth = Segmentation::from_frame_labels(seq.instances.frame_labels());
      if (cfg.keypoints) {
        seq.keypoints.video_length = raw_frames.size();
        seq.keypoints.dim = cfg.descriptor_dim;
        // Filled below once the word centers exist; keep the raw weights meanwhile.
        for (Index t = 0; t < raw_frames.size(); ++t) {
          Keypoint p;
          p.frame = t;
          p.descriptor = raw_frames[t];
          seq.keypoints.points.push_back(std::move(p));
        }
      }
      corpus.sequences.push_back(std::move(seq));
    }
  }

  if (cfg.keypoints) {
    // Separate stream so toggling keypoints leaves the direct features untouched.
    Rng kp(cfg.seed ^ 0x6b657970ULL);
    corpus.word_centers = Eigen::MatrixXd(static_cast<Eigen::Index>(cfg.descriptor_dim), dim);
    for (Eigen::Index k = 0; k < dim; ++k) {
      for (Eigen::Index i = 0; i < corpus.word_centers.rows(); ++i) corpus.word_centers(i, k) = kp.normal();
    }
    for (auto& seq : corpus.sequences) {
      std::vector<Keypoint> weights = std::move(seq.keypoints.points);
      seq.keypoints.points.clear();
      for (const auto& w : weights) {
        const Eigen::VectorXd& p = w.descriptor;
        const double total = p.sum();
        const unsigned count = kp.poisson(cfg.keypoint_rate);
        for (unsigned n = 0; n < count; ++n) {
          double target = kp.uniform() * total;
          Eigen::Index word = dim - 1;
          for (Eigen::Index k = 0; k < dim; ++k) {
            target -= p(k);
            if (target < 0.0) {
              word = k;
              break;
            }
          }
          Keypoint out;
          out.frame = w.frame;
          out.descriptor = corpus.word_centers.col(word);
          for (Eigen::Index i = 0; i < out.descriptor.size(); ++i) out.descriptor(i) += cfg.descriptor_noise * kp.normal();
          seq.keypoints.points.push_back(std::move(out));
        }
      }
    }
  }
  return corpus;
}

}  // namespace framewarp
