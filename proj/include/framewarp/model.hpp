#pragma once

// Learned model representation: metaframes, class templates and the
// super-template that concatenates them in a fixed order.

#include <limits>
#include <map>
#include <string>
#include <vector>

#include "framewarp/types.hpp"

namespace framewarp {

inline constexpr Index kUnboundedLength = std::numeric_limits<Index>::max();

struct FrameSource {
  Index example = 0;
  Index frame = 0;
  friend bool operator==(const FrameSource&, const FrameSource&) = default;
};

/// Training frames matched to one position of a class center.
struct Metaframe {
  std::vector<FrameVector> frames;
  std::vector<FrameSource> sources;  // parallel to `frames`; may be empty for loaded models

  Index size() const noexcept { return frames.size(); }
  friend bool operator==(const Metaframe& a, const Metaframe& b) { return a.frames == b.frames; }
};

struct ClassTemplate {
  Label label = kNullLabel;
  std::vector<Metaframe> metaframes;
  Index t_min = 1;
  Index t_max = kUnboundedLength;
  bool is_pattern = false;
  bool is_null = false;

  Index length() const noexcept { return metaframes.size(); }

  /// Length bounds admit `len` test frames. The null template admits everything.
  bool admits(Index len) const noexcept { return is_null || (t_min <= len && len <= t_max); }

  void validate() const {
    const std::string who = "template " + std::to_string(label);
    if (metaframes.empty()) throw InvariantError(who + " has no metaframes");
    for (const auto& m : metaframes) {
      if (m.frames.empty()) throw InvariantError(who + " has an empty metaframe");
    }
    if (t_min < 1 || t_min > t_max) throw InvariantError(who + " has invalid length bounds");
    if (is_null && (length() != 1 || t_min != 1 || t_max != kUnboundedLength)) {
      throw InvariantError(who + ": null template must have length 1 and no length bounds");
    }
    if (is_null != (label == kNullLabel)) throw InvariantError(who + ": label 0 is reserved for the null template");
    Index dim = 0;
    for (const auto& m : metaframes) {
      for (const auto& f : m.frames) {
        if (dim == 0) dim = f.dim();
        if (f.dim() != dim) throw DimensionError(who + " mixes frame dimensions");
      }
    }
  }

  Index dim() const noexcept { return metaframes.empty() ? 0 : metaframes.front().frames.front().dim(); }

  friend bool operator==(const ClassTemplate&, const ClassTemplate&) = default;
};

/// Class templates in a fixed, persisted order with unique labels.
class SuperTemplate {
 public:
  SuperTemplate() = default;

  explicit SuperTemplate(std::vector<ClassTemplate> templates) : templates_(std::move(templates)) {
    std::map<Label, Index> seen;
    Index dim = 0;
    for (Index i = 0; i < templates_.size(); ++i) {
      const auto& tpl = templates_[i];
      tpl.validate();
      if (!seen.emplace(tpl.label, i).second) {
        throw InvariantError("duplicate template label " + std::to_string(tpl.label));
      }
      if (dim == 0) dim = tpl.dim();
      if (tpl.dim() != dim) throw DimensionError("templates have different frame dimensions");
      offsets_.push_back(total_length_);
      total_length_ += tpl.length();
    }
    dim_ = dim;
  }

  const std::vector<ClassTemplate>& templates() const noexcept { return templates_; }
  const ClassTemplate& operator[](Index i) const { return templates_[i]; }
  Index size() const noexcept { return templates_.size(); }
  bool empty() const noexcept { return templates_.empty(); }
  Index total_length() const noexcept { return total_length_; }
  Index dim() const noexcept { return dim_; }

  /// Column of template i's first metaframe on the concatenated axis.
  Index offset(Index i) const { return offsets_[i]; }

  std::vector<Label> order() const {
    std::vector<Label> out;
    for (const auto& t : templates_) out.push_back(t.label);
    return out;
  }

  bool has_null() const noexcept {
    for (const auto& t : templates_) {
      if (t.is_null) return true;
    }
    return false;
  }

  friend bool operator==(const SuperTemplate& a, const SuperTemplate& b) { return a.templates_ == b.templates_; }

 private:
  std::vector<ClassTemplate> templates_;
  std::vector<Index> offsets_;
  Index total_length_ = 0;
  Index dim_ = 0;
};

/// What the decoders need to know about a template besides its distances.
struct TemplateShape {
  Label label = kNullLabel;
  Index length = 1;
  Index t_min = 1;
  Index t_max = kUnboundedLength;
  bool is_null = false;

  bool admits(Index len) const noexcept { return is_null || (t_min <= len && len <= t_max); }
};

inline std::vector<TemplateShape> shapes_of(const SuperTemplate& model) {
  std::vector<TemplateShape> out;
  for (const auto& t : model.templates()) out.push_back({t.label, t.length(), t.t_min, t.t_max, t.is_null});
  return out;
}

}  // namespace framewarp
