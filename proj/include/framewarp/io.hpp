#pragma once

// File formats. Every index in a file is 1-based. JSON documents carry a
// "format_version" field; CSV files may start with a "# format_version=1"
// comment. Numbers are written in shortest round-trip form, so reading back a
// written file reproduces the values bit for bit.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "framewarp/features.hpp"
#include "framewarp/model.hpp"
#include "framewarp/one_pass.hpp"
#include "framewarp/types.hpp"

namespace framewarp::io {

using Json = nlohmann::ordered_json;
namespace fs = std::filesystem;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------- raw files

inline std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("error while reading " + path.string());
  return ss.str();
}

/// Writes to a sibling temporary file, then renames it over `path`.
inline void write_atomic(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw IoError("error while writing " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move output into place at " + path.string());
  }
}

inline std::string dump(const Json& doc) { return doc.dump(2) + "\n"; }

/// 1-based line of a byte offset, for parse diagnostics.
inline std::size_t line_of(std::string_view text, std::size_t byte) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < byte && i < text.size(); ++i) {
    if (text[i] == '\n') ++line;
  }
  return line;
}

inline Json parse_json(std::string_view text, const std::string& what) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(what + ": malformed JSON", line_of(text, e.byte));
  }
}

inline void check_version(const Json& doc, const std::string& what) {
  if (!doc.is_object()) throw ParseError(what + ": expected a JSON object");
  if (!doc.contains("format_version")) throw ParseError(what + ": missing format_version");
  if (doc["format_version"] != kFormatVersion) {
    throw ParseError(what + ": unsupported format_version " + doc["format_version"].dump());
  }
}

/// Typed field access with schema errors reported as parse errors.
template <class T>
T field(const Json& obj, const char* key, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) throw ParseError(what + ": missing field \"" + key + "\"");
  try {
    return obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ParseError(what + ": field \"" + key + "\" has the wrong type");
  }
}

// ---------------------------------------------------------------- numbers

inline std::string format_number(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

inline double parse_number(std::string_view s, std::size_t row) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ParseError("not a number: \"" + std::string(s) + "\"", row);
  }
  return v;
}

inline long long parse_integer(std::string_view s, std::size_t row) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || r.ec != std::errc() || r.ptr != s.data() + s.size()) {
    throw ParseError("not an integer: \"" + std::string(s) + "\"", row);
  }
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

/// Non-empty, non-comment lines with their 1-based line numbers.
inline std::vector<std::pair<std::size_t, std::string_view>> data_lines(std::string_view text) {
  std::vector<std::pair<std::size_t, std::string_view>> out;
  std::size_t row = 0;
  for (auto line : split(text, '\n')) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos || line.front() == '#') continue;
    out.emplace_back(row, line);
  }
  return out;
}

// ---------------------------------------------------------------- series

/// A frame whose stored norm was off by more than kReportNormTolerance.
struct NormDeviation {
  Index frame = 0;  // 0-based
  double norm = 0.0;
};

inline constexpr double kReportNormTolerance = 1e-3;

struct SeriesRead {
  TimeSeries series;
  std::vector<NormDeviation> renormalized;
};

enum class SeriesFormat { csv, json };

inline SeriesFormat format_of(const fs::path& path) {
  return path.extension() == ".json" ? SeriesFormat::json : SeriesFormat::csv;
}

namespace detail {

inline FrameVector make_frame(Eigen::VectorXd raw, Index t, std::vector<NormDeviation>& log, std::size_t row) {
  if (!raw.allFinite()) throw ParseError("non-finite value", row);
  const double norm = raw.norm();
  if (norm != 0.0 && std::abs(norm - 1.0) > kReportNormTolerance) log.push_back({t, norm});
  return FrameVector(std::move(raw));
}

}  // namespace detail

inline SeriesRead parse_series_csv(std::string_view text) {
  SeriesRead out;
  std::vector<FrameVector> frames;
  Index dim = 0;
  for (const auto& [row, line] : data_lines(text)) {
    const auto cells = split(line, ',');
    if (dim == 0) dim = cells.size();
    if (cells.size() != dim) {
      throw DimensionError("row " + std::to_string(row) + " has " + std::to_string(cells.size()) +
                           " values, expected " + std::to_string(dim));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Index k = 0; k < dim; ++k) v(static_cast<Eigen::Index>(k)) = parse_number(cells[k], row);
    frames.push_back(detail::make_frame(std::move(v), frames.size(), out.renormalized, row));
  }
  out.series = TimeSeries(std::move(frames));
  return out;
}

inline Json series_to_json(const TimeSeries& z) {
  Json frames = Json::array();
  for (const auto& f : z) {
    Json row = Json::array();
    for (Index k = 0; k < f.dim(); ++k) row.push_back(f[k]);
    frames.push_back(std::move(row));
  }
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["dim"] = z.dim();
  doc["frames"] = std::move(frames);
  return doc;
}

inline SeriesRead series_from_json(const Json& doc, const std::string& what) {
  check_version(doc, what);
  const auto dim = field<Index>(doc, "dim", what);
  const auto& frames = doc.contains("frames") ? doc["frames"] : throw ParseError(what + ": missing field \"frames\"");
  if (!frames.is_array()) throw ParseError(what + ": \"frames\" must be an array");
  SeriesRead out;
  std::vector<FrameVector> parsed;
  for (std::size_t t = 0; t < frames.size(); ++t) {
    const auto& f = frames[t];
    if (!f.is_array()) throw ParseError(what + ": frame is not an array", t + 1);
    if (f.size() != dim) {
      throw DimensionError(what + ": frame " + std::to_string(t + 1) + " has " + std::to_string(f.size()) +
                           " values, expected " + std::to_string(dim));
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(dim));
    for (Index k = 0; k < dim; ++k) {
      if (!f[k].is_number()) throw ParseError(what + ": non-numeric value", t + 1);
      v(static_cast<Eigen::Index>(k)) = f[k].get<double>();
    }
    parsed.push_back(detail::make_frame(std::move(v), t, out.renormalized, t + 1));
  }
  out.series = TimeSeries(std::move(parsed));
  return out;
}

inline SeriesRead read_time_series(const fs::path& path, SeriesFormat format) {
  const std::string text = read_text(path);
  try {
    if (format == SeriesFormat::json) return series_from_json(parse_json(text, path.string()), path.string());
    return parse_series_csv(text);
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline SeriesRead read_time_series(const fs::path& path) { return read_time_series(path, format_of(path)); }

inline std::string series_to_csv(const TimeSeries& z) {
  std::string out = "# format_version=" + std::to_string(kFormatVersion) + "\n";
  for (const auto& f : z) {
    for (Index k = 0; k < f.dim(); ++k) {
      if (k) out += ',';
      out += format_number(f[k]);
    }
    out += '\n';
  }
  return out;
}

inline void write_time_series(const TimeSeries& z, const fs::path& path, SeriesFormat format) {
  write_atomic(path, format == SeriesFormat::json ? dump(series_to_json(z)) : series_to_csv(z));
}

inline void write_time_series(const TimeSeries& z, const fs::path& path) { write_time_series(z, path, format_of(path)); }

// ---------------------------------------------------------------- segmentation

inline Json segmentation_to_json(const Segmentation& seg) {
  seg.validate();
  Json segs = Json::array();
  for (const auto& s : seg.segments()) {
    segs.push_back(Json{{"begin", s.begin + 1}, {"end", s.end + 1}, {"label", s.label}});
  }
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["segments"] = std::move(segs);
  doc["frame_labels"] = seg.frame_labels();
  return doc;
}

inline Segmentation segmentation_from_json(const Json& doc, const std::string& what) {
  check_version(doc, what);
  if (!doc.contains("segments") || !doc["segments"].is_array()) throw ParseError(what + ": missing segments array");
  std::vector<Segment> segs;
  for (std::size_t j = 0; j < doc["segments"].size(); ++j) {
    const auto& s = doc["segments"][j];
    const auto begin = field<long long>(s, "begin", what);
    const auto end = field<long long>(s, "end", what);
    if (begin < 1 || end < 1) throw ParseError(what + ": segment indices are 1-based", j + 1);
    segs.push_back({static_cast<Index>(begin - 1), static_cast<Index>(end - 1), field<Label>(s, "label", what)});
  }
  Segmentation seg(std::move(segs));
  if (doc.contains("frame_labels") && doc["frame_labels"].get<LabelTrack>() != seg.frame_labels()) {
    throw InvariantError(what + ": frame_labels disagree with segments");
  }
  return seg;
}

inline Segmentation read_segmentation(const fs::path& path) {
  return segmentation_from_json(parse_json(read_text(path), path.string()), path.string());
}

inline void write_segmentation(const Segmentation& seg, const fs::path& path) {
  write_atomic(path, dump(segmentation_to_json(seg)));
}

// ---------------------------------------------------------------- model

inline Json model_to_json(const SuperTemplate& model) {
  Json templates = Json::array();
  for (const auto& tpl : model.templates()) {
    Json t;
    t["label"] = tpl.label;
    t["is_pattern"] = tpl.is_pattern;
    t["is_null"] = tpl.is_null;
    t["t_min"] = tpl.t_min;
    t["t_max"] = tpl.t_max == kUnboundedLength ? Json(nullptr) : Json(tpl.t_max);
    Json metaframes = Json::array();
    Json sources = Json::array();
    for (const auto& m : tpl.metaframes) {
      Json frames = Json::array();
      for (const auto& f : m.frames) {
        Json row = Json::array();
        for (Index k = 0; k < f.dim(); ++k) row.push_back(f[k]);
        frames.push_back(std::move(row));
      }
      metaframes.push_back(std::move(frames));
      Json src = Json::array();
      for (const auto& s : m.sources) src.push_back(Json::array({s.example + 1, s.frame + 1}));
      sources.push_back(std::move(src));
    }
    t["metaframes"] = std::move(metaframes);
    t["sources"] = std::move(sources);
    templates.push_back(std::move(t));
  }
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["dim"] = model.dim();
  doc["order"] = model.order();
  doc["templates"] = std::move(templates);
  return doc;
}

inline SuperTemplate model_from_json(const Json& doc, const std::string& what) {
  check_version(doc, what);
  if (!doc.contains("templates") || !doc["templates"].is_array()) throw ParseError(what + ": missing templates array");
  std::vector<ClassTemplate> templates;
  for (const auto& t : doc["templates"]) {
    ClassTemplate tpl;
    tpl.label = field<Label>(t, "label", what);
    tpl.is_pattern = field<bool>(t, "is_pattern", what);
    tpl.is_null = field<bool>(t, "is_null", what);
    tpl.t_min = field<Index>(t, "t_min", what);
    tpl.t_max = (!t.contains("t_max") || t["t_max"].is_null()) ? kUnboundedLength : field<Index>(t, "t_max", what);
    if (!t.contains("metaframes") || !t["metaframes"].is_array()) throw ParseError(what + ": template without metaframes");
    const bool has_sources = t.contains("sources") && t["sources"].is_array();
    for (std::size_t j = 0; j < t["metaframes"].size(); ++j) {
      Metaframe m;
      for (const auto& f : t["metaframes"][j]) {
        if (!f.is_array() || f.empty()) throw ParseError(what + ": metaframe frame must be a non-empty array");
        Eigen::VectorXd v(static_cast<Eigen::Index>(f.size()));
        for (std::size_t k = 0; k < f.size(); ++k) {
          if (!f[k].is_number()) throw ParseError(what + ": non-numeric value in template " + std::to_string(tpl.label));
          v(static_cast<Eigen::Index>(k)) = f[k].get<double>();
        }
        m.frames.emplace_back(std::move(v));
      }
      if (has_sources && j < t["sources"].size()) {
        for (const auto& s : t["sources"][j]) {
          const auto pair = s.get<std::vector<Index>>();
          if (pair.size() != 2 || pair[0] == 0 || pair[1] == 0) throw ParseError(what + ": malformed frame source");
          m.sources.push_back({pair[0] - 1, pair[1] - 1});
        }
      }
      tpl.metaframes.push_back(std::move(m));
    }
    templates.push_back(std::move(tpl));
  }
  SuperTemplate model(std::move(templates));
  if (doc.contains("order") && doc["order"].get<std::vector<Label>>() != model.order()) {
    throw InvariantError(what + ": \"order\" disagrees with the template list");
  }
  return model;
}

inline SuperTemplate read_model(const fs::path& path) {
  try {
    return model_from_json(parse_json(read_text(path), path.string()), path.string());
  } catch (const Json::exception& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_model(const SuperTemplate& model, const fs::path& path) { write_atomic(path, dump(model_to_json(model))); }

// ---------------------------------------------------------------- dictionary

inline Json dictionary_to_json(const Dictionary& dict) {
  Json words = Json::array();
  for (Eigen::Index k = 0; k < dict.words.cols(); ++k) {
    Json w = Json::array();
    for (Eigen::Index i = 0; i < dict.words.rows(); ++i) w.push_back(dict.words(i, k));
    words.push_back(std::move(w));
  }
  Json idf = Json::array();
  for (Eigen::Index k = 0; k < dict.idf.size(); ++k) idf.push_back(dict.idf(k));
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["K"] = dict.size();
  doc["dim"] = dict.dim();
  doc["words"] = std::move(words);
  doc["idf"] = std::move(idf);
  return doc;
}

inline Dictionary dictionary_from_json(const Json& doc, const std::string& what) {
  check_version(doc, what);
  const auto k = field<Index>(doc, "K", what);
  const auto dim = field<Index>(doc, "dim", what);
  const auto words = field<std::vector<std::vector<double>>>(doc, "words", what);
  const auto idf = field<std::vector<double>>(doc, "idf", what);
  if (words.size() != k || idf.size() != k) throw ParseError(what + ": K does not match words/idf");
  Dictionary dict;
  dict.words.resize(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(k));
  dict.idf.resize(static_cast<Eigen::Index>(k));
  for (Index w = 0; w < k; ++w) {
    if (words[w].size() != dim) throw DimensionError(what + ": word " + std::to_string(w + 1) + " has the wrong dimension");
    for (Index i = 0; i < dim; ++i) dict.words(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(w)) = words[w][i];
    dict.idf(static_cast<Eigen::Index>(w)) = idf[w];
  }
  dict.validate();
  return dict;
}

inline Dictionary read_dictionary(const fs::path& path) {
  return dictionary_from_json(parse_json(read_text(path), path.string()), path.string());
}

inline void write_dictionary(const Dictionary& dict, const fs::path& path) {
  write_atomic(path, dump(dictionary_to_json(dict)));
}

// ---------------------------------------------------------------- keypoints

inline std::string keypoints_to_jsonl(const KeypointStream& stream) {
  Json header;
  header["format_version"] = kFormatVersion;
  header["video_length"] = stream.video_length;
  header["dim"] = stream.dim;
  std::string out = header.dump() + "\n";
  for (const auto& p : stream.points) {
    Json line;
    line["t"] = p.frame + 1;
    Json desc = Json::array();
    for (Eigen::Index i = 0; i < p.descriptor.size(); ++i) desc.push_back(p.descriptor(i));
    line["desc"] = std::move(desc);
    out += line.dump() + "\n";
  }
  return out;
}

inline KeypointStream keypoints_from_jsonl(std::string_view text, const std::string& what) {
  const auto lines = data_lines(text);
  if (lines.empty()) throw ParseError(what + ": missing header line");
  KeypointStream stream;
  bool header = true;
  for (const auto& [row, line] : lines) {
    Json obj;
    try {
      obj = Json::parse(line);
    } catch (const Json::parse_error&) {
      throw ParseError(what + ": malformed JSON line", row);
    }
    try {
      if (header) {
        check_version(obj, what);
        stream.video_length = field<Index>(obj, "video_length", what);
        stream.dim = field<Index>(obj, "dim", what);
        header = false;
        continue;
      }
      const auto t = field<long long>(obj, "t", what);
      const auto desc = field<std::vector<double>>(obj, "desc", what);
      if (t < 1) throw ParseError(what + ": frame index must be >= 1");
      Keypoint p;
      p.frame = static_cast<Index>(t - 1);
      p.descriptor = Eigen::Map<const Eigen::VectorXd>(desc.data(), static_cast<Eigen::Index>(desc.size()));
      stream.points.push_back(std::move(p));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), row);
    }
  }
  stream.validate();
  return stream;
}

inline KeypointStream read_keypoints(const fs::path& path) { return keypoints_from_jsonl(read_text(path), path.string()); }

inline void write_keypoints(const KeypointStream& stream, const fs::path& path) {
  write_atomic(path, keypoints_to_jsonl(stream));
}

// ---------------------------------------------------------------- annotations

struct Annotation {
  std::string series_path;
  Segment segment;  // 0-based
};

/// Rows "series_path,begin,end,label" (1-based, inclusive). A header row is allowed.
inline std::vector<Annotation> parse_annotations(std::string_view text) {
  std::vector<Annotation> out;
  bool first = true;
  for (const auto& [row, line] : data_lines(text)) {
    const auto cells = split(line, ',');
    if (first && !cells.empty() && cells[0] == "series_path") {
      first = false;
      continue;
    }
    first = false;
    if (cells.size() != 4) throw ParseError("annotation rows need 4 columns", row);
    const auto begin = parse_integer(cells[1], row);
    const auto end = parse_integer(cells[2], row);
    if (begin < 1 || end < begin) throw ParseError("bad annotation interval", row);
    out.push_back({std::string(cells[0]),
                   {static_cast<Index>(begin - 1), static_cast<Index>(end - 1), static_cast<Label>(parse_integer(cells[3], row))}});
  }
  return out;
}

inline std::vector<Annotation> read_annotations(const fs::path& path) {
  try {
    return parse_annotations(read_text(path));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

/// Groups annotations by series, in first-appearance order, as segmentations.
inline std::vector<std::pair<std::string, Segmentation>> group_annotations(const std::vector<Annotation>& rows) {
  std::vector<std::pair<std::string, std::vector<Segment>>> groups;
  std::map<std::string, Index> where;
  for (const auto& a : rows) {
    const auto [it, fresh] = where.emplace(a.series_path, groups.size());
    if (fresh) groups.push_back({a.series_path, {}});
    groups[it->second].second.push_back(a.segment);
  }
  std::vector<std::pair<std::string, Segmentation>> out;
  for (auto& [path, segs] : groups) {
    std::sort(segs.begin(), segs.end(), [](const Segment& a, const Segment& b) { return a.begin < b.begin; });
    out.emplace_back(path, Segmentation(std::move(segs)));
  }
  return out;
}

inline std::string annotations_to_csv(const std::vector<Annotation>& rows) {
  std::string out = "# format_version=" + std::to_string(kFormatVersion) + "\nseries_path,begin,end,label\n";
  for (const auto& a : rows) {
    out += a.series_path + "," + std::to_string(a.segment.begin + 1) + "," + std::to_string(a.segment.end + 1) + "," +
           std::to_string(a.segment.label) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------- aliases

inline LabelAlias alias_from_json(const Json& doc, const std::string& what) {
  check_version(doc, what);
  if (!doc.contains("alias") || !doc["alias"].is_object()) throw ParseError(what + ": missing \"alias\" object");
  LabelAlias alias;
  for (const auto& [key, value] : doc["alias"].items()) {
    if (!value.is_number_integer()) throw ParseError(what + ": alias target for " + key + " must be an integer");
    alias[static_cast<Label>(parse_integer(key, 0))] = value.get<Label>();
  }
  return alias;
}

inline Json alias_to_json(const LabelAlias& alias) {
  Json map = Json::object();
  for (const auto& [from, to] : alias) map[std::to_string(from)] = to;
  Json doc;
  doc["format_version"] = kFormatVersion;
  doc["alias"] = std::move(map);
  return doc;
}

inline LabelAlias read_alias(const fs::path& path) {
  return alias_from_json(parse_json(read_text(path), path.string()), path.string());
}

// ---------------------------------------------------------------- grid dump

/// Row-major float32 accumulated costs plus a JSON sidecar `<path>.json`.
inline void write_grid(const OnePassResult& result, const SuperTemplate& model, const fs::path& path) {
  if (result.grid.empty()) throw InvariantError("no grid was kept for this decode");
  std::string bytes(result.grid.size() * sizeof(float), '\0');
  std::memcpy(bytes.data(), result.grid.data(), bytes.size());
  write_atomic(path, bytes);

  Json columns = Json::array();
  for (Index l = 0; l < model.size(); ++l) {
    columns.push_back(Json{{"label", model[l].label}, {"first_column", model.offset(l) + 1}, {"length", model[l].length()}});
  }
  Json side;
  side["format_version"] = kFormatVersion;
  side["rows"] = result.grid_rows;
  side["cols"] = result.grid_cols;
  side["dtype"] = "float32";
  side["layout"] = "row-major";
  side["templates"] = std::move(columns);
  fs::path meta = path;
  meta += ".json";
  write_atomic(meta, dump(side));
}

}  // namespace framewarp::io
