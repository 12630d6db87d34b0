// framewarp command-line tool: dictionary, features, training, recognition,
// segmentation, evaluation, synthetic data and timing.

#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "framewarp/bench.hpp"
#include "framewarp/eval.hpp"
#include "framewarp/features.hpp"
#include "framewarp/io.hpp"
#include "framewarp/isolated.hpp"
#include "framewarp/one_pass.hpp"
#include "framewarp/synth.hpp"
#include "framewarp/templates.hpp"
#include "framewarp/two_pass.hpp"

namespace fs = std::filesystem;
using namespace framewarp;
using io::Json;

namespace {

// ---------------------------------------------------------------- config file

/// JSON config: top-level keys set global options or, failing that, options
/// of the subcommand being run; an object under a subcommand name targets
/// that subcommand. Keys may use '_' or '-'.
class JsonConfig : public CLI::Config {
 public:
  std::set<std::string> root_options;
  std::set<std::string> subcommands;
  std::string active;

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return {}; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    std::stringstream buffer;
    buffer << input.rdbuf();
    Json doc;
    try {
      doc = Json::parse(buffer.str());
    } catch (const Json::parse_error& e) {
      throw CLI::ConfigError("config: malformed JSON (at row " +
                             std::to_string(io::line_of(buffer.str(), e.byte)) + ")");
    }
    if (!doc.is_object()) throw CLI::ConfigError("config: expected a JSON object");
    if (doc.contains("format_version") && doc["format_version"] != io::kFormatVersion) {
      throw CLI::ConfigError("config: unsupported format_version " + doc["format_version"].dump());
    }
    std::vector<CLI::ConfigItem> items;
    for (const auto& [key, value] : doc.items()) {
      if (key == "format_version") continue;
      const std::string name = dashed(key);
      if (value.is_object()) {
        if (!subcommands.count(name)) throw CLI::ConfigError("config: unknown section \"" + key + "\"");
        for (const auto& [inner, v] : value.items()) items.push_back(item({name}, dashed(inner), v));
      } else if (root_options.count(name) || active.empty()) {
        items.push_back(item({}, name, value));
      } else {
        items.push_back(item({active}, name, value));
      }
    }
    return items;
  }

 private:
  static std::string dashed(std::string s) {
    for (auto& c : s) {
      if (c == '_') c = '-';
    }
    return s;
  }

  static std::string scalar(const Json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    return v.dump();
  }

  static CLI::ConfigItem item(std::vector<std::string> parents, std::string name, const Json& v) {
    CLI::ConfigItem out;
    out.parents = std::move(parents);
    out.name = std::move(name);
    if (v.is_array()) {
      for (const auto& e : v) out.inputs.push_back(scalar(e));
    } else {
      out.inputs.push_back(scalar(v));
    }
    return out;
  }
};

// ---------------------------------------------------------------- options

/// Remembers every bound variable so the effective configuration can be echoed.
class Registry {
 public:
  template <class T>
  CLI::Option* option(CLI::App* app, const std::string& flags, T& var, const std::string& help) {
    auto* opt = app->add_option(flags, var, help)->capture_default_str();
    remember(app, opt, var);
    return opt;
  }

  CLI::Option* flag(CLI::App* app, const std::string& flags, bool& var, const std::string& help) {
    auto* opt = app->add_flag(flags, var, help);
    remember(app, opt, var);
    return opt;
  }

  Json describe(const CLI::App* app) const {
    Json out = Json::object();
    const auto it = getters_.find(app);
    if (it == getters_.end()) return out;
    for (const auto& [name, get] : it->second) out[name] = get();
    return out;
  }

 private:
  template <class T>
  void remember(const CLI::App* app, const CLI::Option* opt, T& var) {
    std::string name = opt->get_lnames().front();
    for (auto& c : name) {
      if (c == '-') c = '_';
    }
    getters_[app].emplace_back(name, [&var] { return Json(var); });
  }

  std::map<const CLI::App*, std::vector<std::pair<std::string, std::function<Json()>>>> getters_;
};

struct Global {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string log_level = "info";
  std::string out;
  bool verbose = false;
};

struct Distance {
  double gamma = DistanceParams{}.gamma;
  Index max_support = DistanceParams{}.max_support;
  Index w_meta = DistanceParams{}.w_meta;
  Index null_max_frames = DistanceParams{}.null_max_frames;

  DistanceParams params() const {
    DistanceParams p;
    p.gamma = gamma;
    p.max_support = max_support;
    p.w_meta = w_meta;
    p.null_max_frames = null_max_frames;
    p.validate();
    return p;
  }
};

void add_distance(Registry& reg, CLI::App* app, Distance& d) {
  reg.option(app, "--gamma", d.gamma, "OMP residual tolerance")->check(CLI::NonNegativeNumber);
  reg.option(app, "--max-support", d.max_support, "OMP support limit")->check(CLI::PositiveNumber);
  reg.option(app, "--w-meta", d.w_meta, "metaframe pooling window (odd)")->check(CLI::PositiveNumber);
  reg.option(app, "--null-max-frames", d.null_max_frames, "subsample larger metaframes to this many frames")
      ->check(CLI::PositiveNumber);
}

struct WindowArgs {
  Index q = 10;
  Index cap = 0;
  Index fixed = 0;
  bool idf = true;

  WindowPolicy policy() const { return fixed > 0 ? WindowPolicy::fixed(fixed) : WindowPolicy::adaptive(q, cap); }
};

void add_window(Registry& reg, CLI::App* app, WindowArgs& w) {
  reg.option(app, "--Q", w.q, "keypoints per adaptive window")->check(CLI::PositiveNumber);
  reg.option(app, "--cap", w.cap, "largest adaptive half-width, 0 = video length");
  reg.option(app, "--fixed-window", w.fixed, "fixed window of W frames instead of the adaptive one");
  reg.flag(app, "--idf,!--no-idf", w.idf, "IDF weighting (default on)");
}

// ---------------------------------------------------------------- helpers

void emit(const Global& g, const std::string& text) {
  if (g.out.empty()) {
    std::cout << text;
    std::cout.flush();
  } else {
    io::write_atomic(g.out, text);
    spdlog::info("wrote {}", g.out);
  }
}

TimeSeries load_series(const fs::path& path) {
  auto read = io::read_time_series(path);
  const Index shown = std::min<Index>(read.renormalized.size(), 5);
  for (Index i = 0; i < shown; ++i) {
    spdlog::warn("{}: frame {} had norm {}, renormalized", path.string(), read.renormalized[i].frame + 1,
                 read.renormalized[i].norm);
  }
  if (read.renormalized.size() > shown) {
    spdlog::warn("{}: {} more frames renormalized", path.string(), read.renormalized.size() - shown);
  }
  return std::move(read.series);
}

Json nan_to_null(double v) { return std::isnan(v) ? Json(nullptr) : Json(v); }

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : base / path;
}

// ---------------------------------------------------------------- commands

struct BuildDict {
  std::vector<std::string> keypoints;
  Index k = 100;
  Index max_iterations = 100;
  WindowArgs window;
};

void run_build_dict(const Global& g, const BuildDict& o) {
  std::vector<KeypointStream> streams;
  for (const auto& p : o.keypoints) streams.push_back(io::read_keypoints(p));
  KMeansOptions km;
  km.max_iterations = o.max_iterations;
  auto dict = build_dictionary(streams, o.k, g.seed, km);
  spdlog::info("dictionary: {} words over {} streams", dict.size(), streams.size());
  if (o.window.idf) {
    std::vector<Eigen::MatrixXd> counts;
    for (const auto& s : streams) counts.push_back(window_counts(s, dict, o.window.policy(), g.threads));
    dict.idf = compute_idf(counts);
  }
  emit(g, io::dump(io::dictionary_to_json(dict)));
}

struct Featurize {
  std::string dict;
  std::string keypoints;
  std::string format;
  WindowArgs window;
};

void run_featurize(const Global& g, const Featurize& o) {
  const auto dict = io::read_dictionary(o.dict);
  const auto stream = io::read_keypoints(o.keypoints);
  const auto z = featurize(stream, dict, o.window.policy(), o.window.idf, g.threads);
  Index empty = 0;
  for (const auto& f : z) empty += f.empty();
  if (empty) spdlog::info("{} of {} frames have no keypoints in their window", empty, z.length());
  io::SeriesFormat fmt = io::SeriesFormat::csv;
  if (o.format == "json" || (o.format.empty() && !g.out.empty() && io::format_of(g.out) == io::SeriesFormat::json)) {
    fmt = io::SeriesFormat::json;
  }
  emit(g, fmt == io::SeriesFormat::json ? io::dump(io::series_to_json(z)) : io::series_to_csv(z));
}

struct Train {
  std::string examples;
  std::vector<Label> pattern_labels;
  bool no_null = false;
  Index null_max_frames = 512;
};

TrainingSet training_from_dir(const fs::path& dir) {
  TrainingSet data;
  std::vector<fs::path> classes;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_directory()) classes.push_back(e.path());
  }
  std::sort(classes.begin(), classes.end());
  for (const auto& c : classes) {
    const auto name = c.filename().string();
    Label label = 0;
    const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), label);
    if (ec != std::errc() || ptr != name.data() + name.size() || label < 0) {
      throw InvariantError(c.string() + ": class directories must be named by a non-negative integer label");
    }
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(c)) {
      const auto ext = e.path().extension();
      if (e.is_regular_file() && (ext == ".csv" || ext == ".json")) files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& f : files) {
      auto z = load_series(f);
      if (label == kNullLabel) {
        data.background.insert(data.background.end(), z.begin(), z.end());
      } else {
        data.examples[label].push_back(std::move(z));
      }
    }
  }
  return data;
}

TrainingSet training_from_annotations(const fs::path& file) {
  TrainingSet data;
  for (const auto& [series, seg] : io::group_annotations(io::read_annotations(file))) {
    data.add_annotated(load_series(resolve(file.parent_path(), series)), seg);
  }
  return data;
}

void run_train(const Global& g, const Train& o) {
  const fs::path src(o.examples);
  const auto data = fs::is_directory(src) ? training_from_dir(src) : training_from_annotations(src);
  TrainOptions opts;
  opts.pattern_labels.insert(o.pattern_labels.begin(), o.pattern_labels.end());
  opts.with_null = !o.no_null;
  opts.null_max_frames = o.null_max_frames;
  opts.seed = g.seed;
  opts.threads = g.threads;
  const auto model = train_model(data, opts);
  for (const auto& tpl : model.templates()) {
    spdlog::info("template {}: {} metaframes{}", tpl.label, tpl.length(), tpl.is_null ? " (null)" : "");
  }
  emit(g, io::dump(io::model_to_json(model)));
}

struct Recognize {
  std::string model;
  std::string input;
  Distance distance;
};

void run_recognize(const Global& g, const Recognize& o) {
  const auto model = io::read_model(o.model);
  const auto z = load_series(o.input);
  const auto r = classify_isolated(z, model, o.distance.params(), g.threads);
  Json scores = Json::array();
  for (const auto& [label, score] : r.scores) scores.push_back(Json{{"label", label}, {"score", score}});
  Json doc;
  doc["format_version"] = io::kFormatVersion;
  doc["label"] = r.label;
  doc["scores"] = std::move(scores);
  emit(g, io::dump(doc));
}

struct SegmentArgs {
  std::string mode = "one-pass";
  std::string model;
  std::string input;
  Distance distance;
  Index t_min = kDefaultMinGap;
  bool no_length_constraints = false;
  std::string gate = "exact";
  std::string alias;
  std::string dump_grid;
};

void run_segment(const Global& g, const SegmentArgs& o) {
  const auto model = io::read_model(o.model);
  const auto z = load_series(o.input);
  const auto params = o.distance.params();
  Segmentation seg;
  Json extra;
  if (o.mode == "one-pass") {
    OnePassOptions opts;
    opts.enforce_lengths = !o.no_length_constraints;
    opts.gate = o.gate == "per-cell" ? LengthGate::per_cell : LengthGate::exact;
    opts.keep_grid = !o.dump_grid.empty();
    const auto r = op_dfw_segment(z, model, params, opts, g.threads);
    if (r.relaxed) spdlog::warn("no segmentation satisfies the length bounds; decoded without them");
    if (!o.dump_grid.empty()) io::write_grid(r, model, o.dump_grid);
    seg = r.segmentation;
    extra["score"] = r.score;
    extra["accumulated"] = r.accumulated;
    extra["relaxed"] = r.relaxed;
  } else {
    if (!o.dump_grid.empty()) spdlog::warn("--dump-grid only applies to one-pass mode");
    const auto r = tp_dfw_segment(z, model, params, o.t_min, g.threads);
    seg = r.segmentation;
    extra["score"] = r.score;
    extra["subsequences"] = r.evaluated_subsequences;
  }
  if (!o.alias.empty()) seg = alias_segmentation(seg, io::read_alias(o.alias));
  spdlog::info("{} segments over {} frames", seg.size(), z.length());

  Json doc = io::segmentation_to_json(seg);
  doc["input"] = o.input;
  doc["mode"] = o.mode;
  for (const auto& [k, v] : extra.items()) doc[k] = v;
  emit(g, io::dump(doc));
}

struct Eval {
  std::vector<std::string> pred;
  std::string gt;
  std::string alias;
};

void run_eval(const Global& g, const Eval& o) {
  const auto truth = io::group_annotations(io::read_annotations(o.gt));
  LabelAlias alias;
  if (!o.alias.empty()) alias = io::read_alias(o.alias);

  LabelTrack all_pred, all_truth;
  double mae_sum = 0.0;
  std::set<std::string> used;
  for (Index i = 0; i < o.pred.size(); ++i) {
    const auto doc = io::parse_json(io::read_text(o.pred[i]), o.pred[i]);
    auto seg = io::segmentation_from_json(doc, o.pred[i]);
    if (!alias.empty()) seg = alias_segmentation(seg, alias);
    // Match by input file name when the prediction records it, else by position.
    const std::pair<std::string, Segmentation>* match = nullptr;
    if (doc.contains("input") && doc["input"].is_string()) {
      const auto name = fs::path(doc["input"].get<std::string>()).filename();
      for (const auto& t : truth) {
        if (fs::path(t.first).filename() == name) match = &t;
      }
    }
    if (!match) {
      if (o.pred.size() != truth.size()) {
        throw InvariantError(o.pred[i] + ": cannot match to a ground-truth series");
      }
      match = &truth[i];
    }
    if (!used.insert(match->first).second) throw InvariantError(match->first + " is matched twice");
    if (match->second.length() != seg.length()) {
      throw InvariantError(o.pred[i] + " covers " + std::to_string(seg.length()) + " frames, ground truth " +
                           std::to_string(match->second.length()));
    }
    const auto p = seg.frame_labels();
    const auto t = match->second.frame_labels();
    all_pred.insert(all_pred.end(), p.begin(), p.end());
    all_truth.insert(all_truth.end(), t.begin(), t.end());
    mae_sum += boundary_mae(seg, match->second);
  }
  auto report = frame_accuracy(all_pred, all_truth);
  report.boundary_mae = o.pred.empty() ? 0.0 : mae_sum / static_cast<double>(o.pred.size());

  Json per_class = Json::array();
  for (Index i = 0; i < report.labels.size(); ++i) {
    per_class.push_back(Json{{"label", report.labels[i]}, {"accuracy", nan_to_null(report.per_class_accuracy[i])}});
  }
  Json doc;
  doc["format_version"] = io::kFormatVersion;
  doc["frames"] = report.frames;
  doc["sequences"] = o.pred.size();
  doc["frame_accuracy"] = report.frame_accuracy;
  doc["boundary_mae"] = nan_to_null(report.boundary_mae);
  doc["labels"] = report.labels;
  doc["confusion"] = report.confusion;
  doc["per_class"] = std::move(per_class);
  spdlog::info("frame accuracy {:.2f}%", report.frame_accuracy);
  emit(g, io::dump(doc));
}

void add_synth(Registry& reg, CLI::App* app, SynthConfig& c) {
  reg.option(app, "--n-classes", c.n_classes, "action classes");
  reg.option(app, "--n-actors", c.n_actors, "actors");
  reg.option(app, "--sequences-per-actor", c.sequences_per_actor, "continuous sequences per actor");
  reg.option(app, "--min-actions", c.min_actions, "fewest actions per sequence");
  reg.option(app, "--max-actions", c.max_actions, "most actions per sequence");
  reg.option(app, "--mean-action-length", c.mean_action_length, "mean action length in frames");
  reg.option(app, "--length-jitter", c.length_jitter, "action length spread, half per actor, half per instance");
  reg.option(app, "--alignment-jitter", c.alignment_jitter, "per-actor nonlinear time warp strength");
  reg.option(app, "--signature-noise", c.signature_noise, "frame noise level");
  reg.option(app, "--words-per-class", c.words_per_class, "dictionary words per class");
  reg.option(app, "--null-words", c.null_words, "words reserved for null gaps");
  reg.option(app, "--null-gap-prob", c.null_gap_prob, "chance of a null gap before each action");
  reg.option(app, "--null-gap-length", c.null_gap_length, "mean null gap length, 0 = action length");
  reg.flag(app, "--periodic", c.periodic, "repeated motion patterns instead of one-shot actions");
  reg.option(app, "--pattern-length", c.pattern_length, "frames per pattern repetition");
  reg.option(app, "--min-repeats", c.min_repeats, "fewest repetitions");
  reg.option(app, "--max-repeats", c.max_repeats, "most repetitions");
  reg.flag(app, "--keypoints", c.keypoints, "also write raw keypoint streams");
  reg.option(app, "--keypoint-rate", c.keypoint_rate, "mean keypoints per frame");
  reg.option(app, "--descriptor-dim", c.descriptor_dim, "keypoint descriptor dimension");
  reg.option(app, "--descriptor-noise", c.descriptor_noise, "keypoint descriptor noise");
}

std::string annotation_csv(const std::vector<std::pair<std::string, const Segmentation*>>& rows) {
  std::vector<io::Annotation> out;
  for (const auto& [name, seg] : rows) {
    for (const auto& s : seg->segments()) out.push_back({name, s});
  }
  return io::annotations_to_csv(out);
}

void run_synth(const Global& g, SynthConfig cfg) {
  if (g.out.empty()) throw InvariantError("synth needs --out <directory>");
  cfg.seed = g.seed;
  const auto corpus = generate_corpus(cfg);
  const fs::path dir(g.out);
  fs::create_directories(dir);

  Json seqs = Json::array();
  std::vector<std::pair<std::string, const Segmentation*>> truth, instances;
  for (Index i = 0; i < corpus.sequences.size(); ++i) {
    const auto& s = corpus.sequences[i];
    char stem[32];
    std::snprintf(stem, sizeof stem, "seq_%03zu", i + 1);
    const std::string series = std::string(stem) + ".csv";
    io::write_time_series(s.series, dir / series);
    Json entry{{"series", series}, {"actor", s.actor + 1}, {"frames", s.series.length()}};
    if (cfg.keypoints) {
      const std::string kp = std::string(stem) + ".keypoints.jsonl";
      io::write_keypoints(s.keypoints, dir / kp);
      entry["keypoints"] = kp;
    }
    seqs.push_back(std::move(entry));
    truth.emplace_back(series, &s.truth);
    instances.emplace_back(series, &s.instances);
  }
  io::write_atomic(dir / "annotations.csv", annotation_csv(truth));
  io::write_atomic(dir / "instances.csv", annotation_csv(instances));
  if (!corpus.pattern_labels.empty()) {
    LabelAlias alias;
    for (Label l : corpus.pattern_labels) alias[l] = l;
    io::write_atomic(dir / "alias.json", io::dump(io::alias_to_json(alias)));
  }
  Json doc;
  doc["format_version"] = io::kFormatVersion;
  doc["dim"] = corpus.dim;
  doc["seed"] = cfg.seed;
  doc["pattern_labels"] = corpus.pattern_labels;
  doc["sequences"] = std::move(seqs);
  io::write_atomic(dir / "corpus.json", io::dump(doc));
  spdlog::info("wrote {} sequences to {}", corpus.sequences.size(), dir.string());
}

struct Bench {
  std::string model;
  std::vector<Index> lengths{200, 400, 800, 1600};
  Index repeats = 3;
  Index two_pass_max_length = 400;
  Index t_min = kDefaultMinGap;
  Distance distance;
};

void run_bench(const Global& g, const Bench& o) {
  const auto model = io::read_model(o.model);
  BenchOptions opts;
  opts.params = o.distance.params();
  opts.repeats = o.repeats;
  opts.two_pass_max_length = o.two_pass_max_length;
  opts.t_min_gap = o.t_min;
  opts.seed = g.seed;
  opts.threads = g.threads;
  const auto report = benchmark_scaling(model, o.lengths, opts);
  Json rows = Json::array();
  for (const auto& r : report.rows) {
    rows.push_back(Json{{"length", r.length},
                        {"seconds", r.seconds},
                        {"distance_evaluations", r.distance_evaluations},
                        {"expected_evaluations", r.expected_evaluations},
                        {"subsequences", r.subsequences},
                        {"expected_subsequences", r.expected_subsequences}});
    spdlog::info("T={} {:.4f}s", r.length, r.seconds);
  }
  Json doc;
  doc["format_version"] = io::kFormatVersion;
  doc["templates_length"] = model.total_length();
  doc["rows"] = std::move(rows);
  doc["fit"] = Json{{"slope", report.fit.slope}, {"intercept", report.fit.intercept}, {"r_squared", report.fit.r_squared}};
  emit(g, io::dump(doc));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"framewarp: template-based recognition and segmentation of vector time series"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();
  auto config = std::make_shared<JsonConfig>();
  app.config_formatter(config);
  app.set_config("--config", "", "JSON file with option values (flags win)");

  Registry reg;
  Global g;
  reg.option(&app, "--seed", g.seed, "random seed");
  reg.option(&app, "--threads", g.threads, "worker threads")->check(CLI::PositiveNumber);
  reg.option(&app, "--log-level", g.log_level, "trace, debug, info, warn, error, critical, off")
      ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}));
  reg.option(&app, "--out", g.out, "output file (directory for synth); standard output if empty");
  reg.flag(&app, "--verbose", g.verbose, "echo the effective configuration to standard error");

  BuildDict build_dict;
  auto* c_dict = app.add_subcommand("build-dict", "learn a visual dictionary from keypoint streams");
  reg.option(c_dict, "--keypoints", build_dict.keypoints, "keypoint JSON-lines files")->required();
  reg.option(c_dict, "--K", build_dict.k, "dictionary size")->check(CLI::Range(Index{2}, Index{1} << 20));
  reg.option(c_dict, "--max-iterations", build_dict.max_iterations, "k-means iteration limit");
  add_window(reg, c_dict, build_dict.window);

  Featurize feat;
  auto* c_feat = app.add_subcommand("featurize", "turn a keypoint stream into a bag-of-words series");
  reg.option(c_feat, "--dict", feat.dict, "dictionary JSON")->required();
  reg.option(c_feat, "--keypoints", feat.keypoints, "keypoint JSON-lines file")->required();
  reg.option(c_feat, "--format", feat.format, "csv or json (default from --out)")->check(CLI::IsMember({"", "csv", "json"}));
  add_window(reg, c_feat, feat.window);

  Train train;
  auto* c_train = app.add_subcommand("train", "learn class templates");
  reg.option(c_train, "--examples", train.examples, "directory of per-label subdirectories or annotation CSV")
      ->required();
  reg.option(c_train, "--pattern-labels", train.pattern_labels, "labels trained as repeatable patterns")
      ->delimiter(',');
  reg.flag(c_train, "--no-null", train.no_null, "skip the null template");
  reg.option(c_train, "--null-max-frames", train.null_max_frames, "background frames kept in the null template")
      ->check(CLI::PositiveNumber);

  Recognize rec;
  auto* c_rec = app.add_subcommand("recognize", "classify one pre-segmented series");
  reg.option(c_rec, "--model", rec.model, "model JSON")->required();
  reg.option(c_rec, "--input", rec.input, "series CSV or JSON")->required();
  add_distance(reg, c_rec, rec.distance);

  SegmentArgs seg;
  auto* c_seg = app.add_subcommand("segment", "recognize and segment a continuous series");
  reg.option(c_seg, "--mode", seg.mode, "one-pass or two-pass")->check(CLI::IsMember({"one-pass", "two-pass"}));
  reg.option(c_seg, "--model", seg.model, "model JSON")->required();
  reg.option(c_seg, "--input", seg.input, "series CSV or JSON")->required();
  add_distance(reg, c_seg, seg.distance);
  reg.option(c_seg, "--t-min", seg.t_min, "two-pass: pieces span at least t-min + 1 frames")->check(CLI::PositiveNumber);
  reg.flag(c_seg, "--no-length-constraints", seg.no_length_constraints, "ignore learned length bounds");
  reg.option(c_seg, "--length-gate", seg.gate, "exact or per-cell")->check(CLI::IsMember({"exact", "per-cell"}));
  reg.option(c_seg, "--alias", seg.alias, "label alias JSON applied to the output");
  reg.option(c_seg, "--dump-grid", seg.dump_grid, "write the accumulated cost grid (float32) here");

  Eval ev;
  auto* c_eval = app.add_subcommand("eval", "score segmentations against annotations");
  reg.option(c_eval, "--pred", ev.pred, "predicted segmentation JSON files")->required();
  reg.option(c_eval, "--gt", ev.gt, "annotation CSV")->required();
  reg.option(c_eval, "--alias", ev.alias, "label alias JSON applied to predictions");

  SynthConfig synth;
  auto* c_synth = app.add_subcommand("synth", "write a synthetic annotated corpus");
  add_synth(reg, c_synth, synth);

  Bench bench;
  auto* c_bench = app.add_subcommand("bench", "time one-pass decoding against series length");
  reg.option(c_bench, "--model", bench.model, "model JSON")->required();
  reg.option(c_bench, "--lengths", bench.lengths, "increasing series lengths")->delimiter(',');
  reg.option(c_bench, "--repeats", bench.repeats, "runs per length, fastest kept")->check(CLI::PositiveNumber);
  reg.option(c_bench, "--two-pass-max-length", bench.two_pass_max_length, "also count two-pass subsequences up to here");
  reg.option(c_bench, "--t-min", bench.t_min, "two-pass minimum gap")->check(CLI::PositiveNumber);
  add_distance(reg, c_bench, bench.distance);

  for (auto* sub : app.get_subcommands({})) {
    sub->fallthrough();
    config->subcommands.insert(sub->get_name());
  }
  for (const auto* opt : app.get_options()) {
    for (const auto& n : opt->get_lnames()) config->root_options.insert(n);
  }
  for (int i = 1; i < argc; ++i) {
    if (config->subcommands.count(argv[i])) {
      config->active = argv[i];
      break;
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto logger = spdlog::stderr_logger_mt("framewarp");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::from_str(g.log_level));

  CLI::App* active = app.get_subcommands().front();
  if (g.verbose) {
    Json echo = reg.describe(&app);
    echo[active->get_name()] = reg.describe(active);
    std::cerr << io::dump(echo);
  }

  try {
    const std::string name = active->get_name();
    if (name == "build-dict") run_build_dict(g, build_dict);
    else if (name == "featurize") run_featurize(g, feat);
    else if (name == "train") run_train(g, train);
    else if (name == "recognize") run_recognize(g, rec);
    else if (name == "segment") run_segment(g, seg);
    else if (name == "eval") run_eval(g, ev);
    else if (name == "synth") run_synth(g, synth);
    else if (name == "bench") run_bench(g, bench);
  } catch (const framewarp::Error& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 2;
  }
  return 0;
}
