#include "playseg/config.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"

namespace playseg {
namespace {

using nlohmann::json;

/// Reads fields of one object and rejects keys nobody asked for.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }
  ~Section() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!used_.contains(k)) throw ConfigError("unknown config key " + path_ + "." + k);
    }
  }
  Section(const Section&) = delete;
  Section& operator=(const Section&) = delete;

  template <class T>
  void read(const char* key, T& out) {
    used_.insert(key);
    if (!j_.contains(key)) return;
    try {
      out = j_.at(key).get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("invalid value for " + path_ + "." + key + ": " + e.what());
    }
  }
  const json* child(const char* key) {
    used_.insert(key);
    return j_.contains(key) ? &j_.at(key) : nullptr;
  }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

json data_json(const ExperimentConfig& c) {
  const auto& d = c.data;
  return {{"width", d.play.env.width},
          {"height", d.play.env.height},
          {"num_distractors", d.play.env.num_distractors},
          {"num_tasks", d.play.num_tasks},
          {"max_layout_attempts", d.play.max_layout_attempts},
          {"annotated_records", d.num_annotated_records},
          {"unannotated_records", d.num_unannotated_records},
          {"validation_records", d.num_validation_records},
          {"seed", d.seed}};
}

json scorer_json(const ExperimentConfig& c) {
  const auto& s = c.scorer;
  return {{"hidden", s.hidden},
          {"learning_rate", s.learning_rate},
          {"epochs", s.epochs},
          {"batch_size", s.batch_size},
          {"validation_fraction", s.validation_fraction},
          {"seed", s.seed},
          {"t_min", s.negatives.t_min},
          {"t_max", s.negatives.t_max},
          {"negatives_per_form", s.negatives.negatives_per_form}};
}

json segmenter_json(const ExperimentConfig& c) {
  const auto& s = c.segmenter;
  return {{"window", s.window},
          {"min_length", s.band.min_length},
          {"max_length", s.band.max_length},
          {"advance_threshold", s.advance_threshold},
          {"stall_advance", s.stall_advance}};
}

json crop_json(const ExperimentConfig& c) {
  const auto& m = c.crop.model;
  return {{"window", m.window},
          {"hidden", m.hidden},
          {"learning_rate", m.learning_rate},
          {"epochs", m.epochs},
          {"batch_windows", m.batch_windows},
          {"windows_per_segment", m.windows_per_segment},
          {"validation_fraction", m.validation_fraction},
          {"seed", m.seed},
          {"distance_weight", m.distance_weight},
          {"min_length", c.crop.rule.min_length},
          {"majority", c.crop.rule.majority}};
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["data"] = data_json(c);
  j["features"] = {{"length_scale", c.length_scale}};
  j["starting_split"] = std::string(split_tag_name(c.starting_split));
  j["scorer"] = scorer_json(c);
  j["segmenter"] = segmenter_json(c);
  j["crop_models"] = crop_json(c);
  j["extraction"] = {{"draws_per_trajectory", c.extraction.draws_per_trajectory},
                     {"seed", c.extraction.seed},
                     {"tolerances", c.extraction.tolerances}};
  j["augment"] = {{"confidence_filter", c.augment.confidence_filter},
                  {"target_accuracy", c.augment.target_accuracy},
                  {"seed", c.augment.seed}};
  j["policy"] = {{"hidden", c.policy.bc.hidden},
                 {"learning_rate", c.policy.bc.learning_rate},
                 {"updates", c.policy.bc.updates},
                 {"batch_size", c.policy.bc.batch_size},
                 {"seeds", c.policy.seeds},
                 {"conditions", c.policy.conditions}};
  j["evaluation"] = {{"episodes", c.evaluation.episodes},
                     {"horizon", c.evaluation.horizon},
                     {"seed", c.evaluation.seed},
                     {"sample_actions", c.evaluation.sample_actions}};
  j["workers"] = c.workers;
  return j;
}

ExperimentConfig from_json(const json& root) {
  ExperimentConfig c = default_experiment_config();
  Section top(root, "config");
  if (const json* d = top.child("data")) {
    Section s(*d, "data");
    s.read("width", c.data.play.env.width);
    s.read("height", c.data.play.env.height);
    s.read("num_distractors", c.data.play.env.num_distractors);
    s.read("num_tasks", c.data.play.num_tasks);
    s.read("max_layout_attempts", c.data.play.max_layout_attempts);
    s.read("annotated_records", c.data.num_annotated_records);
    s.read("unannotated_records", c.data.num_unannotated_records);
    s.read("validation_records", c.data.num_validation_records);
    s.read("seed", c.data.seed);
  }
  if (const json* f = top.child("features")) {
    Section s(*f, "features");
    s.read("length_scale", c.length_scale);
  }
  std::string split = std::string(split_tag_name(c.starting_split));
  top.read("starting_split", split);
  try {
    c.starting_split = split_tag_from_name(split);
  } catch (const Error&) {
    throw ConfigError("unknown starting_split '" + split + "'");
  }
  if (const json* sc = top.child("scorer")) {
    Section s(*sc, "scorer");
    s.read("hidden", c.scorer.hidden);
    s.read("learning_rate", c.scorer.learning_rate);
    s.read("epochs", c.scorer.epochs);
    s.read("batch_size", c.scorer.batch_size);
    s.read("validation_fraction", c.scorer.validation_fraction);
    s.read("seed", c.scorer.seed);
    s.read("t_min", c.scorer.negatives.t_min);
    s.read("t_max", c.scorer.negatives.t_max);
    s.read("negatives_per_form", c.scorer.negatives.negatives_per_form);
  }
  if (const json* sg = top.child("segmenter")) {
    Section s(*sg, "segmenter");
    s.read("window", c.segmenter.window);
    s.read("min_length", c.segmenter.band.min_length);
    s.read("max_length", c.segmenter.band.max_length);
    s.read("advance_threshold", c.segmenter.advance_threshold);
    s.read("stall_advance", c.segmenter.stall_advance);
  }
  if (const json* cm = top.child("crop_models")) {
    Section s(*cm, "crop_models");
    auto& m = c.crop.model;
    s.read("window", m.window);
    s.read("hidden", m.hidden);
    s.read("learning_rate", m.learning_rate);
    s.read("epochs", m.epochs);
    s.read("batch_windows", m.batch_windows);
    s.read("windows_per_segment", m.windows_per_segment);
    s.read("validation_fraction", m.validation_fraction);
    s.read("seed", m.seed);
    s.read("distance_weight", m.distance_weight);
    s.read("min_length", c.crop.rule.min_length);
    s.read("majority", c.crop.rule.majority);
  }
  if (const json* ex = top.child("extraction")) {
    Section s(*ex, "extraction");
    s.read("draws_per_trajectory", c.extraction.draws_per_trajectory);
    s.read("seed", c.extraction.seed);
    s.read("tolerances", c.extraction.tolerances);
  }
  if (const json* au = top.child("augment")) {
    Section s(*au, "augment");
    s.read("confidence_filter", c.augment.confidence_filter);
    s.read("target_accuracy", c.augment.target_accuracy);
    s.read("seed", c.augment.seed);
  }
  if (const json* po = top.child("policy")) {
    Section s(*po, "policy");
    s.read("hidden", c.policy.bc.hidden);
    s.read("learning_rate", c.policy.bc.learning_rate);
    s.read("updates", c.policy.bc.updates);
    s.read("batch_size", c.policy.bc.batch_size);
    s.read("seeds", c.policy.seeds);
    s.read("conditions", c.policy.conditions);
  }
  if (const json* ev = top.child("evaluation")) {
    Section s(*ev, "evaluation");
    s.read("episodes", c.evaluation.episodes);
    s.read("horizon", c.evaluation.horizon);
    s.read("seed", c.evaluation.seed);
    s.read("sample_actions", c.evaluation.sample_actions);
  }
  top.read("workers", c.workers);
  c.evaluation.env = c.data.play.env;
  return c;
}

}  // namespace

const std::vector<std::string>& known_conditions() {
  static const std::vector<std::string> names = {
      "gt-100", "gt-50", "gt-25", "gt-10", "gt-relabel", "ps", "random", "framecrop", "boundarycrop"};
  return names;
}

FeatureSchema ExperimentConfig::feature_schema() const {
  FeatureSchema s;
  s.width = data.play.env.width;
  s.height = data.play.env.height;
  s.max_objects = data.play.env.num_objects();
  s.length_scale = length_scale;
  return s;
}

void ExperimentConfig::validate() const {
  data.play.env.validate();
  if (data.play.num_tasks < 1) throw ConfigError("data.num_tasks must be at least 1");
  if (data.num_annotated_records < 1 || data.num_unannotated_records < 1 ||
      data.num_validation_records < 1) {
    throw ConfigError("every data pool needs at least one record");
  }
  if (starting_split == SplitTag::kValidation || starting_split == SplitTag::kUnannotated) {
    throw ConfigError("starting_split must be one of full, 50, 25, 10");
  }
  feature_schema().validate();
  if (scorer.negatives.t_min < 1 ||
      (scorer.negatives.t_max > 0 && scorer.negatives.t_max < scorer.negatives.t_min) ||
      scorer.negatives.negatives_per_form < 1) {
    throw ConfigError("scorer negatives require 1 <= t_min <= t_max");
  }
  if (scorer.hidden < 1 || scorer.epochs < 1 || scorer.batch_size < 1 ||
      !(scorer.learning_rate > 0.0) || scorer.validation_fraction <= 0.0 ||
      scorer.validation_fraction >= 1.0) {
    throw ConfigError("invalid scorer settings");
  }
  if (segmenter.band.min_length < 1) throw ConfigError("segmenter.min_length must be positive");
  if (segmenter.band.max_length > 0 && segmenter.band.max_length < segmenter.band.min_length) {
    throw ConfigError("segmenter.max_length must not be below min_length");
  }
  if (segmenter.window > 0 && segmenter.band.max_length > segmenter.window) {
    throw ConfigError("segmenter.max_length must not exceed the window");
  }
  if (!(segmenter.advance_threshold >= 0.0 && segmenter.advance_threshold <= 1.0)) {
    throw ConfigError("segmenter.advance_threshold must lie in [0, 1]");
  }
  crop.model.validate();
  if (crop.rule.min_length < 1) throw ConfigError("crop_models.min_length must be positive");
  if (extraction.draws_per_trajectory < 1) throw ConfigError("extraction budget must be positive");
  for (int t : extraction.tolerances) {
    if (t < 0) throw ConfigError("boundary tolerances must be non-negative");
  }
  if (!(augment.target_accuracy > 0.0 && augment.target_accuracy <= 1.0)) {
    throw ConfigError("augment.target_accuracy must lie in (0, 1]");
  }
  policy.bc.validate();
  if (policy.seeds.empty()) throw ConfigError("policy.seeds must not be empty");
  std::set<std::string> seen;
  for (const auto& c : policy.conditions) {
    if (std::find(known_conditions().begin(), known_conditions().end(), c) ==
        known_conditions().end()) {
      throw ConfigError("unknown policy condition '" + c + "'");
    }
    if (!seen.insert(c).second) throw ConfigError("duplicate policy condition '" + c + "'");
  }
  if (evaluation.episodes < 1 || evaluation.horizon < 1) {
    throw ConfigError("evaluation needs positive episodes and horizon");
  }
  if (workers < 1) throw ConfigError("workers must be positive");
}

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  c.policy.conditions = known_conditions();
  c.evaluation.env = c.data.play.env;
  return c;
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text, nullptr, true, true);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  ExperimentConfig c = from_json(j);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& file) {
  if (!std::filesystem::exists(file)) throw ConfigError("config file not found: " + file.string());
  return parse_experiment_config(read_text_file(file));
}

std::string dump_experiment_config(const ExperimentConfig& cfg) { return to_json(cfg).dump(2) + "\n"; }

std::string config_section(const ExperimentConfig& cfg, const std::string& section) {
  const json j = to_json(cfg);
  if (!j.contains(section)) throw ConfigError("unknown config section " + section);
  return j.at(section).dump();
}

SegmenterConfig resolve_segmenter(const SegmenterConfig& cfg, const Dataset& starting_split) {
  SegmenterConfig r = cfg;
  if (r.band.max_length <= 0) {
    r.band.max_length = std::max(r.band.min_length, LengthRange::of(starting_split).max);
  }
  if (r.window <= 0) r.window = 2 * r.band.max_length;
  r.validate();
  return r;
}

}  // namespace playseg
