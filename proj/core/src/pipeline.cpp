#include "playseg/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <json.hpp>

#include "playseg/augment.hpp"
#include "playseg/baselines.hpp"
#include "playseg/checkpoint.hpp"
#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"
#include "playseg/features.hpp"
#include "playseg/metrics.hpp"
#include "playseg/policy.hpp"
#include "playseg/report.hpp"
#include "playseg/scorer.hpp"
#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

#ifndef PLAYSEG_VERSION
#define PLAYSEG_VERSION "unknown"
#endif

namespace playseg {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

std::string make_key(std::initializer_list<std::string> parts) {
  std::string joined;
  for (const auto& p : parts) {
    joined += p;
    joined += '\x1f';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
  return buf;
}

void write_json(const fs::path& file, const json& j) { write_text_file(file, j.dump(2) + "\n"); }

json read_json(const fs::path& file) {
  if (!fs::exists(file)) throw DataError("missing artifact " + file.string());
  try {
    return json::parse(read_text_file(file));
  } catch (const json::exception& e) {
    throw DataError("malformed artifact " + file.string() + ": " + e.what());
  }
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

bool is_gt_condition(const std::string& c) { return c.rfind("gt-", 0) == 0 && c != "gt-relabel"; }

SplitTag gt_condition_tag(const std::string& c) {
  if (c == "gt-100") return SplitTag::kFull;
  if (c == "gt-50") return SplitTag::kHalf;
  if (c == "gt-25") return SplitTag::kQuarter;
  if (c == "gt-10") return SplitTag::kTenth;
  throw ConfigError("not a ground-truth condition: " + c);
}

std::string condition_name(SplitTag tag) {
  return tag == SplitTag::kFull ? "gt-100" : "gt-" + std::string(split_tag_name(tag));
}

std::string condition_method(const std::string& c) { return c; }

DatasetManifest manifest_for(const ExperimentConfig& cfg, const Dataset& ds) {
  DatasetManifest m;
  m.grid_width = cfg.data.play.env.width;
  m.grid_height = cfg.data.play.env.height;
  m.seed = cfg.data.seed;
  m.split = ds.split_tag;
  m.num_tasks = cfg.data.play.num_tasks;
  if (!ds.annotated.empty()) {
    const auto r = LengthRange::of(ds);
    m.min_segment_length = r.min;
    m.max_segment_length = r.max;
  }
  return m;
}

json histogram_json(const DatasetStats& s) {
  json lengths = json::object();
  for (const auto& [len, n] : s.length_histogram) lengths[std::to_string(len)] = n;
  return {{"segments", s.segments}, {"labels", s.label_histogram}, {"lengths", lengths}};
}

json counts_json(const BoundaryCounts& c, bool complete) {
  json j = {{"predicted", c.predicted},
            {"ground_truth", c.ground_truth},
            {"matched", c.matched},
            {"precision", optional_json(c.precision())}};
  if (complete) {
    j["recall"] = optional_json(c.recall());
    j["f1"] = optional_json(f1(c.precision(), c.recall()));
  }
  return j;
}

fs::path scorer_file(const fs::path& run) { return run / "scorer" / "model.json"; }

ScorerModel load_scorer(const fs::path& run, const FeatureSchema& schema) {
  const Checkpoint c = load_checkpoint(scorer_file(run), "scorer");
  require_schema(c, schema);
  return ScorerModel(c.schema, c.normalization, c.network);
}

}  // namespace

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < w; ++t) {
    threads.emplace_back([&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          next.store(n);
        }
      }
    });
  }
  for (auto& th : threads) th.join();
  if (error) std::rethrow_exception(error);
}

fs::path condition_dataset_dir(const fs::path& run_dir, const std::string& condition) {
  if (condition == "gt-100") return run_dir / "data" / "full";
  if (is_gt_condition(condition)) {
    return run_dir / "splits" / std::string(split_tag_name(gt_condition_tag(condition)));
  }
  return run_dir / "augment" / condition / "dataset";
}

std::string policy_file_name(std::uint64_t seed) { return "seed-" + std::to_string(seed); }

Pipeline::Pipeline(ExperimentConfig cfg, fs::path run_dir, LogFunction log)
    : cfg_(std::move(cfg)), run_dir_(std::move(run_dir)), log_(std::move(log)) {
  cfg_.validate();
  fs::create_directories(run_dir_);
  write_run_manifest();
}

void Pipeline::log(const std::string& msg) const {
  if (log_) log_(msg);
}

void Pipeline::write_run_manifest() const {
  write_text_file(run_dir_ / "config.json", dump_experiment_config(cfg_));
  json seeds = {{"data", cfg_.data.seed},
                {"scorer", cfg_.scorer.seed},
                {"crop_models", cfg_.crop.model.seed},
                {"extraction", cfg_.extraction.seed},
                {"augment", cfg_.augment.seed},
                {"policy", cfg_.policy.seeds},
                {"evaluation", cfg_.evaluation.seed}};
  write_json(run_dir_ / "run.json",
             {{"version", PLAYSEG_VERSION},
              {"config_key", make_key({dump_experiment_config(cfg_)})},
              {"seeds", seeds}});
}

std::string Pipeline::stage_key(const std::string& stage) const {
  const auto sec = [this](const char* s) { return config_section(cfg_, s); };
  const std::string features = sec("features");
  if (stage == "generate") return make_key({"generate", sec("data")});
  if (stage == "split") return make_key({"split", stage_key("generate")});
  if (stage == "scorer") {
    return make_key({"scorer", stage_key("split"), sec("starting_split"), sec("scorer"), features});
  }
  if (stage == "threshold") {
    return make_key({"threshold", stage_key("scorer"),
                     std::to_string(cfg_.augment.target_accuracy)});
  }
  if (stage.rfind("extract/", 0) == 0) {
    const std::string m = stage.substr(8);
    const bool crop = m == "framecrop" || m == "boundarycrop";
    return make_key({"extract", m, stage_key("scorer"), sec("extraction"),
                     m == "ps" ? sec("segmenter") : "", crop ? sec("crop_models") : ""});
  }
  if (stage.rfind("augment/", 0) == 0) {
    const std::string c = stage.substr(8);
    return make_key({"augment", c, stage_key("extract/" + condition_method(c)),
                     stage_key("threshold"), sec("augment"), sec("segmenter")});
  }
  if (stage.rfind("policy/", 0) == 0) {
    const auto slash = stage.find('/', 7);
    const std::string c = stage.substr(7, slash - 7);
    const std::string seed = stage.substr(slash + 1);
    const std::string source = is_gt_condition(c) ? stage_key("split") : stage_key("augment/" + c);
    const auto& bc = cfg_.policy.bc;
    return make_key({"policy", c, seed, source, features, std::to_string(bc.hidden),
                     std::to_string(bc.learning_rate), std::to_string(bc.updates),
                     std::to_string(bc.batch_size)});
  }
  if (stage.rfind("eval/", 0) == 0) {
    return make_key({"eval", stage_key("policy/" + stage.substr(5)), sec("evaluation")});
  }
  if (stage == "report") {
    std::string all = stage_key("threshold");
    for (const auto& m : extraction_methods()) all += stage_key("extract/" + m);
    for (const auto& c : cfg_.policy.conditions) {
      if (!is_gt_condition(c)) all += stage_key("augment/" + c);
      for (auto s : cfg_.policy.seeds) all += stage_key("eval/" + c + "/" + policy_file_name(s));
    }
    return make_key({"report", all, PLAYSEG_VERSION});
  }
  throw ConfigError("unknown stage " + stage);
}

bool Pipeline::up_to_date(const fs::path& dir, const std::string& key) const {
  const fs::path f = dir / "stage.json";
  if (!fs::exists(f)) return false;
  try {
    return json::parse(read_text_file(f)).at("key").get<std::string>() == key;
  } catch (const json::exception&) {
    return false;
  }
}

void Pipeline::mark_done(const fs::path& dir, const std::string& stage,
                         const std::string& key) const {
  write_json(dir / "stage.json", {{"key", key}, {"stage", stage}});
}

StageOutcome Pipeline::generate() {
  const std::string key = stage_key("generate");
  const fs::path dir = run_dir_ / "data";
  if (up_to_date(dir, key)) return {"generate", key, false};
  log("generate: building datasets");
  const gym::GeneratedData data = gym::make_datasets(cfg_.data);
  save_dataset(data.annotated_full, manifest_for(cfg_, data.annotated_full), dir / "full");
  save_dataset(data.validation, manifest_for(cfg_, data.validation), dir / "validation");
  save_dataset(data.unannotated, manifest_for(cfg_, data.unannotated), dir / "unannotated");
  save_ground_truth(data.unannotated_truth, dir / "unannotated");
  mark_done(dir, "generate", key);
  return {"generate", key, true};
}

StageOutcome Pipeline::split() {
  const std::string key = stage_key("split");
  const fs::path dir = run_dir_ / "splits";
  if (up_to_date(dir, key)) return {"split", key, false};
  log("split: nested annotated subsets");
  const Dataset full = load_dataset(run_dir_ / "data" / "full");
  for (SplitTag tag : {SplitTag::kHalf, SplitTag::kQuarter, SplitTag::kTenth}) {
    const Dataset part = gym::make_split(full, tag);
    save_dataset(part, manifest_for(cfg_, part), dir / std::string(split_tag_name(tag)));
  }
  mark_done(dir, "split", key);
  return {"split", key, true};
}

StageOutcome Pipeline::train_scorer() {
  const std::string key = stage_key("scorer");
  const fs::path dir = run_dir_ / "scorer";
  bool ran = false;
  if (!up_to_date(dir, key)) {
    ran = true;
    log("train-scorer: fitting the segment and label heads");
    const Dataset start =
        load_dataset(condition_dataset_dir(run_dir_, condition_name(cfg_.starting_split)));
    ScorerTrainReport rep;
    const ScorerModel model = playseg::train_scorer(start, cfg_.feature_schema(), cfg_.scorer, &rep);
    Checkpoint c{"scorer", model.schema(), model.normalization(), model.network(),
                 {{"val_label_accuracy", rep.val_label_accuracy},
                  {"val_segment_accuracy", rep.val_segment_accuracy}}};
    save_checkpoint(c, dir / "model.json");
    write_json(dir / "train.json", {{"loss_curve", rep.loss_curve},
                                    {"val_loss_curve", rep.val_loss_curve},
                                    {"best_epoch", rep.best_epoch},
                                    {"val_label_accuracy", rep.val_label_accuracy},
                                    {"val_segment_accuracy", rep.val_segment_accuracy},
                                    {"train_positives", rep.train_positives},
                                    {"train_negatives", rep.train_negatives},
                                    {"val_positives", rep.val_positives},
                                    {"val_negatives", rep.val_negatives},
                                    {"t_min", rep.negatives.t_min},
                                    {"t_max", rep.negatives.t_max},
                                    {"negatives_per_form", rep.negatives.negatives_per_form}});
    mark_done(dir, "train-scorer", key);
  }

  const std::string tkey = stage_key("threshold");
  const fs::path tdir = run_dir_ / "scorer" / "threshold";
  if (!up_to_date(tdir, tkey)) {
    ran = true;
    log("train-scorer: confidence threshold from validation");
    const ScorerModel model = load_scorer(run_dir_, cfg_.feature_schema());
    const Dataset val = load_dataset(run_dir_ / "data" / "validation");
    const ThresholdResult t =
        confidence_threshold_from_validation(model, val, cfg_.augment.target_accuracy);
    write_json(tdir / "threshold.json", {{"threshold", t.threshold},
                                         {"accuracy", t.accuracy},
                                         {"kept", t.kept},
                                         {"total", t.total},
                                         {"reachable", t.reachable},
                                         {"target_accuracy", cfg_.augment.target_accuracy}});
    mark_done(tdir, "threshold", tkey);
  }
  return {"train-scorer", key, ran};
}

std::vector<std::string> Pipeline::extraction_methods() const {
  std::vector<std::string> out = {"ps", "random", "framecrop", "boundarycrop"};
  const auto& c = cfg_.policy.conditions;
  if (std::find(c.begin(), c.end(), "gt-relabel") != c.end()) out.push_back("gt-relabel");
  return out;
}

StageOutcome Pipeline::extract(const std::string& method) {
  if (std::find(std::begin(kExtractionMethods), std::end(kExtractionMethods), method) ==
      std::end(kExtractionMethods)) {
    throw ConfigError("unknown extraction method '" + method + "'");
  }
  const std::string stage = "extract/" + method;
  const std::string key = stage_key(stage);
  const fs::path dir = run_dir_ / "extract" / method;
  if (up_to_date(dir, key)) return {stage, key, false};
  log("extract: " + method);

  const FeatureSchema schema = cfg_.feature_schema();
  const ScorerModel scorer = load_scorer(run_dir_, schema);
  const Dataset start =
      load_dataset(condition_dataset_dir(run_dir_, condition_name(cfg_.starting_split)));
  const Dataset unann = load_dataset(run_dir_ / "data" / "unannotated");
  const std::vector<PlayRecord> truth = load_ground_truth(run_dir_ / "data" / "unannotated", unann);
  const std::size_t n = truth.size();
  const int draws = cfg_.extraction.draws_per_trajectory;
  auto rng_for = [this](std::uint64_t stream, std::int64_t id) {
    return std::mt19937_64(gym::derive_seed(cfg_.extraction.seed, stream, static_cast<std::uint64_t>(id)));
  };

  std::vector<std::vector<LabelledSegment>> cands(n);
  json extra = json::object();
  std::int64_t model_calls = 0;

  if (method == "ps") {
    const SegmenterConfig seg_cfg = resolve_segmenter(cfg_.segmenter, start);
    std::vector<PlaySegmentation> logs(n);
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      const Trajectory& traj = *truth[i].trajectory;
      logs[i] = segment_play_trajectory(scorer, traj, seg_cfg);
      cands[i] = label_segments(scorer, traj, logs[i].segments);
    });
    std::int64_t updates = 0, stalls = 0, gaps = 0, windows = 0, gap_transitions = 0;
    std::string log_lines;
    for (const auto& l : logs) {
      model_calls += l.evaluations;
      updates += l.inner_updates;
      stalls += static_cast<std::int64_t>(l.stalls.size());
      gaps += static_cast<std::int64_t>(l.gaps.size());
      windows += static_cast<std::int64_t>(l.windows.size());
      for (const auto& g : l.gaps) gap_transitions += g.length();
      json starts = json::array();
      for (const auto& w : l.windows) starts.push_back(w.start);
      log_lines += json{{"trajectory_id", l.trajectory_id},
                        {"window_starts", starts},
                        {"stalls", l.stalls},
                        {"evaluations", l.evaluations},
                        {"inner_updates", l.inner_updates}}
                       .dump() +
                   "\n";
    }
    write_text_file(dir / "segment_log.jsonl", log_lines);
    extra["segmenter"] = {{"window", seg_cfg.window},
                          {"min_length", seg_cfg.band.min_length},
                          {"max_length", seg_cfg.band.max_length},
                          {"advance_threshold", seg_cfg.advance_threshold},
                          {"stall_advance", seg_cfg.effective_stall_advance()}};
    extra["dp_inner_updates"] = updates;
    extra["stalls"] = stalls;
    extra["gaps"] = gaps;
    extra["gap_transitions"] = gap_transitions;
    extra["windows"] = windows;
  } else if (method == "random") {
    const LengthRange range = LengthRange::of(start);
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      const Trajectory& traj = *truth[i].trajectory;
      auto rng = rng_for(101, traj.id);
      for (int d = 0; d < draws; ++d) {
        if (auto s = random_segment_extract(range, traj, scorer, rng)) cands[i].push_back(*s);
      }
    });
    model_calls = static_cast<std::int64_t>(n) * draws;
    extra["length_range"] = {range.min, range.max};
  } else if (method == "framecrop") {
    FrameClassifierReport rep;
    const FrameClassifier model = train_frame_classifier(start, schema, cfg_.crop.model, &rep);
    save_checkpoint({"frame_classifier", schema, model.normalization(), model.network(),
                     {{"window", model.window()}}},
                    dir / "model.json");
    extra["model"] = {{"window", rep.window},
                      {"loss_curve", rep.loss_curve},
                      {"val_loss_curve", rep.val_loss_curve},
                      {"val_frame_accuracy", rep.val_frame_accuracy},
                      {"val_inside_agreement", rep.val_inside_agreement},
                      {"train_windows", rep.train_windows},
                      {"val_windows", rep.val_windows}};
    std::vector<std::int64_t> frames(n, 0);
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      const Trajectory& traj = *truth[i].trajectory;
      auto rng = rng_for(102, traj.id);
      for (int d = 0; d < draws; ++d) {
        frames[i] += std::min(traj.length(), model.window()) + 1;
        if (auto s = framecrop_extract(model, traj, cfg_.crop.rule, rng)) cands[i].push_back(*s);
      }
    });
    for (auto f : frames) model_calls += f;
  } else if (method == "boundarycrop") {
    BoundaryRegressorReport rep;
    const BoundaryRegressor model = train_boundary_regressor(start, schema, cfg_.crop.model, &rep);
    save_checkpoint({"boundary_regressor", schema, model.normalization(), model.network(),
                     {{"window", model.window()}}},
                    dir / "model.json");
    extra["model"] = {{"window", rep.window},
                      {"loss_curve", rep.loss_curve},
                      {"val_loss_curve", rep.val_loss_curve},
                      {"val_boundary_mae", rep.val_boundary_mae},
                      {"val_class_accuracy", rep.val_class_accuracy},
                      {"train_windows", rep.train_windows},
                      {"val_windows", rep.val_windows}};
    std::vector<std::int64_t> frames(n, 0);
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      const Trajectory& traj = *truth[i].trajectory;
      auto rng = rng_for(103, traj.id);
      for (int d = 0; d < draws; ++d) {
        frames[i] += std::min(traj.length(), model.window()) + 1;
        if (auto s = boundarycrop_extract(model, traj, cfg_.crop.rule.min_length, rng)) {
          cands[i].push_back(*s);
        }
      }
    });
    for (auto f : frames) model_calls += f;
  } else {  // gt-relabel
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      const auto segs = truth[i].gt_segments();
      cands[i] = label_segments(scorer, *truth[i].trajectory, segs);
    });
    for (const auto& t : truth) model_calls += t.gt_boundaries.num_segments();
  }

  // The filter always uses the label head's confidence in the assigned label.
  if (method == "framecrop" || method == "boundarycrop") {
    parallel_for(n, cfg_.workers, [&](std::size_t i) {
      for (auto& s : cands[i]) {
        s.confidence = scorer.label_distribution(*truth[i].trajectory, s.t0, s.t1)[s.instruction.label_id()];
      }
    });
  }

  const bool complete = method == "ps" || method == "gt-relabel";
  json boundary = json::object();
  for (int tol : cfg_.extraction.tolerances) {
    BoundaryCounts total;
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<Interval> iv;
      for (const auto& s : cands[i]) iv.push_back(s.interval());
      const auto pts = complete ? end_points(iv) : crop_points(iv);
      total += match_boundaries(pts, boundary_points(truth[i].gt_boundaries), tol);
    }
    boundary["tolerance_" + std::to_string(tol)] = counts_json(total, complete);
  }
  LabelAccuracy acc;
  std::int64_t high_iou = 0;
  std::int64_t total_cands = 0;
  double macro_f1 = 0.0;
  std::int64_t macro_n = 0;
  std::vector<LabelledSegment> flat;
  for (std::size_t i = 0; i < n; ++i) {
    acc += label_accuracy(cands[i], truth[i]);
    const auto gt = truth[i].gt_segments();
    for (const auto& s : cands[i]) {
      high_iou += best_iou(s.interval(), gt) >= 0.9;
      flat.push_back(s);
    }
    total_cands += static_cast<std::int64_t>(cands[i].size());
    if (complete) {
      std::vector<Interval> iv;
      for (const auto& s : cands[i]) iv.push_back(s.interval());
      const auto c = match_boundaries(end_points(iv), boundary_points(truth[i].gt_boundaries), 0);
      macro_f1 += f1(c.precision().value_or(0.0), c.recall().value_or(0.0));
      ++macro_n;
    }
  }
  write_segments(flat, dir / "candidates.jsonl", true);

  json metrics = extra;
  metrics["method"] = method;
  metrics["complete"] = complete;
  metrics["trajectories"] = n;
  metrics["draws_per_trajectory"] = complete ? json(nullptr) : json(draws);
  metrics["candidates"] = total_cands;
  metrics["model_calls"] = model_calls;
  metrics["boundary"] = boundary;
  metrics["macro_f1"] = complete && macro_n > 0 ? json(macro_f1 / static_cast<double>(macro_n))
                                                : json(nullptr);
  metrics["label_accuracy"] = {{"total", acc.total},
                               {"majority", optional_json(acc.majority())},
                               {"strict", optional_json(acc.strict())}};
  metrics["iou_at_least_0_9"] =
      total_cands > 0 ? json(static_cast<double>(high_iou) / static_cast<double>(total_cands))
                      : json(nullptr);
  metrics["stats"] = histogram_json(dataset_stats(flat));
  write_json(dir / "metrics.json", metrics);
  mark_done(dir, stage, key);
  return {stage, key, true};
}

StageOutcome Pipeline::augment(const std::string& condition) {
  if (is_gt_condition(condition)) return {"augment/" + condition, "", false};
  const std::string stage = "augment/" + condition;
  const std::string key = stage_key(stage);
  const fs::path dir = run_dir_ / "augment" / condition;
  if (up_to_date(dir, key)) return {stage, key, false};
  log("augment: " + condition);

  const Dataset start =
      load_dataset(condition_dataset_dir(run_dir_, condition_name(cfg_.starting_split)));
  const DatasetManifest full_manifest = load_manifest(run_dir_ / "data" / "full");
  const Dataset full = load_dataset(run_dir_ / "data" / "full");
  const Dataset unann = load_dataset(run_dir_ / "data" / "unannotated");
  const json thr = read_json(run_dir_ / "scorer" / "threshold" / "threshold.json");
  const std::string method = condition_method(condition);
  const auto cands = read_segments(run_dir_ / "extract" / method / "candidates.jsonl");
  std::map<std::int64_t, std::vector<LabelledSegment>> by_traj;
  for (const auto& s : cands) by_traj[s.trajectory_id].push_back(s);
  const bool exhaustive = method == "ps" || method == "gt-relabel";
  PrecomputedExtractor extractor(method, std::move(by_traj), exhaustive);

  AugmentConfig acfg;
  acfg.target_size = full.annotated.size();
  acfg.confidence_filter = cfg_.augment.confidence_filter;
  acfg.threshold = thr.at("threshold").get<double>();
  acfg.draws_per_trajectory = cfg_.extraction.draws_per_trajectory;
  acfg.min_length = cfg_.segmenter.band.min_length;
  acfg.seed = cfg_.augment.seed;
  AugmentResult res = run_augmentation(start, unann, extractor, acfg);
  res.dataset.split_tag = start.split_tag;

  DatasetManifest m = manifest_for(cfg_, res.dataset);
  m.seed = full_manifest.seed;
  save_dataset(res.dataset, m, dir / "dataset");
  std::string prov;
  for (const auto& p : res.added) {
    prov += json{{"confidence", p.confidence},
                 {"label_id", p.label_id},
                 {"method", p.method},
                 {"t0", p.t0},
                 {"t1", p.t1},
                 {"trajectory_id", p.trajectory_id}}
                .dump() +
            "\n";
  }
  write_text_file(dir / "provenance.jsonl", prov);
  std::vector<LabelledSegment> added;
  for (const auto& p : res.added) added.push_back({p.trajectory_id, p.t0, p.t1, Instruction(p.label_id), p.confidence});
  write_json(dir / "augment.json", {{"condition", condition},
                                    {"method", method},
                                    {"starting_size", start.annotated.size()},
                                    {"target_size", acfg.target_size},
                                    {"final_size", res.dataset.annotated.size()},
                                    {"added", res.added.size()},
                                    {"shortfall", res.shortfall},
                                    {"candidates_seen", res.candidates},
                                    {"rejected_confidence", res.rejected_confidence},
                                    {"rejected_duplicate", res.rejected_duplicate},
                                    {"rejected_invalid", res.rejected_invalid},
                                    {"threshold", acfg.threshold},
                                    {"confidence_filter", acfg.confidence_filter},
                                    {"added_stats", histogram_json(dataset_stats(added))}});
  mark_done(dir, stage, key);
  return {stage, key, true};
}

StageOutcome Pipeline::train_policy(const std::string& condition, std::uint64_t seed) {
  const std::string stage = "policy/" + condition + "/" + policy_file_name(seed);
  const std::string key = stage_key(stage);
  const fs::path dir = run_dir_ / "policy" / condition / policy_file_name(seed);
  if (up_to_date(dir, key)) return {stage, key, false};
  log("train-policy: " + condition + " seed " + std::to_string(seed));
  const Dataset ds = load_dataset(condition_dataset_dir(run_dir_, condition));
  BcConfig bc = cfg_.policy.bc;
  bc.seed = seed;
  BcReport rep;
  const PolicyModel model = train_bc(ds, cfg_.feature_schema(), bc, &rep);
  save_checkpoint({"policy", model.schema(), Standardizer::identity(policy_input_dim(model.schema())),
                   model.network(), {{"samples", static_cast<double>(rep.samples)}}},
                  dir / "policy.json");
  write_json(dir / "train.json", {{"samples", rep.samples},
                                  {"segments", ds.annotated.size()},
                                  {"loss_curve", rep.loss_curve}});
  mark_done(dir, stage, key);
  return {stage, key, true};
}

StageOutcome Pipeline::eval_policy(const std::string& condition, std::uint64_t seed) {
  const std::string stage = "eval/" + condition + "/" + policy_file_name(seed);
  const std::string key = stage_key(stage);
  const fs::path dir = run_dir_ / "eval" / condition / policy_file_name(seed);
  if (up_to_date(dir, key)) return {stage, key, false};
  const Checkpoint c =
      load_checkpoint(run_dir_ / "policy" / condition / policy_file_name(seed) / "policy.json", "policy");
  require_schema(c, cfg_.feature_schema());
  const PolicyModel model(c.schema, c.network);
  const PolicyEval e = evaluate_policy(model, cfg_.evaluation);
  write_json(dir / "eval.json", {{"condition", condition},
                                 {"seed", seed},
                                 {"episodes", e.episodes},
                                 {"successes", e.successes},
                                 {"success_rate", e.success_rate()},
                                 {"task_episodes", e.task_episodes},
                                 {"task_successes", e.task_successes}});
  mark_done(dir, stage, key);
  return {stage, key, true};
}

StageOutcome Pipeline::report() {
  const std::string key = stage_key("report");
  if (up_to_date(run_dir_ / "report", key) && fs::exists(run_dir_ / "report" / "summary.json")) {
    return {"report", key, false};
  }
  log("report");
  emit_report(run_dir_);
  mark_done(run_dir_ / "report", "report", key);
  return {"report", key, true};
}

std::vector<StageOutcome> Pipeline::extract_all() {
  std::vector<StageOutcome> out;
  for (const auto& m : extraction_methods()) out.push_back(extract(m));
  return out;
}

std::vector<StageOutcome> Pipeline::augment_all() {
  std::vector<StageOutcome> out;
  for (const auto& c : cfg_.policy.conditions) {
    if (!is_gt_condition(c)) out.push_back(augment(c));
  }
  return out;
}

std::vector<StageOutcome> Pipeline::train_policy_all() {
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto& c : cfg_.policy.conditions) {
    for (auto s : cfg_.policy.seeds) jobs.emplace_back(c, s);
  }
  std::vector<StageOutcome> out(jobs.size());
  std::mutex log_mutex;
  const LogFunction outer = log_;
  Pipeline worker = *this;
  worker.log_ = [&](const std::string& msg) {
    std::lock_guard<std::mutex> lock(log_mutex);
    if (outer) outer(msg);
  };
  parallel_for(jobs.size(), cfg_.workers, [&](std::size_t i) {
    out[i] = worker.train_policy(jobs[i].first, jobs[i].second);
  });
  return out;
}

std::vector<StageOutcome> Pipeline::eval_policy_all() {
  std::vector<std::pair<std::string, std::uint64_t>> jobs;
  for (const auto& c : cfg_.policy.conditions) {
    for (auto s : cfg_.policy.seeds) jobs.emplace_back(c, s);
  }
  std::vector<StageOutcome> out(jobs.size());
  parallel_for(jobs.size(), cfg_.workers, [&](std::size_t i) {
    out[i] = eval_policy(jobs[i].first, jobs[i].second);
  });
  return out;
}

std::vector<StageOutcome> Pipeline::run_all() {
  std::vector<StageOutcome> out;
  auto append = [&out](std::vector<StageOutcome> v) { out.insert(out.end(), v.begin(), v.end()); };
  out.push_back(generate());
  out.push_back(split());
  out.push_back(train_scorer());
  append(extract_all());
  append(augment_all());
  append(train_policy_all());
  append(eval_policy_all());
  out.push_back(report());
  return out;
}

}  // namespace playseg
