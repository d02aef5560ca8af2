// playseg: command-line driver for the play segmentation experiment.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "playseg/checkpoint.hpp"
#include "playseg/config.hpp"
#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"
#include "playseg/pipeline.hpp"
#include "playseg/report.hpp"
#include "playseg/scorer.hpp"
#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

#ifndef PLAYSEG_VERSION
#define PLAYSEG_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using namespace playseg;

namespace {

struct Common {
  std::string config;
  std::string run_dir;
  int workers = 0;
};

ExperimentConfig load_config(const Common& o) {
  ExperimentConfig cfg = o.config.empty() ? default_experiment_config()
                                          : load_experiment_config(o.config);
  if (o.workers > 0) {
    cfg.workers = o.workers;
  } else if (const char* w = std::getenv("PLAYSEG_WORKERS")) {
    try {
      cfg.workers = std::stoi(w);
    } catch (const std::exception&) {
      throw ConfigError(std::string("PLAYSEG_WORKERS is not an integer: ") + w);
    }
  }
  cfg.validate();
  return cfg;
}

fs::path run_dir(const Common& o) {
  if (!o.run_dir.empty()) return o.run_dir;
  if (const char* d = std::getenv("PLAYSEG_RUN_DIR")) return d;
  throw ConfigError("no run directory: pass --run-dir or set PLAYSEG_RUN_DIR");
}

Pipeline make_pipeline(const Common& o) {
  return Pipeline(load_config(o), run_dir(o), [](const std::string& m) { spdlog::info(m); });
}

void report_outcome(const StageOutcome& s) {
  spdlog::info("{} {} ({})", s.ran ? "ran" : "up to date", s.name, s.key);
}

void add_common(CLI::App* app, Common& o) {
  app->add_option("--config", o.config, "experiment config (JSON with comments)");
  app->add_option("--run-dir", o.run_dir, "run directory (default: $PLAYSEG_RUN_DIR)");
  app->add_option("--workers", o.workers, "worker threads (default: config or $PLAYSEG_WORKERS)");
}

int selftest() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  for (int trial = 0; trial < 50; ++trial) {
    const int T = 2 + trial % 9;
    const Band band{1 + trial % 2, T};
    const ScoreMatrix m = build_score_matrix([&](int, int) { return u(rng); }, T, band);
    const auto dp = dp_segment(m);
    const auto bf = brute_force_segment(m);
    if (dp.feasible != bf.feasible ||
        (dp.feasible && std::abs(dp.log_likelihood - bf.log_likelihood) > 1e-9)) {
      spdlog::error("dynamic program disagrees with exhaustive search at T={}", T);
      return static_cast<int>(ExitCode::kInternal);
    }
  }
  gym::PlayConfig play;
  const PlayRecord r = gym::generate_play_trajectory(3, play, 0);
  validate(*r.trajectory);
  if (r.gt_boundaries.num_segments() != play.num_tasks) {
    spdlog::error("play generator produced {} tasks", r.gt_boundaries.num_segments());
    return static_cast<int>(ExitCode::kInternal);
  }
  std::cout << "selftest ok\n";
  return 0;
}

int segment_command(const std::string& checkpoint, const std::string& trajectories,
                    const std::string& out, const Common& o, int window, int min_len,
                    int max_len) {
  SegmenterConfig seg = load_config(o).segmenter;
  if (window > 0) seg.window = window;
  if (min_len > 0) seg.band.min_length = min_len;
  if (max_len > 0) seg.band.max_length = max_len;
  if (seg.band.max_length <= 0) {
    throw ConfigError("segment needs a maximum length: set segmenter.max_length or --max-length");
  }
  if (seg.window <= 0) seg.window = 2 * seg.band.max_length;
  seg.validate();
  const Checkpoint c = load_checkpoint(checkpoint, "scorer");
  const ScorerModel model(c.schema, c.normalization, c.network);
  std::string lines;
  for (const auto& traj : read_trajectories(trajectories)) {
    const PlaySegmentation p = segment_play_trajectory(model, *traj, seg);
    nlohmann::json segs = nlohmann::json::array();
    for (const auto& s : label_segments(model, *traj, p.segments)) {
      segs.push_back({{"t0", s.t0}, {"t1", s.t1}, {"label_id", s.instruction.label_id()},
                      {"instruction", s.instruction.text()}, {"confidence", s.confidence}});
    }
    nlohmann::json gaps = nlohmann::json::array();
    for (const auto& g : p.gaps) gaps.push_back({g.start, g.end});
    lines += nlohmann::json{{"trajectory_id", traj->id},
                            {"segments", segs},
                            {"stalls", p.stalls},
                            {"gaps", gaps},
                            {"evaluations", p.evaluations}}
                 .dump() +
             "\n";
  }
  if (out.empty()) {
    std::cout << lines;
  } else {
    write_text_file(out, lines);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("playseg");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%H:%M:%S] %v");

  CLI::App app{"Play segmentation experiment driver"};
  app.set_version_flag("--version", PLAYSEG_VERSION);
  app.require_subcommand(1);
  Common o;
  std::string method, condition, checkpoint, trajectories, out;
  std::optional<std::uint64_t> seed;
  int window = 0, min_len = 0, max_len = 0;

  auto* generate = app.add_subcommand("generate", "generate the annotated, validation and play pools");
  auto* split = app.add_subcommand("split", "cut the nested annotated subsets");
  auto* train_scorer = app.add_subcommand("train-scorer", "train the window scorer and its threshold");
  auto* extract = app.add_subcommand("extract", "extract candidate segments from play");
  extract->add_option("--method", method, "ps, random, framecrop, boundarycrop, gt-relabel or all")
      ->default_val("all");
  auto* augment = app.add_subcommand("augment", "grow the starting split with extracted segments");
  augment->add_option("--condition", condition, "augmentation condition (default: all)");
  auto* train_policy = app.add_subcommand("train-policy", "behaviour cloning per condition and seed");
  auto* eval_policy = app.add_subcommand("eval-policy", "evaluate trained policies online");
  for (auto* sub : {train_policy, eval_policy}) {
    sub->add_option("--condition", condition, "training condition (default: all)");
    sub->add_option("--seed", seed, "policy seed (default: all configured)");
  }
  auto* report = app.add_subcommand("report", "write report/summary.json and series CSVs");
  auto* run = app.add_subcommand("run", "run every stage, skipping those already up to date");
  auto* show_config = app.add_subcommand("show-config", "print the resolved config as JSON");
  auto* self = app.add_subcommand("selftest", "quick internal consistency checks");
  auto* segment = app.add_subcommand("segment", "segment play trajectories with a trained scorer");
  segment->add_option("--checkpoint", checkpoint, "scorer checkpoint")->required();
  segment->add_option("--trajectories", trajectories, "trajectories.jsonl")->required();
  segment->add_option("--out", out, "output JSONL (default: stdout)");
  segment->add_option("--window", window, "window size in transitions");
  segment->add_option("--min-length", min_len, "minimum segment length");
  segment->add_option("--max-length", max_len, "maximum segment length");
  for (auto* sub : {generate, split, train_scorer, extract, augment, train_policy, eval_policy,
                    report, run, show_config, segment}) {
    add_common(sub, o);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : static_cast<int>(ExitCode::kConfig);
  }

  try {
    if (*self) return selftest();
    if (*show_config) {
      std::cout << dump_experiment_config(load_config(o));
      return 0;
    }
    if (*segment) return segment_command(checkpoint, trajectories, out, o, window, min_len, max_len);

    Pipeline p = make_pipeline(o);
    auto each = [](const std::vector<StageOutcome>& v) {
      for (const auto& s : v) report_outcome(s);
    };
    auto jobs = [&](auto fn) {
      const auto& conds = p.config().policy.conditions;
      const auto& seeds = p.config().policy.seeds;
      for (const auto& c : conds) {
        if (!condition.empty() && c != condition) continue;
        for (auto s : seeds) {
          if (!seed || s == *seed) report_outcome(fn(c, s));
        }
      }
    };
    if (*generate) report_outcome(p.generate());
    if (*split) report_outcome(p.split());
    if (*train_scorer) report_outcome(p.train_scorer());
    if (*extract) {
      if (method == "all") {
        each(p.extract_all());
      } else {
        report_outcome(p.extract(method));
      }
    }
    if (*augment) {
      if (condition.empty()) {
        each(p.augment_all());
      } else {
        report_outcome(p.augment(condition));
      }
    }
    if (*train_policy) {
      if (condition.empty() && !seed) {
        each(p.train_policy_all());
      } else {
        jobs([&](const std::string& c, std::uint64_t s) { return p.train_policy(c, s); });
      }
    }
    if (*eval_policy) {
      if (condition.empty() && !seed) {
        each(p.eval_policy_all());
      } else {
        jobs([&](const std::string& c, std::uint64_t s) { return p.eval_policy(c, s); });
      }
    }
    if (*report) report_outcome(p.report());
    if (*run) each(p.run_all());
    return 0;
  } catch (const Error& e) {
    spdlog::error("{}", e.what());
    return static_cast<int>(e.code());
  } catch (const std::exception& e) {
    spdlog::error("internal error: {}", e.what());
    return static_cast<int>(ExitCode::kInternal);
  }
}
