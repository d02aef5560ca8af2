// Acceptance checks, one per criterion. Prints a single PASS/FAIL line and
// exits 0 only on PASS.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fmt/core.h>
#include <random>
#include <string>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "oracles.hpp"
#include "playseg/augment.hpp"
#include "playseg/checkpoint.hpp"
#include "playseg/config.hpp"
#include "playseg/dataset_io.hpp"
#include "playseg/metrics.hpp"
#include "playseg/pipeline.hpp"
#include "playseg/policy.hpp"
#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;
namespace fs = std::filesystem;
using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

// Tolerances and limits.
constexpr double kDpTolerance = 1e-9;
constexpr double kDpSeconds = 30.0;
constexpr double kOracleSeconds = 120.0;
constexpr double kCubicFitTolerance = 0.10;
constexpr double kGradientTolerance = 1e-5;
constexpr int kGradientProbes = 20;
constexpr double kF1Expected = 0.716;
constexpr double kF1Tolerance = 0.002;
constexpr double kSuiteSeconds = 30.0 * 60.0;
constexpr double kTargetAccuracy = 0.90;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

ScoreMatrix random_matrix(int T, Band band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.005, 0.995);
  ScoreMatrix m(T, band);
  for (int i = 0; i < T; ++i) {
    for (int j = i; j < T; ++j) {
      if (m.in_band(i, j)) m.set(i, j, u(rng));
    }
  }
  return m;
}

Outcome criterion1() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(2024);
  int cases = 0;
  int feasible = 0;
  double worst = 0.0;
  bool ok = true;
  for (int trial = 0; trial < 240; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 12)(rng);
    Band band{1, T};
    if (trial % 2 == 1) {
      band.min_length = std::uniform_int_distribution<int>(1, std::min(T, 4))(rng);
      band.max_length = std::uniform_int_distribution<int>(band.min_length, T)(rng);
    }
    const ScoreMatrix m = random_matrix(T, band, rng);
    const auto dp = dp_segment(m);
    const auto bf = brute_force_segment(m);
    ++cases;
    if (dp.feasible != bf.feasible) {
      ok = false;
      continue;
    }
    if (!dp.feasible) continue;
    ++feasible;
    const auto eval = evaluate_segmentation(m, dp.segmentation.boundaries);
    const double d1 = std::abs(dp.log_likelihood - bf.log_likelihood);
    const double d2 = eval ? std::abs(*eval - bf.log_likelihood) : INFINITY;
    worst = std::max({worst, d1, d2});
  }
  const double secs = seconds_since(t0);
  ok = ok && worst <= kDpTolerance && secs < kDpSeconds && cases >= 200;
  return {ok, fmt::format("{} matrices ({} feasible), max |dp - brute| = {:.3g}, {:.2f}s", cases,
                          feasible, worst, secs)};
}

Outcome criterion2() {
  const auto t0 = Clock::now();
  oracle::GroundTruthScorer scorer(0.99, 0.01);
  std::vector<PlayRecord> records;
  int longest = 1;
  for (int i = 0; i < 50; ++i) {
    records.push_back(gym::generate_play_trajectory(static_cast<std::uint64_t>(7000 + i), {}, i));
    scorer.add(records.back());
    for (const auto& s : records.back().gt_segments()) longest = std::max(longest, s.length());
  }
  SegmenterConfig cfg;
  cfg.band = {1, longest};
  cfg.window = 2 * longest;
  BoundaryCounts counts;
  LabelAccuracy acc;
  for (const auto& r : records) {
    const auto out = segment_play_trajectory(scorer, *r.trajectory, cfg);
    counts += match_boundaries(end_points(out.segments), boundary_points(r.gt_boundaries), 0);
    acc += label_accuracy(label_segments(scorer, *r.trajectory, out.segments), r);
  }
  const double secs = seconds_since(t0);
  const double p = counts.precision().value_or(0.0);
  const double rc = counts.recall().value_or(0.0);
  const double la = acc.strict().value_or(0.0);
  const bool ok = p == 1.0 && rc == 1.0 && la == 1.0 && secs < kOracleSeconds;
  return {ok, fmt::format("precision {:.4f}, recall {:.4f}, label accuracy {:.4f} on 50 records, {:.2f}s",
                          p, rc, la, secs)};
}

Outcome criterion3() {
  bool counts_ok = true;
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 60)(rng);
    const int lo = std::uniform_int_distribution<int>(1, 5)(rng);
    const int hi = std::uniform_int_distribution<int>(lo, lo + 30)(rng);
    std::int64_t calls = 0;
    const ScoreMatrix m = build_score_matrix([&](int, int) { ++calls; return 0.5; }, T, {lo, hi});
    std::int64_t formula = 0;
    for (int len = lo; len <= std::min(hi, T); ++len) formula += T - len + 1;
    counts_ok = counts_ok && calls == formula && m.evaluations == formula &&
                band_pair_count(T, {lo, hi}) == formula;
  }
  const std::vector<int> sizes{50, 100, 200};
  std::vector<double> ops;
  for (int T : sizes) ops.push_back(static_cast<double>(dp_segment(random_matrix(T, {1, T}, rng)).inner_updates));
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    const double t3 = std::pow(sizes[i], 3);
    num += ops[i] * t3;
    den += t3 * t3;
  }
  const double c = num / den;
  double worst = 0.0;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    worst = std::max(worst, std::abs(ops[i] - c * std::pow(sizes[i], 3)) / ops[i]);
  }
  const bool ok = counts_ok && worst <= kCubicFitTolerance;
  return {ok, fmt::format("scorer calls match band formula: {}; c = {:.4f}, worst cubic fit error {:.3f}%",
                          counts_ok ? "yes" : "no", c, 100.0 * worst)};
}

Outcome criterion4() {
  const FeatureSchema schema;
  const PlayRecord r = gym::generate_play_trajectory(11, {});
  const Trajectory& t = *r.trajectory;
  std::mt19937_64 rng(4);

  ScorerBatch b;
  b.positives.resize(6, schema.segment_dim());
  b.negatives.resize(8, schema.segment_dim());
  for (int i = 0; i < 14; ++i) {
    const int t0 = std::uniform_int_distribution<int>(0, t.length() - 4)(rng);
    const int t1 = std::uniform_int_distribution<int>(t0 + 1, std::min(t.length(), t0 + 12))(rng);
    const Eigen::VectorXd f = extract_segment_features(slice_segment(t, t0, t1), schema);
    if (i < 6) {
      b.positives.row(i) = f.transpose();
      b.labels.push_back(static_cast<int>(rng() % kNumInstructions));
    } else {
      b.negatives.row(i - 6) = f.transpose();
    }
  }
  Mlp scorer_net(schema.segment_dim(), 16, kScorerOutputs, 3);
  MlpGradient gs;
  scorer_loss(scorer_net, b, &gs);
  const double es = oracle::directional_gradient_error(
      [&](const Eigen::VectorXd& th) {
        Mlp m = scorer_net;
        m.set_flat_parameters(th);
        return scorer_loss(m, b);
      },
      scorer_net.flat_parameters(), gs.flatten(), kGradientProbes, 21);

  const int n = std::min(t.length(), 16);
  Eigen::MatrixXd x(n, policy_input_dim(schema));
  std::vector<int> actions;
  for (int i = 0; i < n; ++i) {
    x.row(i) = policy_input(t.observations[static_cast<std::size_t>(i)], r.gt_labels[0], schema).transpose();
    actions.push_back(static_cast<int>(t.actions[static_cast<std::size_t>(i)]));
  }
  Mlp policy_net(policy_input_dim(schema), 16, 4, 5);
  MlpGradient gp;
  policy_loss(policy_net, x, actions, &gp);
  const double ep = oracle::directional_gradient_error(
      [&](const Eigen::VectorXd& th) {
        Mlp m = policy_net;
        m.set_flat_parameters(th);
        return policy_loss(m, x, actions);
      },
      policy_net.flat_parameters(), gp.flatten(), kGradientProbes, 22);
  const bool ok = es <= kGradientTolerance && ep <= kGradientTolerance;
  return {ok, fmt::format("max relative error over {} probes: scorer {:.3g}, policy {:.3g}",
                          kGradientProbes, es, ep)};
}

Outcome criterion5() {
  const double v = f1(0.826, 0.627);
  const bool f1_ok = std::abs(v - kF1Expected) <= kF1Tolerance;
  std::mt19937_64 rng(55);
  int agree = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int T = std::uniform_int_distribution<int>(2, 50)(rng);
    Segmentation g;
    g.boundaries.assign(static_cast<std::size_t>(T), 0);
    g.boundaries.back() = 1;
    std::vector<int> gv{T};
    std::vector<int> pv;
    std::set<int> ps;
    for (int i = 1; i < T; ++i) {
      if (rng() % 3 == 0) {
        g.boundaries[static_cast<std::size_t>(i - 1)] = 1;
        gv.push_back(i);
      }
      if (rng() % 3 == 0) {
        pv.push_back(i);
        ps.insert(i);
      }
    }
    const auto got = boundary_precision_recall(ps, g);
    const auto want = oracle::set_precision_recall(pv, gv);
    const bool same_p = got.precision.has_value() == want.precision.has_value() &&
                        (!want.precision || std::abs(*got.precision - *want.precision) < 1e-12);
    agree += same_p && std::abs(got.recall - want.recall) < 1e-12;
  }
  return {f1_ok && agree == 100,
          fmt::format("f1(0.826, 0.627) = {:.5f} (want {} +/- {}); set oracle agreement {}/100", v,
                      kF1Expected, kF1Tolerance, agree)};
}

ExperimentConfig default_config(int workers) {
  ExperimentConfig cfg = load_experiment_config(fs::path(PLAYSEG_SOURCE_DIR) / "configs" / "default.jsonc");
  cfg.workers = workers;
  return cfg;
}

int default_workers() {
  return static_cast<int>(std::clamp(std::thread::hardware_concurrency(), 1u, 8u));
}

json run_default(const fs::path& dir, int workers) {
  Pipeline p(default_config(workers), dir, [](const std::string& m) { fmt::print(stderr, "{}\n", m); });
  p.run_all();
  return json::parse(read_text_file(dir / "report" / "summary.json"));
}

Outcome criterion6(const fs::path& dir, int workers) {
  fs::remove_all(dir);
  const auto t0 = Clock::now();
  const json s = run_default(dir, workers);
  const double secs = seconds_since(t0);
  bool ok = secs < kSuiteSeconds;
  std::string detail;
  for (const char* name : {"more_annotation_helps", "ps_augmentation_helps",
                           "random_augmentation_does_not_help"}) {
    if (!s.at("orderings").contains(name)) {
      ok = false;
      detail += fmt::format("{}: missing; ", name);
      continue;
    }
    const auto& o = s.at("orderings").at(name);
    const bool holds = o.at("holds").get<bool>();
    ok = ok && holds;
    detail += fmt::format("{} {:.4f} vs {} {:.4f} ({}); ", o.at("lhs").get<std::string>(),
                          o.at("lhs_mean").get<double>(), o.at("rhs").get<std::string>(),
                          o.at("rhs_mean").get<double>(), holds ? "holds" : "violated");
  }
  const auto seeds = s.at("policy").at("gt-100").at("seeds").get<int>();
  ok = ok && seeds == 8;
  return {ok, detail + fmt::format("{} seeds, suite {:.0f}s (limit {:.0f}s)", seeds, secs, kSuiteSeconds)};
}

Outcome criterion7(const fs::path& dir, int workers) {
  const json s = run_default(dir, workers);
  const auto& ex = s.at("extraction");
  auto precision = [&](const char* m) {
    return ex.at(m).at("boundary").at("tolerance_0").at("precision").get<double>();
  };
  const double ps = precision("ps");
  const double fc = precision("framecrop");
  const double bc = precision("boundarycrop");
  return {ps > fc && ps > bc,
          fmt::format("boundary precision at tolerance 0: ps {:.4f}, framecrop {:.4f}, boundarycrop {:.4f}",
                      ps, fc, bc)};
}

Outcome criterion8(const fs::path& dir, int workers) {
  run_default(dir, workers);
  const json t = json::parse(read_text_file(dir / "scorer" / "threshold" / "threshold.json"));
  const double threshold = t.at("threshold").get<double>();
  const Checkpoint c = load_checkpoint(dir / "scorer" / "model.json", "scorer");
  const ScorerModel model(c.schema, c.normalization, c.network);
  const Dataset val = load_dataset(dir / "data" / "validation");
  std::int64_t kept = 0;
  std::int64_t correct = 0;
  for (const auto& s : val.annotated) {
    const Eigen::VectorXd d = model.label_distribution(val.trajectory(s.trajectory_id), s.t0, s.t1);
    Eigen::Index best = 0;
    d.maxCoeff(&best);
    if (d[best] < threshold) continue;
    ++kept;
    correct += best == s.instruction.label_id();
  }
  const double acc = kept > 0 ? static_cast<double>(correct) / static_cast<double>(kept) : 0.0;
  return {kept > 0 && acc >= kTargetAccuracy,
          fmt::format("threshold {:.4f} keeps {}/{} validation segments at accuracy {:.4f}", threshold,
                      kept, val.annotated.size(), acc)};
}

std::string read_tree(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  std::string all;
  for (const auto& f : files) all += fs::relative(f, dir).string() + "\n" + read_text_file(f);
  return all;
}

Outcome criterion9(const fs::path& base) {
  const ExperimentConfig cfg =
      load_experiment_config(fs::path(PLAYSEG_SOURCE_DIR) / "tests" / "acceptance" / "small.jsonc");
  std::vector<std::string> reports;
  for (const char* name : {"a", "b"}) {
    const fs::path d = base / name;
    fs::remove_all(d);
    Pipeline(cfg, d).run_all();
    reports.push_back(read_tree(d / "report"));
  }
  fs::remove_all(base);
  return {reports[0] == reports[1] && !reports[0].empty(),
          fmt::format("report trees {} ({} bytes)", reports[0] == reports[1] ? "identical" : "differ",
                      reports[0].size())};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"playseg acceptance checks"};
  int criterion = 0;
  std::string run_dir = "acceptance_run";
  int workers = default_workers();
  app.add_option("--criterion", criterion, "criterion number 1-9")->required()->check(CLI::Range(1, 9));
  app.add_option("--run-dir", run_dir, "run directory for the end-to-end criteria");
  app.add_option("--workers", workers, "worker threads for the end-to-end criteria");
  CLI11_PARSE(app, argc, argv);

  Outcome o;
  try {
    switch (criterion) {
      case 1: o = criterion1(); break;
      case 2: o = criterion2(); break;
      case 3: o = criterion3(); break;
      case 4: o = criterion4(); break;
      case 5: o = criterion5(); break;
      case 6: o = criterion6(run_dir, workers); break;
      case 7: o = criterion7(run_dir, workers); break;
      case 8: o = criterion8(run_dir, workers); break;
      case 9: o = criterion9(fs::path(run_dir + "_determinism")); break;
    }
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  fmt::print("criterion {}: {} - {}\n", criterion, o.pass ? "PASS" : "FAIL", o.detail);
  return o.pass ? 0 : 1;
}
