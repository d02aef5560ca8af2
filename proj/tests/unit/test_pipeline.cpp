#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>

#include <json.hpp>

#include "playseg/dataset_io.hpp"
#include "playseg/pipeline.hpp"
#include "playseg/report.hpp"

using namespace playseg;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

ExperimentConfig small_config() {
  return load_experiment_config(fs::path(PLAYSEG_SOURCE_DIR) / "tests" / "acceptance" / "small.jsonc");
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("playseg_unit_" + name);
  fs::remove_all(p);
  return p;
}

int count_ran(const std::vector<StageOutcome>& v, const std::string& prefix) {
  int n = 0;
  for (const auto& s : v) n += s.ran && s.name.rfind(prefix, 0) == 0;
  return n;
}

// One full small run shared by the tests below.
class PipelineRun : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new fs::path(scratch("pipeline"));
    Pipeline p(small_config(), *dir_);
    first_ = new std::vector<StageOutcome>(p.run_all());
  }
  static void TearDownTestSuite() {
    fs::remove_all(*dir_);
    delete dir_;
    delete first_;
  }
  static fs::path* dir_;
  static std::vector<StageOutcome>* first_;
};

fs::path* PipelineRun::dir_ = nullptr;
std::vector<StageOutcome>* PipelineRun::first_ = nullptr;

}  // namespace

TEST(ParallelFor, VisitsEveryIndexAndRethrows) {
  std::vector<int> hit(100, 0);
  parallel_for(hit.size(), 4, [&](std::size_t i) { hit[i] += 1; });
  for (int h : hit) EXPECT_EQ(h, 1);
  EXPECT_THROW(parallel_for(10, 3,
                            [](std::size_t i) {
                              if (i == 7) throw std::runtime_error("boom");
                            }),
               std::runtime_error);
}

TEST(Report, EmptyRunDirListsMissingSections) {
  const fs::path d = scratch("empty");
  fs::create_directories(d);
  const ReportBundle b = build_report(d);
  const json s = json::parse(b.summary);
  const auto missing = s.at("missing").get<std::vector<std::string>>();
  for (const char* want : {"config", "scorer", "threshold", "extract/ps", "per_task_improvement"}) {
    EXPECT_NE(std::find(missing.begin(), missing.end(), want), missing.end()) << want;
  }
  fs::remove_all(d);
}

TEST_F(PipelineRun, FirstRunExecutesEveryStage) {
  for (const auto& s : *first_) {
    if (!s.key.empty()) EXPECT_TRUE(s.ran) << s.name;
  }
  EXPECT_EQ(count_ran(*first_, "policy/"), 14);
  EXPECT_TRUE(fs::exists(*dir_ / "report" / "summary.json"));
}

TEST_F(PipelineRun, RerunSkipsEverythingAndKeepsReport) {
  const std::string before = read_text_file(*dir_ / "report" / "summary.json");
  Pipeline p(small_config(), *dir_);
  const auto again = p.run_all();
  for (const auto& s : again) EXPECT_FALSE(s.ran) << s.name;
  EXPECT_EQ(read_text_file(*dir_ / "report" / "summary.json"), before);
}

TEST_F(PipelineRun, AddedPolicySeedRerunsOnlyItsStages) {
  ExperimentConfig cfg = small_config();
  cfg.policy.seeds.push_back(3);
  Pipeline p(cfg, *dir_);
  const auto out = p.run_all();
  for (const char* up : {"generate", "split", "train-scorer", "extract", "augment"}) {
    EXPECT_EQ(count_ran(out, up), 0) << up;
  }
  EXPECT_EQ(count_ran(out, "policy/"), 7);
  EXPECT_EQ(count_ran(out, "eval/"), 7);
  for (const auto& s : out) {
    if (s.ran && s.name != "report") EXPECT_NE(s.name.find("seed-3"), std::string::npos) << s.name;
  }
  EXPECT_EQ(count_ran(out, "report"), 1);
  // Restore the original policies for the remaining tests.
  Pipeline(small_config(), *dir_).run_all();
}

TEST_F(PipelineRun, ReportBoundaryNumbersAreConsistent) {
  const json s = json::parse(read_text_file(*dir_ / "report" / "summary.json"));
  EXPECT_TRUE(s.at("missing").empty());
  for (const char* m : {"ps", "gt-relabel"}) {
    for (const auto& [tol, c] : s.at("extraction").at(m).at("boundary").items()) {
      const double matched = c.at("matched").get<double>();
      const double p = c.at("precision").get<double>();
      const double r = c.at("recall").get<double>();
      EXPECT_NEAR(p, matched / c.at("predicted").get<double>(), 1e-12);
      EXPECT_NEAR(r, matched / c.at("ground_truth").get<double>(), 1e-12);
      EXPECT_NEAR(c.at("f1").get<double>(), p + r > 0 ? 2 * p * r / (p + r) : 0.0, 1e-12);
    }
  }
  const auto& gt = s.at("extraction").at("gt-relabel").at("boundary").at("tolerance_0");
  EXPECT_DOUBLE_EQ(gt.at("f1").get<double>(), 1.0);
  for (const auto& [c, v] : s.at("policy").items()) {
    EXPECT_EQ(v.at("seeds").get<int>(), 2) << c;
    EXPECT_GE(v.at("mean").get<double>(), 0.0);
  }
}

TEST_F(PipelineRun, StageKeysChangeWithTheirSections) {
  Pipeline a(small_config(), *dir_);
  ExperimentConfig cfg = small_config();
  cfg.scorer.epochs += 1;
  Pipeline b(cfg, *dir_);
  EXPECT_EQ(a.stage_key("generate"), b.stage_key("generate"));
  EXPECT_NE(a.stage_key("scorer"), b.stage_key("scorer"));
  EXPECT_NE(a.stage_key("extract/ps"), b.stage_key("extract/ps"));
  EXPECT_NE(a.stage_key("extract/gt-relabel"), b.stage_key("extract/gt-relabel"));
  EXPECT_NE(a.stage_key("report"), b.stage_key("report"));
  // Restore the manifest written by the constructor above.
  Pipeline restore(small_config(), *dir_);
}
