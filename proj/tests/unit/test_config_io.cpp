#include <gtest/gtest.h>

#include <filesystem>

#include "playseg/config.hpp"
#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"

using namespace playseg;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("playseg_unit_" + name);
  fs::remove_all(p);
  return p;
}

std::string slurp_dir(const fs::path& dir) {
  std::string all;
  for (const char* f : {"manifest.json", "trajectories.jsonl", "annotations.jsonl"}) {
    all += read_text_file(dir / f);
  }
  return all;
}

}  // namespace

TEST(Config, DumpParseRoundTrip) {
  const ExperimentConfig d = default_experiment_config();
  const std::string text = dump_experiment_config(d);
  EXPECT_EQ(dump_experiment_config(parse_experiment_config(text)), text);
  EXPECT_NO_THROW(d.validate());
}

TEST(Config, CommentsAndPartialSections) {
  const auto c = parse_experiment_config(
      "// header\n{\n  \"workers\": 3, // trailing\n  /* block */ \"scorer\": {\"epochs\": 5}\n}\n");
  EXPECT_EQ(c.workers, 3);
  EXPECT_EQ(c.scorer.epochs, 5);
  EXPECT_EQ(c.scorer.hidden, default_experiment_config().scorer.hidden);
}

TEST(Config, RejectsUnknownAndInvalid) {
  EXPECT_THROW(parse_experiment_config("{\"scorer\": {\"epoch\": 5}}"), ConfigError);
  EXPECT_THROW(parse_experiment_config("{\"colour\": 1}"), ConfigError);
  EXPECT_THROW(parse_experiment_config("{\"scorer\": {\"epochs\": 0}}"), ConfigError);
  EXPECT_THROW(parse_experiment_config("{\"policy\": {\"conditions\": [\"gt-33\"]}}"), ConfigError);
  EXPECT_THROW(parse_experiment_config("{"), ConfigError);
  EXPECT_THROW(load_experiment_config("/nonexistent/config.jsonc"), ConfigError);
}

TEST(Config, SegmenterResolvesFromData) {
  gym::DatasetConfig dc;
  dc.num_annotated_records = 4;
  dc.num_unannotated_records = 1;
  dc.num_validation_records = 1;
  const auto data = gym::make_datasets(dc);
  const auto r = resolve_segmenter(default_experiment_config().segmenter, data.annotated_full);
  int longest = 0;
  for (const auto& s : data.annotated_full.annotated) longest = std::max(longest, s.length());
  EXPECT_EQ(r.band.max_length, longest);
  EXPECT_EQ(r.window, 2 * longest);
}

TEST(DatasetIo, ByteStableRoundTrip) {
  gym::DatasetConfig dc;
  dc.num_annotated_records = 3;
  dc.num_unannotated_records = 2;
  dc.num_validation_records = 1;
  const auto data = gym::make_datasets(dc);
  DatasetManifest m;
  m.seed = 1;
  const fs::path a = scratch("io_a");
  const fs::path b = scratch("io_b");
  save_dataset(data.annotated_full, m, a);
  DatasetManifest back;
  const Dataset loaded = load_dataset(a, &back);
  save_dataset(loaded, back, b);
  EXPECT_EQ(slurp_dir(a), slurp_dir(b));
  ASSERT_EQ(loaded.annotated.size(), data.annotated_full.annotated.size());
  for (std::size_t i = 0; i < loaded.annotated.size(); ++i) {
    EXPECT_EQ(loaded.annotated[i].interval(), data.annotated_full.annotated[i].interval());
  }
  for (const auto& [id, t] : data.annotated_full.trajectories()) {
    EXPECT_EQ(loaded.trajectory(id).observations, t->observations);
    EXPECT_EQ(loaded.trajectory(id).actions, t->actions);
  }

  const fs::path u = scratch("io_u");
  save_dataset(data.unannotated, m, u);
  save_ground_truth(data.unannotated_truth, u);
  const Dataset lu = load_dataset(u);
  const auto gt = load_ground_truth(u, lu);
  ASSERT_EQ(gt.size(), data.unannotated_truth.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    EXPECT_EQ(gt[i].gt_boundaries, data.unannotated_truth[i].gt_boundaries);
    EXPECT_EQ(gt[i].gt_labels, data.unannotated_truth[i].gt_labels);
  }
  EXPECT_THROW(load_dataset(scratch("io_missing")), DataError);
  for (const auto& p : {a, b, u}) fs::remove_all(p);
}
