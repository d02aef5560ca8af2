#pragma once

// On-disk dataset format. One directory per split:
//
//   manifest.json       schema version, grid dimensions, |instructions|, RNG seed, split tag
//   trajectories.jsonl  {"actions":[..],"grids":[[cell codes..]..],"id":N,"poses":[[x,y,dir]..],
//                        "role":"parent"|"play"}
//   annotations.jsonl   {"label_id":L,"t0":A,"t1":B,"trajectory_id":N}
//   ground_truth.jsonl  optional, evaluation only: {"boundaries":[..],"labels":[..],"trajectory_id":N}
//
// Every file is written with sorted keys and one record per line, so loading and
// re-saving a dataset is byte-stable.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "playseg/core_model.hpp"

namespace playseg {

inline constexpr int kDatasetSchemaVersion = 1;

struct DatasetManifest {
  int schema_version = kDatasetSchemaVersion;
  int grid_width = 8;
  int grid_height = 8;
  int num_labels = kNumInstructions;
  std::uint64_t seed = 0;
  SplitTag split = SplitTag::kFull;
  int num_tasks = 10;
  /// Each task segment ends with an explicit done action.
  bool done_marker = true;
  int min_segment_length = 0;
  int max_segment_length = 0;
};

void save_dataset(const Dataset& dataset, const DatasetManifest& manifest,
                  const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir, DatasetManifest* manifest = nullptr);
DatasetManifest load_manifest(const std::filesystem::path& dir);

void save_ground_truth(const std::vector<PlayRecord>& records, const std::filesystem::path& dir);
/// Loads ground truth for the play trajectories of an already loaded dataset.
std::vector<PlayRecord> load_ground_truth(const std::filesystem::path& dir, const Dataset& dataset);

void write_trajectories(const std::vector<TrajectoryPtr>& trajectories,
                        const std::filesystem::path& file);
std::vector<TrajectoryPtr> read_trajectories(const std::filesystem::path& file);

void write_segments(const std::vector<LabelledSegment>& segments,
                    const std::filesystem::path& file, bool with_confidence);
std::vector<LabelledSegment> read_segments(const std::filesystem::path& file);

/// Whole-file helpers used by report and pipeline code.
std::string read_text_file(const std::filesystem::path& file);
void write_text_file(const std::filesystem::path& file, const std::string& text);

}  // namespace playseg
