#pragma once

// Experiment configuration: one JSON document (comments allowed) holding every
// tunable of the end-to-end run. Unknown keys are rejected.

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "playseg/baselines.hpp"
#include "playseg/features.hpp"
#include "playseg/policy.hpp"
#include "playseg/scorer.hpp"
#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

namespace playseg {

struct ExtractionConfig {
  int draws_per_trajectory = 20;  // windows drawn per play trajectory by sampling extractors
  std::uint64_t seed = 13;
  std::vector<int> tolerances{0, 1, 2};
};

struct AugmentSettings {
  bool confidence_filter = true;
  double target_accuracy = 0.9;
  std::uint64_t seed = 17;
};

struct CropSettings {
  FrameModelConfig model;
  CropRule rule;
};

struct PolicySettings {
  BcConfig bc;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<std::string> conditions;
};

/// Policy training conditions understood by the pipeline.
const std::vector<std::string>& known_conditions();

struct ExperimentConfig {
  gym::DatasetConfig data;
  double length_scale = 32.0;
  SplitTag starting_split = SplitTag::kTenth;
  ScorerConfig scorer;
  SegmenterConfig segmenter{0, Band{2, 0}, 0.5, 0};  // window / max_length <= 0: derived from data
  CropSettings crop;
  ExtractionConfig extraction;
  AugmentSettings augment;
  PolicySettings policy;
  EvalConfig evaluation;
  int workers = 1;

  FeatureSchema feature_schema() const;
  void validate() const;
};

ExperimentConfig default_experiment_config();
/// Throws ConfigError on syntax errors, unknown keys or invalid values.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::filesystem::path& file);
/// Canonical JSON (sorted keys, no comments); parse(dump(c)) == c.
std::string dump_experiment_config(const ExperimentConfig& cfg);
/// Canonical JSON of one top-level section, used for stage keys.
std::string config_section(const ExperimentConfig& cfg, const std::string& section);

/// Segmenter settings with derived values filled in from the starting split.
SegmenterConfig resolve_segmenter(const SegmenterConfig& cfg, const Dataset& starting_split);

}  // namespace playseg
