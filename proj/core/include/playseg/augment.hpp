#pragma once

// Growing a small annotated split with labelled segments extracted from
// unannotated play, filtered by label confidence.

#include <cstdint>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "playseg/baselines.hpp"
#include "playseg/core_model.hpp"
#include "playseg/scorer.hpp"
#include "playseg/segmenter.hpp"

namespace playseg {

struct ThresholdResult {
  double threshold = 0.0;
  double accuracy = 0.0;  // label accuracy among validation segments at or above the threshold
  std::int64_t kept = 0;
  std::int64_t total = 0;
  bool reachable = true;  // false: no threshold reaches the target; the max confidence is returned
};

/// Smallest t among {0} and the observed confidences such that the segments
/// with confidence >= t reach `target_accuracy`.
ThresholdResult confidence_threshold(std::span<const double> confidence,
                                     std::span<const std::uint8_t> correct,
                                     double target_accuracy);
/// Labels every validation segment with the label head first. Throws DataError
/// on an empty validation set.
ThresholdResult confidence_threshold_from_validation(const WindowScorer& model,
                                                     const Dataset& validation,
                                                     double target_accuracy = 0.9);

class SegmentExtractor {
 public:
  virtual ~SegmentExtractor() = default;
  virtual std::string method() const = 0;
  /// Exhaustive extractors return all candidates of a trajectory in one call.
  virtual bool exhaustive() const { return false; }
  /// `round` counts previous visits of the same trajectory.
  virtual std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                               std::mt19937_64& rng) const = 0;
};

class PsExtractor : public SegmentExtractor {
 public:
  PsExtractor(const WindowScorer& scorer, SegmenterConfig cfg) : scorer_(scorer), cfg_(cfg) {}
  std::string method() const override { return "ps"; }
  bool exhaustive() const override { return true; }
  std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                       std::mt19937_64& rng) const override;

 private:
  const WindowScorer& scorer_;
  SegmenterConfig cfg_;
};

/// Replays candidates computed ahead of time (for example in parallel). When not
/// exhaustive, round r yields the r-th candidate of the trajectory.
class PrecomputedExtractor : public SegmentExtractor {
 public:
  PrecomputedExtractor(std::string method,
                       std::map<std::int64_t, std::vector<LabelledSegment>> candidates,
                       bool exhaustive)
      : method_(std::move(method)), candidates_(std::move(candidates)), exhaustive_(exhaustive) {}
  std::string method() const override { return method_; }
  bool exhaustive() const override { return exhaustive_; }
  std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                       std::mt19937_64& rng) const override;

 private:
  std::string method_;
  std::map<std::int64_t, std::vector<LabelledSegment>> candidates_;
  bool exhaustive_;
};

class RandomExtractor : public SegmentExtractor {
 public:
  RandomExtractor(LengthRange range, const WindowScorer& labeller)
      : range_(range), labeller_(labeller) {}
  std::string method() const override { return "random"; }
  std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                       std::mt19937_64& rng) const override;

 private:
  LengthRange range_;
  const WindowScorer& labeller_;
};

class FramecropExtractor : public SegmentExtractor {
 public:
  FramecropExtractor(const FrameClassifier& classifier, CropRule rule)
      : classifier_(classifier), rule_(rule) {}
  std::string method() const override { return "framecrop"; }
  std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                       std::mt19937_64& rng) const override;

 private:
  const FrameClassifier& classifier_;
  CropRule rule_;
};

class BoundarycropExtractor : public SegmentExtractor {
 public:
  BoundarycropExtractor(const BoundaryRegressor& regressor, int min_length)
      : regressor_(regressor), min_length_(min_length) {}
  std::string method() const override { return "boundarycrop"; }
  std::vector<LabelledSegment> extract(const Trajectory& play, int round,
                                       std::mt19937_64& rng) const override;

 private:
  const BoundaryRegressor& regressor_;
  int min_length_;
};

struct AugmentConfig {
  std::size_t target_size = 0;
  bool confidence_filter = true;
  double threshold = 0.0;
  int draws_per_trajectory = 20;  // budget for non-exhaustive extractors
  int min_length = 1;
  std::uint64_t seed = 17;
};

struct Provenance {
  std::int64_t trajectory_id = 0;
  int t0 = 0;
  int t1 = 0;
  int label_id = 0;
  double confidence = 0.0;
  std::string method;
};

struct AugmentResult {
  Dataset dataset;
  std::vector<Provenance> added;
  bool shortfall = false;
  std::int64_t candidates = 0;
  std::int64_t rejected_confidence = 0;
  std::int64_t rejected_duplicate = 0;
  std::int64_t rejected_invalid = 0;
};

/// Visits the unannotated trajectories round-robin in a seeded order and adds
/// accepted candidates until the dataset holds target_size segments. The
/// starting split's records are copied unchanged.
AugmentResult run_augmentation(const Dataset& starting_split, const Dataset& unannotated,
                               const SegmentExtractor& extractor, const AugmentConfig& cfg);

struct DatasetStats {
  std::int64_t segments = 0;
  std::vector<std::int64_t> label_histogram;    // indexed by label id
  std::map<int, std::int64_t> length_histogram;  // transitions -> count
};

DatasetStats dataset_stats(std::span<const LabelledSegment> segments);
DatasetStats dataset_stats(const Dataset& dataset);

}  // namespace playseg
