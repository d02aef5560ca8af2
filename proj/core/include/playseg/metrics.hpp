#pragma once

// Segmentation quality: boundary precision/recall, F1, label accuracy and
// interval overlap. A boundary point is the observation index at which a
// segment ends (alpha_i = 1 gives point i + 1).

#include <cstdint>
#include <optional>
#include <set>
#include <span>
#include <vector>

#include "playseg/core_model.hpp"

namespace playseg {

std::set<int> boundary_points(const Segmentation& seg);
/// End points of a tiling segmentation.
std::set<int> end_points(std::span<const Interval> segments);
/// Both ends of isolated segments, without the trivial start 0.
std::set<int> crop_points(std::span<const Interval> segments);

struct BoundaryCounts {
  std::int64_t predicted = 0;
  std::int64_t ground_truth = 0;
  std::int64_t matched = 0;

  BoundaryCounts& operator+=(const BoundaryCounts& o);
  /// nullopt when nothing was predicted.
  std::optional<double> precision() const;
  /// nullopt when there is no ground truth.
  std::optional<double> recall() const;
};

/// Exact set intersection for tolerance 0, otherwise greedy one-to-one matching:
/// predicted points in ascending order take the nearest unmatched ground-truth
/// point within the tolerance (the earlier one on ties).
BoundaryCounts match_boundaries(const std::set<int>& predicted, const std::set<int>& ground_truth,
                                int tolerance = 0);

struct PrecisionRecall {
  std::optional<double> precision;
  double recall = 0.0;
};

/// Throws DataError when the ground truth has no boundary.
PrecisionRecall boundary_precision_recall(const std::set<int>& predicted,
                                          const Segmentation& ground_truth, int tolerance = 0);
PrecisionRecall boundary_precision_recall(const Segmentation& predicted,
                                          const Segmentation& ground_truth, int tolerance = 0);

/// Harmonic mean, 0 when either input is 0.
double f1(double precision, double recall);
std::optional<double> f1(std::optional<double> precision, std::optional<double> recall);

/// Ground-truth instruction active on each transition t = 0..T-1.
std::vector<int> transition_labels(const PlayRecord& record);

/// Most frequent ground-truth label over transitions t0..t1-1; ties go to the
/// label that occurs first.
int majority_label(std::span<const int> transition_labels, int t0, int t1);

struct LabelAccuracy {
  std::int64_t total = 0;
  std::int64_t majority_correct = 0;
  std::int64_t strict_correct = 0;

  LabelAccuracy& operator+=(const LabelAccuracy& o);
  std::optional<double> majority() const;
  std::optional<double> strict() const;
};

/// Majority rule: the label matches the instruction active over most of the
/// segment. Strict rule: the segment equals a ground-truth segment and carries
/// its label. Both undercount when two instructions are satisfied together.
LabelAccuracy label_accuracy(std::span<const LabelledSegment> predicted, const PlayRecord& record);

/// Overlap of transition ranges [start, end).
double iou(const Interval& a, const Interval& b);
double best_iou(const Interval& a, std::span<const Interval> ground_truth);

}  // namespace playseg
