#include "playseg/metrics.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>

#include "playseg/error.hpp"

namespace playseg {

std::set<int> boundary_points(const Segmentation& seg) {
  std::set<int> out;
  for (int i = 0; i < seg.length(); ++i) {
    if (seg.boundaries[static_cast<std::size_t>(i)]) out.insert(i + 1);
  }
  return out;
}

std::set<int> end_points(std::span<const Interval> segments) {
  std::set<int> out;
  for (const auto& s : segments) out.insert(s.end);
  return out;
}

std::set<int> crop_points(std::span<const Interval> segments) {
  std::set<int> out;
  for (const auto& s : segments) {
    if (s.start != 0) out.insert(s.start);
    out.insert(s.end);
  }
  return out;
}

BoundaryCounts& BoundaryCounts::operator+=(const BoundaryCounts& o) {
  predicted += o.predicted;
  ground_truth += o.ground_truth;
  matched += o.matched;
  return *this;
}

std::optional<double> BoundaryCounts::precision() const {
  if (predicted == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(predicted);
}

std::optional<double> BoundaryCounts::recall() const {
  if (ground_truth == 0) return std::nullopt;
  return static_cast<double>(matched) / static_cast<double>(ground_truth);
}

BoundaryCounts match_boundaries(const std::set<int>& predicted, const std::set<int>& ground_truth,
                                int tolerance) {
  if (tolerance < 0) throw ConfigError("boundary tolerance must be non-negative");
  BoundaryCounts c;
  c.predicted = static_cast<std::int64_t>(predicted.size());
  c.ground_truth = static_cast<std::int64_t>(ground_truth.size());
  if (tolerance == 0) {
    for (int p : predicted) c.matched += ground_truth.contains(p);
    return c;
  }
  std::set<int> free = ground_truth;
  for (int p : predicted) {
    auto it = free.lower_bound(p - tolerance);
    auto best = free.end();
    for (; it != free.end() && *it <= p + tolerance; ++it) {
      if (best == free.end() || std::abs(*it - p) < std::abs(*best - p)) best = it;
    }
    if (best != free.end()) {
      free.erase(best);
      ++c.matched;
    }
  }
  return c;
}

PrecisionRecall boundary_precision_recall(const std::set<int>& predicted,
                                          const Segmentation& ground_truth, int tolerance) {
  const auto gt = boundary_points(ground_truth);
  if (gt.empty()) throw DataError("ground-truth segmentation has no boundary");
  const auto c = match_boundaries(predicted, gt, tolerance);
  return {c.precision(), *c.recall()};
}

PrecisionRecall boundary_precision_recall(const Segmentation& predicted,
                                          const Segmentation& ground_truth, int tolerance) {
  if (predicted.length() != ground_truth.length()) {
    throw DataError("segmentations cover different trajectory lengths");
  }
  return boundary_precision_recall(boundary_points(predicted), ground_truth, tolerance);
}

double f1(double precision, double recall) {
  if (precision <= 0.0 || recall <= 0.0) return 0.0;
  return 2.0 * precision * recall / (precision + recall);
}

std::optional<double> f1(std::optional<double> precision, std::optional<double> recall) {
  if (!precision || !recall) return std::nullopt;
  return f1(*precision, *recall);
}

std::vector<int> transition_labels(const PlayRecord& record) {
  const auto segs = record.gt_segments();
  if (segs.size() != record.gt_labels.size()) {
    throw DataError("ground-truth labels do not match the segment count");
  }
  std::vector<int> out(static_cast<std::size_t>(record.gt_boundaries.length()), 0);
  for (std::size_t k = 0; k < segs.size(); ++k) {
    for (int t = segs[k].start; t < segs[k].end; ++t) {
      out[static_cast<std::size_t>(t)] = record.gt_labels[k].label_id();
    }
  }
  return out;
}

int majority_label(std::span<const int> labels, int t0, int t1) {
  if (t0 < 0 || t1 > static_cast<int>(labels.size()) || t0 >= t1) {
    throw DataError("segment outside the labelled transitions");
  }
  std::array<int, kNumInstructions> counts{};
  std::array<int, kNumInstructions> first{};
  first.fill(t1);
  for (int t = t0; t < t1; ++t) {
    const auto l = static_cast<std::size_t>(labels[static_cast<std::size_t>(t)]);
    if (counts[l]++ == 0) first[l] = t;
  }
  int best = 0;
  for (int l = 1; l < kNumInstructions; ++l) {
    const auto i = static_cast<std::size_t>(l);
    const auto b = static_cast<std::size_t>(best);
    if (counts[i] > counts[b] || (counts[i] == counts[b] && first[i] < first[b])) best = l;
  }
  return best;
}

LabelAccuracy& LabelAccuracy::operator+=(const LabelAccuracy& o) {
  total += o.total;
  majority_correct += o.majority_correct;
  strict_correct += o.strict_correct;
  return *this;
}

std::optional<double> LabelAccuracy::majority() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(majority_correct) / static_cast<double>(total);
}

std::optional<double> LabelAccuracy::strict() const {
  if (total == 0) return std::nullopt;
  return static_cast<double>(strict_correct) / static_cast<double>(total);
}

LabelAccuracy label_accuracy(std::span<const LabelledSegment> predicted, const PlayRecord& record) {
  const auto labels = transition_labels(record);
  const auto segs = record.gt_segments();
  LabelAccuracy acc;
  for (const auto& p : predicted) {
    ++acc.total;
    const int label = p.instruction.label_id();
    if (majority_label(labels, p.t0, p.t1) == label) ++acc.majority_correct;
    for (std::size_t k = 0; k < segs.size(); ++k) {
      if (segs[k] == p.interval() && record.gt_labels[k].label_id() == label) {
        ++acc.strict_correct;
        break;
      }
    }
  }
  return acc;
}

double iou(const Interval& a, const Interval& b) {
  const int inter = std::max(0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const int uni = a.length() + b.length() - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double best_iou(const Interval& a, std::span<const Interval> ground_truth) {
  double best = 0.0;
  for (const auto& g : ground_truth) best = std::max(best, iou(a, g));
  return best;
}

}  // namespace playseg
