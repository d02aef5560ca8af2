#include "playseg/augment.hpp"

#include <algorithm>
#include <numeric>
#include <set>
#include <tuple>

#include "playseg/error.hpp"

namespace playseg {

ThresholdResult confidence_threshold(std::span<const double> confidence,
                                     std::span<const std::uint8_t> correct,
                                     double target_accuracy) {
  if (confidence.empty()) throw DataError("confidence threshold needs validation segments");
  if (confidence.size() != correct.size()) throw DataError("one correctness flag per confidence");
  std::vector<std::size_t> order(confidence.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return confidence[a] > confidence[b]; });

  // Accuracy of {conf >= t} for every distinct t, scanning from high to low.
  struct Level {
    double t;
    std::int64_t kept;
    std::int64_t hits;
  };
  std::vector<Level> levels;
  std::int64_t kept = 0;
  std::int64_t hits = 0;
  for (std::size_t i = 0; i < order.size(); ++i) {
    ++kept;
    hits += correct[order[i]] ? 1 : 0;
    const bool last_of_level =
        i + 1 == order.size() || confidence[order[i + 1]] < confidence[order[i]];
    if (last_of_level) levels.push_back({confidence[order[i]], kept, hits});
  }
  ThresholdResult r;
  r.total = static_cast<std::int64_t>(confidence.size());
  auto acc = [](const Level& l) { return static_cast<double>(l.hits) / static_cast<double>(l.kept); };
  // Threshold 0 keeps everything, like the lowest observed confidence.
  const Level& all = levels.back();
  if (acc(all) >= target_accuracy) {
    r.threshold = 0.0;
    r.accuracy = acc(all);
    r.kept = all.kept;
    return r;
  }
  for (auto it = levels.rbegin(); it != levels.rend(); ++it) {
    if (acc(*it) >= target_accuracy) {
      r.threshold = it->t;
      r.accuracy = acc(*it);
      r.kept = it->kept;
      return r;
    }
  }
  r.reachable = false;
  r.threshold = levels.front().t;
  r.accuracy = acc(levels.front());
  r.kept = levels.front().kept;
  return r;
}

ThresholdResult confidence_threshold_from_validation(const WindowScorer& model,
                                                     const Dataset& validation,
                                                     double target_accuracy) {
  if (validation.annotated.empty()) throw DataError("validation split is empty");
  std::vector<double> conf;
  std::vector<std::uint8_t> correct;
  for (const auto& seg : validation.annotated) {
    const Eigen::VectorXd dist =
        model.label_distribution(validation.trajectory(seg.trajectory_id), seg.t0, seg.t1);
    const int label = argmax(dist);
    conf.push_back(dist[label]);
    correct.push_back(label == seg.instruction.label_id() ? 1 : 0);
  }
  return confidence_threshold(conf, correct, target_accuracy);
}

std::vector<LabelledSegment> PsExtractor::extract(const Trajectory& play, int,
                                                  std::mt19937_64&) const {
  const auto seg = segment_play_trajectory(scorer_, play, cfg_);
  return label_segments(scorer_, play, seg.segments);
}

std::vector<LabelledSegment> PrecomputedExtractor::extract(const Trajectory& play, int round,
                                                           std::mt19937_64&) const {
  const auto it = candidates_.find(play.id);
  if (it == candidates_.end()) return {};
  if (exhaustive_) return it->second;
  if (round < 0 || round >= static_cast<int>(it->second.size())) return {};
  return {it->second[static_cast<std::size_t>(round)]};
}

std::vector<LabelledSegment> RandomExtractor::extract(const Trajectory& play, int,
                                                      std::mt19937_64& rng) const {
  auto s = random_segment_extract(range_, play, labeller_, rng);
  if (!s) return {};
  return {*s};
}

std::vector<LabelledSegment> FramecropExtractor::extract(const Trajectory& play, int,
                                                      std::mt19937_64& rng) const {
  auto s = framecrop_extract(classifier_, play, rule_, rng);
  if (!s) return {};
  return {*s};
}

std::vector<LabelledSegment> BoundarycropExtractor::extract(const Trajectory& play, int,
                                                      std::mt19937_64& rng) const {
  auto s = boundarycrop_extract(regressor_, play, min_length_, rng);
  if (!s) return {};
  return {*s};
}

AugmentResult run_augmentation(const Dataset& starting_split, const Dataset& unannotated,
                               const SegmentExtractor& extractor, const AugmentConfig& cfg) {
  if (cfg.target_size < starting_split.annotated.size()) {
    throw ConfigError("augmentation target is smaller than the starting split");
  }
  if (cfg.draws_per_trajectory < 1 || cfg.min_length < 1) {
    throw ConfigError("invalid augmentation budget");
  }
  AugmentResult out;
  out.dataset.split_tag = starting_split.split_tag;
  out.dataset.annotated = starting_split.annotated;
  for (const auto& [id, traj] : starting_split.trajectories()) out.dataset.add_trajectory(traj);

  using Key = std::tuple<std::int64_t, int, int>;
  std::set<Key> seen;
  for (const auto& s : starting_split.annotated) seen.insert({s.trajectory_id, s.t0, s.t1});

  std::vector<std::int64_t> order = unannotated.unannotated;
  std::mt19937_64 rng(cfg.seed);
  std::shuffle(order.begin(), order.end(), rng);
  const std::string method = extractor.method();
  const int rounds = extractor.exhaustive() ? 1 : cfg.draws_per_trajectory;

  auto full = [&] { return out.dataset.annotated.size() >= cfg.target_size; };
  for (int round = 0; round < rounds && !full(); ++round) {
    for (const auto id : order) {
      if (full()) break;
      const TrajectoryPtr traj = unannotated.trajectory_ptr(id);
      for (const auto& cand : extractor.extract(*traj, round, rng)) {
        if (full()) break;
        ++out.candidates;
        if (cand.trajectory_id != id || cand.t0 < 0 || cand.t1 > traj->length() ||
            cand.length() < cfg.min_length) {
          ++out.rejected_invalid;
          continue;
        }
        if (cfg.confidence_filter && cand.confidence < cfg.threshold) {
          ++out.rejected_confidence;
          continue;
        }
        if (!seen.insert({cand.trajectory_id, cand.t0, cand.t1}).second) {
          ++out.rejected_duplicate;
          continue;
        }
        if (!out.dataset.has_trajectory(id)) out.dataset.add_trajectory(traj);
        out.dataset.annotated.push_back(cand);
        out.added.push_back(
            {id, cand.t0, cand.t1, cand.instruction.label_id(), cand.confidence, method});
      }
    }
  }
  out.shortfall = !full();
  return out;
}

DatasetStats dataset_stats(std::span<const LabelledSegment> segments) {
  DatasetStats s;
  s.label_histogram.assign(kNumInstructions, 0);
  for (const auto& seg : segments) {
    ++s.segments;
    ++s.label_histogram[static_cast<std::size_t>(seg.instruction.label_id())];
    ++s.length_histogram[seg.length()];
  }
  return s;
}

DatasetStats dataset_stats(const Dataset& dataset) { return dataset_stats(dataset.annotated); }

}  // namespace playseg
