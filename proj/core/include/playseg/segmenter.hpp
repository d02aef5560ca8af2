#pragma once

// Maximum-likelihood segmentation of observation sequences.
//
// For a window of T transitions, p(i, j) = p_Seg(alpha_j = 1 | o_{i..j+1}) is
// defined for lengths minlen <= j + 1 - i <= maxlen. A segment (s, e) contributes
//
//   sum_{j = s + minlen - 1}^{e - 2} log(1 - p(s, j)) + log p(s, e - 1)
//
// to the log-likelihood of a complete segmentation; positions closer than
// minlen to the segment start carry no term.

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "playseg/core_model.hpp"
#include "playseg/scorer.hpp"

namespace playseg {

struct Band {
  int min_length = 1;
  int max_length = 1;

  bool contains(int length) const { return length >= min_length && length <= max_length; }
  void validate() const;
};

/// #{(i, j) : 0 <= i <= j <= T - 1, minlen <= j + 1 - i <= maxlen}.
std::int64_t band_pair_count(int length, const Band& band);

inline constexpr double kProbabilityClamp = 1e-12;
double clamp_probability(double p);

class ScoreMatrix {
 public:
  ScoreMatrix() = default;
  ScoreMatrix(int length, Band band);

  int length() const { return length_; }
  const Band& band() const { return band_; }
  bool in_band(int i, int j) const {
    return i >= 0 && j >= i && j < length_ && band_.contains(j + 1 - i);
  }
  /// Throws std::out_of_range outside the band.
  double at(int i, int j) const;
  void set(int i, int j, double p);
  /// Number of scorer evaluations spent filling the matrix.
  std::int64_t evaluations = 0;

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(length_) +
           static_cast<std::size_t>(j);
  }
  int length_ = 0;
  Band band_;
  std::vector<double> p_;
};

using WindowProbability = std::function<double(int t0, int t1)>;

/// Fills every band entry with prob(i, j + 1); window-relative indices.
ScoreMatrix build_score_matrix(const WindowProbability& prob, int length, const Band& band);
/// Scores o_{offset .. offset + length} of `traj`.
ScoreMatrix build_score_matrix(const WindowScorer& scorer, const Trajectory& traj, int offset,
                               int length, const Band& band);

struct SegmentationResult {
  bool feasible = false;
  double log_likelihood = 0.0;
  Segmentation segmentation;
  std::vector<Interval> segments;
  std::int64_t inner_updates = 0;  // DP transitions evaluated
};

/// Cubic dynamic program. Among equally likely segmentations it prefers the
/// fewest segments, then the earliest split points.
SegmentationResult dp_segment(const ScoreMatrix& scores);

inline constexpr int kBruteForceMaxLength = 20;
/// Exhaustive search over all complete boundary vectors; T <= 20.
SegmentationResult brute_force_segment(const ScoreMatrix& scores);

/// Log-likelihood of a complete boundary vector under the factorization, or
/// nullopt when it violates the band.
std::optional<double> evaluate_segmentation(const ScoreMatrix& scores,
                                            std::span<const std::uint8_t> alpha);

struct SegmenterConfig {
  int window = 40;
  Band band{2, 24};
  double advance_threshold = 0.5;
  int stall_advance = 0;  // <= 0 selects band.min_length

  int effective_stall_advance() const {
    return stall_advance > 0 ? stall_advance : band.min_length;
  }
  void validate() const;
};

struct WindowRecord {
  int start = 0;
  int end = 0;
  std::int64_t evaluations = 0;
  std::int64_t inner_updates = 0;
  bool feasible = true;
};

struct PlaySegmentation {
  std::int64_t trajectory_id = 0;
  std::vector<Interval> segments;  // committed, in order
  std::vector<WindowRecord> windows;
  std::vector<int> stalls;          // window starts at which a forced advance happened
  std::vector<Interval> gaps;       // spans skipped by forced advances or infeasible tails
  std::int64_t evaluations = 0;
  std::int64_t inner_updates = 0;
};

/// Slides a window of cfg.window transitions over the trajectory, segmenting
/// each window with dp_segment and applying the advance rule to its last segment.
PlaySegmentation segment_play_trajectory(const WindowScorer& scorer, const Trajectory& traj,
                                         const SegmenterConfig& cfg);

/// Argmax label and its probability as confidence.
std::vector<LabelledSegment> label_segments(const WindowScorer& scorer, const Trajectory& traj,
                                            std::span<const Interval> segments);

}  // namespace playseg
