#pragma once

// Deterministic GoTo grid-world with distractors, a BFS solver bot, play
// trajectory generation and dataset assembly with known ground truth.

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "playseg/core_model.hpp"

namespace playseg::gym {

struct EnvConfig {
  int width = 8;
  int height = 8;
  int num_distractors = 7;  // objects besides the one the first goal refers to
  int num_objects() const { return num_distractors + 1; }
  void validate() const;
};

struct EnvState {
  GridPtr grid;
  Position agent_pos;
  Direction agent_dir = Direction::kEast;
  Instruction goal;

  Observation observe() const { return {grid, agent_pos, agent_dir}; }
  /// The cell in front of the agent holds an object matching the goal.
  bool goal_reached() const;
};

struct StepResult {
  EnvState state;
  Observation observation;
};

/// Deterministic transition. Forward into the grid edge or an object is a no-op,
/// as is the done marker.
StepResult step(const EnvState& state, Action action);

/// Greedy shortest-path action toward any instance of the goal; BFS over
/// (position, heading) with ties broken in action order left, right, forward.
/// Returns kDone when the goal is already reached and nullopt when it is unreachable.
std::optional<Action> bot_policy(const EnvState& state);

/// Length of the shortest action sequence reaching the goal, or nullopt.
std::optional<int> bot_distance(const EnvState& state);

/// Instructions describing at least one object on the grid, in label order.
std::vector<Instruction> present_instructions(const Grid& grid);

/// Random layout of cfg.num_objects() objects plus the agent; goal is drawn
/// uniformly over objects and is never already reached at the start.
EnvState random_layout(const EnvConfig& cfg, std::mt19937_64& rng);

struct PlayConfig {
  EnvConfig env;
  int num_tasks = 10;
  int max_layout_attempts = 100;
};

/// Chained bot rollouts: a new goal (different from the previous one and not
/// already reached) is sampled every time the current task is solved, and each
/// task segment ends with an explicit done action.
PlayRecord generate_play_trajectory(std::uint64_t seed, const PlayConfig& cfg,
                                    std::int64_t trajectory_id = 0);

struct DatasetConfig {
  PlayConfig play;
  int num_annotated_records = 300;    // play records cut into the annotated pool
  int num_unannotated_records = 300;  // kept intact as play trajectories
  int num_validation_records = 60;    // cut into the labelled validation split
  std::uint64_t seed = 1;
};

struct GeneratedData {
  Dataset annotated_full;   // all segments, shuffled once; nested splits are prefixes
  Dataset validation;
  Dataset unannotated;      // play trajectories only
  std::vector<PlayRecord> unannotated_truth;  // evaluation only
};

GeneratedData make_datasets(const DatasetConfig& cfg);

/// Nested split: the first floor(n * fraction) segments of the shuffled pool,
/// carrying only the parents they reference. Throws DataError when the fraction
/// requests more segments than the pool holds.
Dataset make_split(const Dataset& full, double fraction, SplitTag tag);
Dataset make_split(const Dataset& full, SplitTag tag);

/// Cuts every ground-truth segment of a record into a LabelledSegment.
std::vector<LabelledSegment> cut_segments(const PlayRecord& record);

/// Stable per-stream seed derivation (splitmix64).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index);

}  // namespace playseg::gym
