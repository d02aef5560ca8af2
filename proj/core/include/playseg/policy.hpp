#pragma once

// Instruction-conditioned behaviour cloning and online evaluation in the grid-world.

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "playseg/core_model.hpp"
#include "playseg/features.hpp"
#include "playseg/mlp.hpp"
#include "playseg/synthgym.hpp"

namespace playseg {

/// Frame features of the current observation, the instruction one-hot and a copy
/// of the frame's feature block for the instructed object.
int policy_input_dim(const FeatureSchema& schema);
Eigen::VectorXd policy_input(const Observation& obs, const Instruction& instruction,
                             const FeatureSchema& schema);

class PolicyModel {
 public:
  PolicyModel() = default;
  PolicyModel(FeatureSchema schema, Mlp network);

  Eigen::VectorXd action_distribution(const Observation& obs, const Instruction& instruction) const;
  Action greedy_action(const Observation& obs, const Instruction& instruction) const;

  const FeatureSchema& schema() const { return schema_; }
  const Mlp& network() const { return network_; }

 private:
  FeatureSchema schema_;
  Mlp network_;
};

/// Mean cross-entropy of the demonstrated actions.
double policy_loss(const Mlp& net, const Eigen::MatrixXd& x, std::span<const int> actions,
                   MlpGradient* gradient = nullptr);

struct BcConfig {
  int hidden = 128;
  double learning_rate = 0.1;
  int updates = 3000;
  int batch_size = 64;
  std::uint64_t seed = 23;
  void validate() const;
};

struct BcReport {
  std::int64_t samples = 0;
  std::vector<double> loss_curve;  // minibatch loss, averaged over blocks of 100 updates
};

/// One sample per transition t0..t1-1 of every segment: (o_t, instruction, a_t).
/// Minibatches are drawn uniformly with replacement from that pool.
PolicyModel train_bc(const Dataset& dataset, const FeatureSchema& schema, const BcConfig& cfg,
                     BcReport* report = nullptr);

struct EvalConfig {
  gym::EnvConfig env;
  int episodes = 512;
  int horizon = 25;
  std::uint64_t seed = 99;
  bool sample_actions = false;
};

struct PolicyEval {
  std::int64_t episodes = 0;
  std::int64_t successes = 0;
  std::vector<std::int64_t> task_episodes = std::vector<std::int64_t>(kNumInstructions, 0);
  std::vector<std::int64_t> task_successes = std::vector<std::int64_t>(kNumInstructions, 0);

  double success_rate() const;
  std::optional<double> task_success_rate(int label) const;
};

using ActionFunction = std::function<Action(const gym::EnvState& state, std::mt19937_64& rng)>;

/// Fresh random layouts per episode; success when the goal is faced within the
/// horizon. A done action ends the episode.
PolicyEval evaluate_policy(const ActionFunction& policy, const EvalConfig& cfg);
PolicyEval evaluate_policy(const PolicyModel& policy, const EvalConfig& cfg);

ActionFunction bot_action_function();
ActionFunction random_action_function();

struct TaskImprovement {
  int label = 0;
  double base = 0.0;
  double augmented = 0.0;
  double improvement = 0.0;  // (aug - base) / (1 - base), 0 when base = 1
  std::int64_t added = 0;
};

struct ImprovementTable {
  std::vector<TaskImprovement> rows;
  std::optional<double> rank_correlation;  // Spearman; nullopt when undefined
};

/// Throws DataError when the evaluations cover different task sets.
ImprovementTable per_task_improvement(const PolicyEval& base, const PolicyEval& augmented,
                                      std::span<const std::int64_t> added_counts);

/// Spearman rank correlation with average ranks for ties; nullopt when either
/// input is constant or shorter than two.
std::optional<double> spearman(std::span<const double> x, std::span<const double> y);

}  // namespace playseg
