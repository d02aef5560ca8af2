#include "playseg/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "playseg/error.hpp"

namespace playseg {

int policy_input_dim(const FeatureSchema& schema) {
  return schema.frame_dim() + kNumInstructions + FeatureSchema::kLabelWidth;
}

Eigen::VectorXd policy_input(const Observation& obs, const Instruction& instruction,
                             const FeatureSchema& schema) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(policy_input_dim(schema));
  frame_features(obs, nullptr, schema, x.head(schema.frame_dim()));
  x[schema.frame_dim() + instruction.label_id()] = 1.0;
  x.tail(FeatureSchema::kLabelWidth) = x.segment(
      schema.label_block_offset() + instruction.label_id() * FeatureSchema::kLabelWidth,
      FeatureSchema::kLabelWidth);
  return x;
}

PolicyModel::PolicyModel(FeatureSchema schema, Mlp network)
    : schema_(schema), network_(std::move(network)) {
  if (network_.input_dim() != policy_input_dim(schema_) || network_.output_dim() != kNumActions) {
    throw DataError("policy network does not match its feature schema");
  }
}

Eigen::VectorXd PolicyModel::action_distribution(const Observation& obs,
                                                 const Instruction& instruction) const {
  return softmax(network_.forward(policy_input(obs, instruction, schema_)));
}

Action PolicyModel::greedy_action(const Observation& obs, const Instruction& instruction) const {
  Eigen::Index a = 0;
  network_.forward(policy_input(obs, instruction, schema_)).maxCoeff(&a);
  return static_cast<Action>(a);
}

double policy_loss(const Mlp& net, const Eigen::MatrixXd& x, std::span<const int> actions,
                   MlpGradient* gradient) {
  if (x.rows() == 0 || static_cast<Eigen::Index>(actions.size()) != x.rows()) {
    throw DataError("policy loss needs one action per state");
  }
  const auto act = net.forward_batch(x);
  const Eigen::MatrixXd logp = log_softmax_rows(act.output);
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss -= logp(i, actions[static_cast<std::size_t>(i)]);
  loss /= n;
  if (gradient) {
    Eigen::MatrixXd d = logp.array().exp().matrix();
    for (Eigen::Index i = 0; i < x.rows(); ++i) d(i, actions[static_cast<std::size_t>(i)]) -= 1.0;
    d /= n;
    *gradient = net.backward_batch(x, act, d);
  }
  return loss;
}

void BcConfig::validate() const {
  if (hidden < 1 || updates < 0 || batch_size < 1 || !(learning_rate > 0.0)) {
    throw ConfigError("invalid behaviour cloning settings");
  }
}

PolicyModel train_bc(const Dataset& dataset, const FeatureSchema& schema, const BcConfig& cfg,
                     BcReport* report) {
  cfg.validate();
  if (dataset.annotated.empty()) throw DataError("cannot train a policy on an empty dataset");
  std::int64_t n = 0;
  for (const auto& s : dataset.annotated) n += s.length();
  Eigen::MatrixXd x(n, policy_input_dim(schema));
  std::vector<int> actions;
  actions.reserve(static_cast<std::size_t>(n));
  Eigen::Index r = 0;
  for (const auto& s : dataset.annotated) {
    const Trajectory& traj = dataset.trajectory(s.trajectory_id);
    for (int t = s.t0; t < s.t1; ++t) {
      x.row(r++) = policy_input(traj.observations[static_cast<std::size_t>(t)], s.instruction, schema)
                       .transpose();
      actions.push_back(static_cast<int>(traj.actions[static_cast<std::size_t>(t)]));
    }
  }

  std::mt19937_64 rng(cfg.seed);
  Mlp net(policy_input_dim(schema), cfg.hidden, kNumActions, cfg.seed ^ 0xB0C5ULL);
  std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
  Eigen::MatrixXd batch(cfg.batch_size, x.cols());
  std::vector<int> batch_actions(static_cast<std::size_t>(cfg.batch_size));
  BcReport rep;
  rep.samples = n;
  MlpGradient grad;
  double block = 0.0;
  int in_block = 0;
  for (int u = 0; u < cfg.updates; ++u) {
    for (int b = 0; b < cfg.batch_size; ++b) {
      const Eigen::Index i = pick(rng);
      batch.row(b) = x.row(i);
      batch_actions[static_cast<std::size_t>(b)] = actions[static_cast<std::size_t>(i)];
    }
    const double l = policy_loss(net, batch, batch_actions, &grad);
    if (!std::isfinite(l)) {
      throw TrainingDivergence("policy loss became non-finite at update " + std::to_string(u));
    }
    net.apply_gradient(grad, cfg.learning_rate);
    block += l;
    if (++in_block == 100 || u + 1 == cfg.updates) {
      rep.loss_curve.push_back(block / in_block);
      block = 0.0;
      in_block = 0;
    }
  }
  if (!net.all_finite()) throw TrainingDivergence("policy weights became non-finite");
  if (report) *report = std::move(rep);
  return PolicyModel(schema, std::move(net));
}

double PolicyEval::success_rate() const {
  return episodes > 0 ? static_cast<double>(successes) / static_cast<double>(episodes) : 0.0;
}

std::optional<double> PolicyEval::task_success_rate(int label) const {
  const auto i = static_cast<std::size_t>(label);
  if (task_episodes[i] == 0) return std::nullopt;
  return static_cast<double>(task_successes[i]) / static_cast<double>(task_episodes[i]);
}

PolicyEval evaluate_policy(const ActionFunction& policy, const EvalConfig& cfg) {
  cfg.env.validate();
  if (cfg.episodes < 1 || cfg.horizon < 1) throw ConfigError("invalid evaluation settings");
  PolicyEval eval;
  for (int ep = 0; ep < cfg.episodes; ++ep) {
    std::mt19937_64 rng(gym::derive_seed(cfg.seed, 5, static_cast<std::uint64_t>(ep)));
    gym::EnvState state = gym::random_layout(cfg.env, rng);
    const auto label = static_cast<std::size_t>(state.goal.label_id());
    bool success = false;
    for (int t = 0; t < cfg.horizon && !success; ++t) {
      const Action a = policy(state, rng);
      if (a == Action::kDone) break;
      state = gym::step(state, a).state;
      success = state.goal_reached();
    }
    ++eval.episodes;
    ++eval.task_episodes[label];
    if (success) {
      ++eval.successes;
      ++eval.task_successes[label];
    }
  }
  return eval;
}

PolicyEval evaluate_policy(const PolicyModel& policy, const EvalConfig& cfg) {
  const bool sample = cfg.sample_actions;
  return evaluate_policy(
      [&policy, sample](const gym::EnvState& s, std::mt19937_64& rng) {
        if (!sample) return policy.greedy_action(s.observe(), s.goal);
        const Eigen::VectorXd p = policy.action_distribution(s.observe(), s.goal);
        std::discrete_distribution<int> d(p.data(), p.data() + p.size());
        return static_cast<Action>(d(rng));
      },
      cfg);
}

ActionFunction bot_action_function() {
  return [](const gym::EnvState& s, std::mt19937_64&) {
    return gym::bot_policy(s).value_or(Action::kDone);
  };
}

ActionFunction random_action_function() {
  return [](const gym::EnvState&, std::mt19937_64& rng) {
    std::uniform_int_distribution<int> a(0, kNumActions - 1);
    return static_cast<Action>(a(rng));
  };
}

ImprovementTable per_task_improvement(const PolicyEval& base, const PolicyEval& augmented,
                                      std::span<const std::int64_t> added_counts) {
  if (base.task_episodes != augmented.task_episodes) {
    throw DataError("evaluations cover different task sets");
  }
  if (added_counts.size() != static_cast<std::size_t>(kNumInstructions)) {
    throw DataError("one added-sample count per instruction is required");
  }
  ImprovementTable table;
  std::vector<double> gains;
  std::vector<double> counts;
  for (int l = 0; l < kNumInstructions; ++l) {
    const auto b = base.task_success_rate(l);
    if (!b) continue;
    TaskImprovement row;
    row.label = l;
    row.base = *b;
    row.augmented = *augmented.task_success_rate(l);
    row.improvement = row.base >= 1.0 ? 0.0 : (row.augmented - row.base) / (1.0 - row.base);
    row.added = added_counts[static_cast<std::size_t>(l)];
    gains.push_back(row.improvement);
    counts.push_back(static_cast<double>(row.added));
    table.rows.push_back(row);
  }
  table.rank_correlation = spearman(counts, gains);
  return table;
}

namespace {

std::vector<double> average_ranks(std::span<const double> v) {
  std::vector<std::size_t> order(v.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> ranks(v.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

std::optional<double> spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw DataError("rank correlation needs paired samples");
  if (x.size() < 2) return std::nullopt;
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / n;
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace playseg
