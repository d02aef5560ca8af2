#include "playseg/synthgym.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <deque>
#include <set>

#include "playseg/error.hpp"

namespace playseg::gym {
namespace {

constexpr std::array<Action, 3> kMoveActions = {Action::kTurnLeft, Action::kTurnRight,
                                                Action::kForward};

int state_index(const Grid& g, Position p, Direction d) {
  return (p.y * g.width() + p.x) * 4 + static_cast<int>(d);
}

bool faces(const Grid& grid, Position pos, Direction dir, const Instruction& goal) {
  const Position f = step_forward(pos, dir);
  return grid.in_bounds(f) && goal.matches(grid.at(f));
}

std::optional<Instruction> faced_instruction(const EnvState& s) {
  const Position f = step_forward(s.agent_pos, s.agent_dir);
  if (!s.grid->in_bounds(f) || s.grid->at(f).empty()) return std::nullopt;
  const Cell& c = s.grid->at(f);
  return Instruction::from_object(c.type, c.color);
}

struct BfsResult {
  Action first_action = Action::kDone;
  int distance = 0;
};

std::optional<BfsResult> bfs(const EnvState& s) {
  const Grid& g = *s.grid;
  if (faces(g, s.agent_pos, s.agent_dir, s.goal)) return BfsResult{Action::kDone, 0};

  struct Node {
    Position pos;
    Direction dir;
    Action first;
    int depth;
  };
  std::vector<char> visited(static_cast<std::size_t>(g.width() * g.height() * 4), 0);
  std::deque<Node> queue;
  visited[static_cast<std::size_t>(state_index(g, s.agent_pos, s.agent_dir))] = 1;
  queue.push_back({s.agent_pos, s.agent_dir, Action::kDone, 0});
  while (!queue.empty()) {
    const Node n = queue.front();
    queue.pop_front();
    for (Action a : kMoveActions) {
      Node next = n;
      next.depth = n.depth + 1;
      next.first = n.depth == 0 ? a : n.first;
      if (a == Action::kTurnLeft) {
        next.dir = turn_left(n.dir);
      } else if (a == Action::kTurnRight) {
        next.dir = turn_right(n.dir);
      } else {
        const Position p = step_forward(n.pos, n.dir);
        if (!g.in_bounds(p) || !g.at(p).empty()) continue;
        next.pos = p;
      }
      auto& v = visited[static_cast<std::size_t>(state_index(g, next.pos, next.dir))];
      if (v) continue;
      v = 1;
      if (faces(g, next.pos, next.dir, s.goal)) return BfsResult{next.first, next.depth};
      queue.push_back(next);
    }
  }
  return std::nullopt;
}

// Goal drawn uniformly over objects whose description differs from the previous
// goal, is not currently faced and is reachable.
std::optional<Instruction> sample_goal(const EnvState& s, std::optional<Instruction> previous,
                                       std::mt19937_64& rng) {
  const auto faced = faced_instruction(s);
  std::vector<Instruction> candidates;
  const Grid& g = *s.grid;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const Cell& c = g.at({x, y});
      if (c.empty()) continue;
      const auto instr = Instruction::from_object(c.type, c.color);
      if (previous && instr == *previous) continue;
      if (faced && instr == *faced) continue;
      EnvState probe = s;
      probe.goal = instr;
      if (!bfs(probe)) continue;
      candidates.push_back(instr);
    }
  }
  if (candidates.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  return candidates[pick(rng)];
}

EnvState random_grid_and_agent(const EnvConfig& cfg, std::mt19937_64& rng) {
  auto grid = std::make_shared<Grid>(cfg.width, cfg.height);
  const int cells = cfg.width * cfg.height;
  std::vector<int> order(static_cast<std::size_t>(cells));
  for (int i = 0; i < cells; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> type(1, kNumObjectTypes);
  std::uniform_int_distribution<int> color(1, kNumColors);
  for (int k = 0; k < cfg.num_objects(); ++k) {
    const int c = order[static_cast<std::size_t>(k)];
    const int t = type(rng);
    const int col = color(rng);
    grid->at({c % cfg.width, c / cfg.width}) = {static_cast<std::uint8_t>(t),
                                                 static_cast<std::uint8_t>(col)};
  }
  const int agent_cell = order[static_cast<std::size_t>(cfg.num_objects())];
  std::uniform_int_distribution<int> dir(0, 3);
  EnvState s;
  s.grid = std::move(grid);
  s.agent_pos = {agent_cell % cfg.width, agent_cell / cfg.width};
  s.agent_dir = static_cast<Direction>(dir(rng));
  return s;
}

}  // namespace

void EnvConfig::validate() const {
  if (width < 1 || height < 1) throw ConfigError("grid dimensions must be positive");
  if (num_distractors < 0) throw ConfigError("num_distractors must be non-negative");
  if (num_objects() + 1 > width * height) throw ConfigError("too many objects for the grid");
}

bool EnvState::goal_reached() const { return faces(*grid, agent_pos, agent_dir, goal); }

StepResult step(const EnvState& state, Action action) {
  EnvState next = state;
  switch (action) {
    case Action::kTurnLeft: next.agent_dir = turn_left(state.agent_dir); break;
    case Action::kTurnRight: next.agent_dir = turn_right(state.agent_dir); break;
    case Action::kForward: {
      const Position p = step_forward(state.agent_pos, state.agent_dir);
      if (state.grid->in_bounds(p) && state.grid->at(p).empty()) next.agent_pos = p;
      break;
    }
    case Action::kDone: break;
  }
  Observation obs = next.observe();
  return {std::move(next), std::move(obs)};
}

std::optional<Action> bot_policy(const EnvState& state) {
  auto r = bfs(state);
  if (!r) return std::nullopt;
  return r->first_action;
}

std::optional<int> bot_distance(const EnvState& state) {
  auto r = bfs(state);
  if (!r) return std::nullopt;
  return r->distance;
}

std::vector<Instruction> present_instructions(const Grid& grid) {
  std::set<int> labels;
  for (const auto& c : grid.cells()) {
    if (!c.empty()) labels.insert(Instruction::from_object(c.type, c.color).label_id());
  }
  std::vector<Instruction> out;
  for (int l : labels) out.emplace_back(l);
  return out;
}

EnvState random_layout(const EnvConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  for (int attempt = 0; attempt < 1000; ++attempt) {
    EnvState s = random_grid_and_agent(cfg, rng);
    if (auto goal = sample_goal(s, std::nullopt, rng)) {
      s.goal = *goal;
      return s;
    }
  }
  throw DataError("could not generate a solvable layout");
}

PlayRecord generate_play_trajectory(std::uint64_t seed, const PlayConfig& cfg,
                                    std::int64_t trajectory_id) {
  if (cfg.num_tasks < 1) throw ConfigError("num_tasks must be at least 1");
  cfg.env.validate();
  std::mt19937_64 rng(seed);
  const int step_guard = cfg.env.width * cfg.env.height * 4 + 4;

  for (int attempt = 0; attempt < cfg.max_layout_attempts; ++attempt) {
    EnvState state = random_layout(cfg.env, rng);
    auto traj = std::make_shared<Trajectory>();
    traj->id = trajectory_id;
    traj->observations.push_back(state.observe());
    std::vector<std::uint8_t> boundaries;
    std::vector<Instruction> labels;
    bool failed = false;

    for (int task = 0; task < cfg.num_tasks && !failed; ++task) {
      if (task > 0) {
        auto goal = sample_goal(state, labels.back(), rng);
        if (!goal) {
          failed = true;
          break;
        }
        state.goal = *goal;
      }
      int steps = 0;
      while (!state.goal_reached()) {
        auto a = bot_policy(state);
        if (!a || ++steps > step_guard) {
          failed = true;
          break;
        }
        auto r = step(state, *a);
        state = std::move(r.state);
        traj->actions.push_back(*a);
        traj->observations.push_back(std::move(r.observation));
        boundaries.push_back(0);
      }
      if (failed) break;
      auto r = step(state, Action::kDone);
      state = std::move(r.state);
      traj->actions.push_back(Action::kDone);
      traj->observations.push_back(std::move(r.observation));
      boundaries.push_back(1);
      labels.push_back(state.goal);
    }
    if (failed) continue;

    validate(*traj);
    PlayRecord rec;
    rec.gt_boundaries = {trajectory_id, std::move(boundaries)};
    rec.gt_labels = std::move(labels);
    rec.trajectory = std::move(traj);
    return rec;
  }
  throw DataError("play generation failed: no solvable goal sequence after resampling");
}

std::vector<LabelledSegment> cut_segments(const PlayRecord& record) {
  const auto intervals = record.gt_segments();
  std::vector<LabelledSegment> out;
  out.reserve(intervals.size());
  for (std::size_t k = 0; k < intervals.size(); ++k) {
    out.push_back({record.trajectory->id, intervals[k].start, intervals[k].end,
                   record.gt_labels[k], 1.0});
  }
  return out;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (stream * 0x100000001B3ULL + index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

GeneratedData make_datasets(const DatasetConfig& cfg) {
  if (cfg.num_annotated_records < 1 || cfg.num_unannotated_records < 0 ||
      cfg.num_validation_records < 1) {
    throw ConfigError("dataset record counts must be positive");
  }
  constexpr std::int64_t kIdStride = 1'000'000;
  GeneratedData out;
  out.annotated_full.split_tag = SplitTag::kFull;
  out.validation.split_tag = SplitTag::kValidation;
  out.unannotated.split_tag = SplitTag::kUnannotated;

  for (int i = 0; i < cfg.num_annotated_records; ++i) {
    auto rec = generate_play_trajectory(derive_seed(cfg.seed, 1, static_cast<std::uint64_t>(i)),
                                        cfg.play, i);
    out.annotated_full.add_trajectory(rec.trajectory);
    for (auto& s : cut_segments(rec)) out.annotated_full.annotated.push_back(s);
  }
  std::mt19937_64 shuffle_rng(derive_seed(cfg.seed, 4, 0));
  std::shuffle(out.annotated_full.annotated.begin(), out.annotated_full.annotated.end(),
               shuffle_rng);

  for (int i = 0; i < cfg.num_validation_records; ++i) {
    const std::int64_t id = kIdStride + i;
    auto rec = generate_play_trajectory(derive_seed(cfg.seed, 2, static_cast<std::uint64_t>(i)),
                                        cfg.play, id);
    out.validation.add_trajectory(rec.trajectory);
    for (auto& s : cut_segments(rec)) out.validation.annotated.push_back(s);
  }

  for (int i = 0; i < cfg.num_unannotated_records; ++i) {
    const std::int64_t id = 2 * kIdStride + i;
    auto rec = generate_play_trajectory(derive_seed(cfg.seed, 3, static_cast<std::uint64_t>(i)),
                                        cfg.play, id);
    out.unannotated.add_trajectory(rec.trajectory);
    out.unannotated.unannotated.push_back(id);
    out.unannotated_truth.push_back(std::move(rec));
  }
  return out;
}

Dataset make_split(const Dataset& full, double fraction, SplitTag tag) {
  if (!(fraction >= 0.0) || fraction > 1.0) {
    throw DataError("requested split fraction is larger than the pool");
  }
  const auto n = static_cast<std::size_t>(
      std::floor(static_cast<double>(full.annotated.size()) * fraction + 1e-9));
  Dataset out;
  out.split_tag = tag;
  out.annotated.assign(full.annotated.begin(),
                       full.annotated.begin() + static_cast<std::ptrdiff_t>(n));
  for (const auto& s : out.annotated) {
    if (!out.has_trajectory(s.trajectory_id)) {
      out.add_trajectory(full.trajectory_ptr(s.trajectory_id));
    }
  }
  return out;
}

Dataset make_split(const Dataset& full, SplitTag tag) {
  return make_split(full, split_fraction(tag), tag);
}

}  // namespace playseg::gym
