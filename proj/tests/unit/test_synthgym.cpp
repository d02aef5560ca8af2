#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "playseg/error.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;
using namespace playseg::gym;

namespace {

EnvState corridor(int length) {
  auto g = std::make_shared<Grid>(length + 2, 1);
  g->at({length + 1, 0}) = Cell{2, 3};
  EnvState s;
  s.grid = g;
  s.agent_pos = {0, 0};
  s.agent_dir = Direction::kEast;
  s.goal = Instruction::from_object(2, 3);
  return s;
}

}  // namespace

TEST(Gym, TurnsAreInverse) {
  for (int d = 0; d < 4; ++d) {
    const auto dir = static_cast<Direction>(d);
    EXPECT_EQ(turn_right(turn_left(dir)), dir);
    EXPECT_EQ(turn_left(turn_left(turn_left(turn_left(dir)))), dir);
  }
}

TEST(Gym, ForwardIntoEdgeIsNoOp) {
  EnvState s = corridor(3);
  s.agent_dir = Direction::kWest;
  EXPECT_EQ(step(s, Action::kForward).state.agent_pos, (Position{0, 0}));
  s.agent_dir = Direction::kNorth;
  EXPECT_EQ(step(s, Action::kForward).state.agent_pos, (Position{0, 0}));
}

TEST(Gym, FacingGoalIsComplete) {
  EnvState s = corridor(0);
  EXPECT_TRUE(s.goal_reached());
  EXPECT_EQ(bot_distance(s), 0);
  EXPECT_EQ(bot_policy(s), Action::kDone);
}

TEST(Gym, CorridorDistanceEqualsLength) {
  for (int len = 1; len <= 6; ++len) {
    EnvState s = corridor(len);
    EXPECT_EQ(bot_distance(s), len);
    int steps = 0;
    while (!s.goal_reached()) {
      const auto a = bot_policy(s);
      ASSERT_TRUE(a.has_value());
      EXPECT_EQ(*a, Action::kForward);
      s = step(s, *a).state;
      ++steps;
    }
    EXPECT_EQ(steps, len);
  }
}

TEST(Gym, BotSolvesRandomLayouts) {
  EnvConfig cfg;
  std::mt19937_64 rng(4);
  int solved = 0;
  for (int ep = 0; ep < 1000; ++ep) {
    EnvState s = random_layout(cfg, rng);
    ASSERT_FALSE(s.goal_reached());
    for (int t = 0; t < 200 && !s.goal_reached(); ++t) s = step(s, *bot_policy(s)).state;
    solved += s.goal_reached();
  }
  EXPECT_EQ(solved, 1000);
}

TEST(Gym, SingleTaskRecord) {
  PlayConfig cfg;
  cfg.num_tasks = 1;
  const PlayRecord r = generate_play_trajectory(9, cfg, 5);
  EXPECT_EQ(r.gt_labels.size(), 1u);
  const auto& a = r.gt_boundaries.boundaries;
  EXPECT_EQ(a.back(), 1);
  EXPECT_EQ(std::count(a.begin(), a.end(), 1), 1);
  EXPECT_EQ(r.trajectory->id, 5);
}

TEST(Gym, PlayIsDeterministic) {
  PlayConfig cfg;
  const PlayRecord a = generate_play_trajectory(17, cfg);
  const PlayRecord b = generate_play_trajectory(17, cfg);
  EXPECT_EQ(a.gt_boundaries, b.gt_boundaries);
  EXPECT_EQ(a.gt_labels, b.gt_labels);
  EXPECT_EQ(a.trajectory->actions, b.trajectory->actions);
  EXPECT_EQ(a.trajectory->observations, b.trajectory->observations);
}

TEST(Gym, TaskCountAndDoneMarkers) {
  PlayConfig cfg;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const PlayRecord r = generate_play_trajectory(seed, cfg);
    ASSERT_EQ(r.gt_boundaries.num_segments(), cfg.num_tasks);
    const auto segs = r.gt_segments();
    for (std::size_t k = 0; k < segs.size(); ++k) {
      EXPECT_EQ(r.trajectory->actions[static_cast<std::size_t>(segs[k].end - 1)], Action::kDone);
      const Observation& o = r.trajectory->observations[static_cast<std::size_t>(segs[k].end)];
      const auto f = o.front();
      ASSERT_TRUE(f.has_value());
      EXPECT_TRUE(r.gt_labels[k].matches(o.grid->at(*f)));
      if (k > 0) EXPECT_NE(r.gt_labels[k], r.gt_labels[k - 1]);
    }
  }
}

TEST(Gym, SplitsAreNestedPrefixes) {
  Dataset full;
  PlayConfig play;
  for (int i = 0; i < 100; ++i) {
    const PlayRecord r = generate_play_trajectory(static_cast<std::uint64_t>(i), play, i);
    full.add_trajectory(r.trajectory);
    for (const auto& s : cut_segments(r)) full.annotated.push_back(s);
  }
  ASSERT_EQ(full.annotated.size(), 1000u);
  const Dataset tenth = make_split(full, SplitTag::kTenth);
  const Dataset quarter = make_split(full, SplitTag::kQuarter);
  EXPECT_EQ(tenth.annotated.size(), 100u);
  EXPECT_EQ(quarter.annotated.size(), 250u);
  for (std::size_t i = 0; i < tenth.annotated.size(); ++i) {
    EXPECT_EQ(tenth.annotated[i].interval(), quarter.annotated[i].interval());
    EXPECT_EQ(tenth.annotated[i].trajectory_id, quarter.annotated[i].trajectory_id);
  }
  EXPECT_NO_THROW(tenth.validate());
  EXPECT_THROW(make_split(full, 1.5, SplitTag::kFull), DataError);
}

TEST(Gym, LabelBalance) {
  DatasetConfig cfg;
  cfg.num_annotated_records = 300;
  cfg.num_unannotated_records = 1;
  cfg.num_validation_records = 1;
  const GeneratedData d = make_datasets(cfg);
  std::vector<int> counts(kNumInstructions, 0);
  for (const auto& s : d.annotated_full.annotated) ++counts[static_cast<std::size_t>(s.instruction.label_id())];
  const double mean = static_cast<double>(d.annotated_full.annotated.size()) / kNumInstructions;
  for (int c : counts) EXPECT_LE(std::abs(c - mean) / mean, 0.2);
}

TEST(Gym, PoolsAreDisjoint) {
  DatasetConfig cfg;
  cfg.num_annotated_records = 5;
  cfg.num_unannotated_records = 5;
  cfg.num_validation_records = 5;
  const GeneratedData d = make_datasets(cfg);
  std::set<std::int64_t> ids;
  for (const auto* ds : {&d.annotated_full, &d.validation, &d.unannotated}) {
    for (const auto& [id, t] : ds->trajectories()) EXPECT_TRUE(ids.insert(id).second);
  }
  EXPECT_EQ(d.unannotated_truth.size(), 5u);
  EXPECT_TRUE(d.unannotated.annotated.empty());
}
