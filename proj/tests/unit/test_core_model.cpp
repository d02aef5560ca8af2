#include <gtest/gtest.h>

#include <random>

#include "playseg/core_model.hpp"
#include "playseg/error.hpp"

using namespace playseg;

namespace {

Segmentation seg(std::vector<std::uint8_t> a) { return {0, std::move(a)}; }

Trajectory line_trajectory(int T) {
  auto grid = std::make_shared<Grid>(8, 8);
  Trajectory t;
  t.id = 3;
  for (int i = 0; i <= T; ++i) t.observations.push_back({grid, {i % 8, 0}, Direction::kEast});
  t.actions.assign(static_cast<std::size_t>(T), Action::kForward);
  return t;
}

}  // namespace

TEST(Boundaries, SingleTransition) {
  EXPECT_EQ(boundaries_to_segments(seg({1})), (std::vector<Interval>{{0, 1}}));
  const std::vector<Interval> one{{0, 1}};
  EXPECT_EQ(segments_to_boundaries(one, 1).boundaries, (std::vector<std::uint8_t>{1}));
}

TEST(Boundaries, TwoSegments) {
  EXPECT_EQ(boundaries_to_segments(seg({0, 1, 0, 1})), (std::vector<Interval>{{0, 2}, {2, 4}}));
  const std::vector<Interval> two{{0, 2}, {2, 4}};
  EXPECT_EQ(segments_to_boundaries(two, 4).boundaries, (std::vector<std::uint8_t>{0, 1, 0, 1}));
}

TEST(Boundaries, RoundTripRandom) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 64)(rng);
    std::vector<std::uint8_t> a(static_cast<std::size_t>(T));
    for (auto& x : a) x = static_cast<std::uint8_t>(rng() & 1u);
    a.back() = 1;
    const auto segs = boundaries_to_segments(seg(a));
    EXPECT_EQ(segments_to_boundaries(segs, T).boundaries, a);
    int covered = 0;
    for (const auto& s : segs) {
      EXPECT_EQ(s.start, covered);
      covered = s.end;
    }
    EXPECT_EQ(covered, T);
  }
}

TEST(Boundaries, RejectsIncompleteTiling) {
  const std::vector<Interval> gap{{0, 2}, {3, 4}};
  EXPECT_THROW(segments_to_boundaries(gap, 4), DataError);
}

TEST(LastBoundary, Examples) {
  const std::vector<std::uint8_t> none{0, 0, 0};
  EXPECT_FALSE(last_boundary_before(none, 2).has_value());
  const std::vector<std::uint8_t> mid{0, 1, 0};
  EXPECT_EQ(last_boundary_before(mid, 2), 1);
}

TEST(LastBoundary, MatchesLinearScan) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 40)(rng);
    std::vector<std::uint8_t> a(static_cast<std::size_t>(T));
    for (auto& x : a) x = static_cast<std::uint8_t>(rng() % 3 == 0);
    const int t = std::uniform_int_distribution<int>(0, T - 1)(rng);
    std::optional<int> expect;
    for (int i = 0; i <= t; ++i) {
      if (a[static_cast<std::size_t>(i)]) expect = i;
    }
    EXPECT_EQ(last_boundary_before(a, t), expect);
  }
}

TEST(SliceSegment, Examples) {
  const Trajectory t = line_trajectory(5);
  EXPECT_EQ(slice_segment(t, 0, 5).size(), 6u);
  EXPECT_EQ(slice_segment(t, 2, 4).size(), 3u);
  const auto s = slice_segment(t, 1, 5);
  const auto again = s.subspan(0, s.size());
  EXPECT_EQ(again.data(), s.data());
  EXPECT_EQ(again.size(), s.size());
  EXPECT_THROW(slice_segment(t, 3, 3), DataError);
  EXPECT_THROW(slice_segment(t, 0, 6), DataError);
}

TEST(Instruction, LabelRoundTrip) {
  for (int l = 0; l < kNumInstructions; ++l) {
    const Instruction i(l);
    EXPECT_EQ(Instruction::from_object(i.object_type(), i.color()).label_id(), l);
  }
  EXPECT_EQ(Instruction::from_object(1, 1).text().rfind("go to the ", 0), 0u);
  EXPECT_THROW(Instruction{kNumInstructions}, DataError);
}

TEST(Dataset, ValidateCatchesBadReferences) {
  Dataset d;
  d.add_trajectory(std::make_shared<Trajectory>(line_trajectory(6)));
  d.annotated.push_back({3, 0, 4, Instruction(2), 1.0});
  EXPECT_NO_THROW(d.validate());
  d.annotated.push_back({4, 0, 2, Instruction(2), 1.0});
  EXPECT_THROW(d.validate(), DataError);
  d.annotated.back() = {3, 4, 9, Instruction(2), 1.0};
  EXPECT_THROW(d.validate(), DataError);
}

TEST(SplitTag, Names) {
  for (SplitTag t : {SplitTag::kFull, SplitTag::kHalf, SplitTag::kQuarter, SplitTag::kTenth,
                     SplitTag::kValidation, SplitTag::kUnannotated}) {
    EXPECT_EQ(split_tag_from_name(split_tag_name(t)), t);
  }
  EXPECT_THROW(split_tag_from_name("33"), DataError);
  EXPECT_DOUBLE_EQ(split_fraction(SplitTag::kTenth), 0.1);
}
