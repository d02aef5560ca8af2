#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "playseg/error.hpp"
#include "playseg/metrics.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;

namespace {

Segmentation from_points(const std::set<int>& points, int T) {
  Segmentation s;
  s.boundaries.assign(static_cast<std::size_t>(T), 0);
  for (int p : points) s.boundaries[static_cast<std::size_t>(p - 1)] = 1;
  return s;
}

}  // namespace

TEST(Boundary, PointsAreSegmentEnds) {
  const Segmentation s{0, {0, 1, 0, 0, 1}};
  EXPECT_EQ(boundary_points(s), (std::set<int>{2, 5}));
  const std::vector<Interval> segs{{0, 2}, {2, 5}};
  EXPECT_EQ(end_points(segs), (std::set<int>{2, 5}));
  const std::vector<Interval> crops{{0, 2}, {4, 6}};
  EXPECT_EQ(crop_points(crops), (std::set<int>{2, 4, 6}));
}

TEST(Boundary, PerfectAndEmptyPredictions) {
  const Segmentation g{0, {0, 1, 0, 1, 1}};
  const auto perfect = boundary_precision_recall(g, g);
  EXPECT_EQ(perfect.precision, 1.0);
  EXPECT_EQ(perfect.recall, 1.0);
  const auto empty = boundary_precision_recall(std::set<int>{}, g);
  EXPECT_FALSE(empty.precision.has_value());
  EXPECT_EQ(empty.recall, 0.0);
  const Segmentation none{0, {0, 0, 0}};
  EXPECT_THROW(boundary_precision_recall(std::set<int>{1}, none), DataError);
}

TEST(Boundary, MatchesSetOracle) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const int T = std::uniform_int_distribution<int>(2, 40)(rng);
    std::set<int> p;
    std::set<int> g{T};
    std::vector<int> pv;
    std::vector<int> gv{T};
    for (int i = 1; i < T; ++i) {
      if (rng() % 4 == 0) {
        p.insert(i);
        pv.push_back(i);
      }
      if (rng() % 4 == 0) {
        g.insert(i);
        gv.push_back(i);
      }
    }
    const auto got = boundary_precision_recall(p, from_points(g, T));
    const auto want = oracle::set_precision_recall(pv, gv);
    EXPECT_EQ(got.precision.has_value(), want.precision.has_value());
    if (want.precision) EXPECT_NEAR(*got.precision, *want.precision, 1e-12);
    EXPECT_NEAR(got.recall, want.recall, 1e-12);
  }
}

TEST(Boundary, ToleranceMatchingIsOneToOne) {
  const std::set<int> p{4, 5, 6};
  const std::set<int> g{5};
  EXPECT_EQ(match_boundaries(p, g, 1).matched, 1);
  EXPECT_EQ(match_boundaries(p, g, 0).matched, 1);
  const std::set<int> p2{3};
  const std::set<int> g2{2, 4};
  EXPECT_EQ(match_boundaries(p2, g2, 1).matched, 1);
  EXPECT_EQ(match_boundaries(p2, g2, 0).matched, 0);
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    std::set<int> a;
    std::set<int> b;
    for (int i = 0; i < 30; ++i) {
      if (rng() % 3 == 0) a.insert(i);
      if (rng() % 3 == 0) b.insert(i);
    }
    const auto exact = oracle::set_precision_recall({a.begin(), a.end()}, {b.begin(), b.end()});
    if (!b.empty()) {
      EXPECT_NEAR(static_cast<double>(match_boundaries(a, b, 0).matched), exact.recall * b.size(), 1e-9);
    }
    for (int tol = 0; tol <= 3; ++tol) {
      EXPECT_LE(match_boundaries(a, b, tol).matched, std::min<std::int64_t>(a.size(), b.size()));
    }
  }
}

TEST(F1, Examples) {
  EXPECT_DOUBLE_EQ(f1(1.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(f1(0.5, 1.0), 2.0 / 3.0);
  EXPECT_DOUBLE_EQ(f1(0.0, 1.0), 0.0);
  EXPECT_FALSE(f1(std::nullopt, 0.5).has_value());
}

TEST(LabelAccuracy, IdenticalAndMissing) {
  const PlayRecord r = gym::generate_play_trajectory(3, {});
  const auto segs = gym::cut_segments(r);
  const auto a = label_accuracy(segs, r);
  EXPECT_EQ(a.majority(), 1.0);
  EXPECT_EQ(a.strict(), 1.0);

  std::set<int> used;
  for (const auto& l : r.gt_labels) used.insert(l.label_id());
  int absent = 0;
  while (used.contains(absent)) ++absent;
  auto wrong = segs;
  for (auto& s : wrong) s.instruction = Instruction(absent);
  const auto b = label_accuracy(wrong, r);
  EXPECT_EQ(b.majority(), 0.0);
  EXPECT_EQ(b.strict(), 0.0);
  EXPECT_FALSE(label_accuracy({}, r).majority().has_value());
}

TEST(LabelAccuracy, MajorityMatchesCounting) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> labels(20);
    for (auto& l : labels) l = static_cast<int>(rng() % 4);
    const int t0 = static_cast<int>(rng() % 19);
    const int t1 = t0 + 1 + static_cast<int>(rng() % static_cast<std::uint64_t>(20 - t0));
    EXPECT_EQ(majority_label(labels, t0, t1), oracle::counted_majority(labels, t0, t1));
  }
  const PlayRecord r = gym::generate_play_trajectory(4, {});
  const auto per = transition_labels(r);
  ASSERT_EQ(static_cast<int>(per.size()), r.trajectory->length());
  const auto segs = r.gt_segments();
  for (std::size_t k = 0; k < segs.size(); ++k) {
    EXPECT_EQ(per[static_cast<std::size_t>(segs[k].start)], r.gt_labels[k].label_id());
  }
}

TEST(Iou, Examples) {
  EXPECT_DOUBLE_EQ(iou({0, 10}, {0, 10}), 1.0);
  EXPECT_DOUBLE_EQ(iou({0, 10}, {5, 15}), 5.0 / 15.0);
  EXPECT_DOUBLE_EQ(iou({0, 2}, {3, 5}), 0.0);
  const std::vector<Interval> g{{0, 4}, {4, 10}};
  EXPECT_DOUBLE_EQ(best_iou({4, 9}, g), 5.0 / 6.0);
}
