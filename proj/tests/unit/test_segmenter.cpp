#include <gtest/gtest.h>

#include <cmath>

#include "oracles.hpp"
#include "playseg/error.hpp"
#include "playseg/segmenter.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;

namespace {

ScoreMatrix random_matrix(int T, Band band, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.01, 0.99);
  ScoreMatrix m(T, band);
  for (int i = 0; i < T; ++i) {
    for (int j = i; j < T; ++j) {
      if (m.in_band(i, j)) m.set(i, j, u(rng));
    }
  }
  return m;
}

std::function<double(int, int)> lookup(const ScoreMatrix& m) {
  return [&m](int i, int j) { return m.at(i, j); };
}

class ConstantScorer : public WindowScorer {
 public:
  explicit ConstantScorer(double p) : p_(p) {}
  double segment_probability(const Trajectory&, int, int) const override { return p_; }
  Eigen::VectorXd label_distribution(const Trajectory&, int, int) const override {
    return Eigen::VectorXd::Constant(kNumInstructions, 1.0 / kNumInstructions);
  }

 private:
  double p_;
};

}  // namespace

TEST(Band, PairCounts) {
  EXPECT_EQ(band_pair_count(3, {1, 3}), 6);
  for (int T = 1; T <= 30; ++T) EXPECT_EQ(band_pair_count(T, {1, T}), T * (T + 1) / 2);
  for (int T = 1; T <= 25; ++T) {
    for (int lo = 1; lo <= T; ++lo) {
      for (int hi = lo; hi <= T + 2; ++hi) {
        std::int64_t n = 0;
        for (int i = 0; i < T; ++i) {
          for (int j = i; j < T; ++j) n += (j + 1 - i >= lo && j + 1 - i <= hi);
        }
        EXPECT_EQ(band_pair_count(T, {lo, hi}), n);
      }
    }
  }
}

TEST(Band, FilledMatrixCountsEvaluations) {
  int calls = 0;
  const ScoreMatrix m = build_score_matrix([&](int, int) { ++calls; return 0.5; }, 10, {2, 4});
  EXPECT_EQ(calls, band_pair_count(10, {2, 4}));
  EXPECT_EQ(m.evaluations, calls);
  EXPECT_THROW(m.at(0, 0), std::out_of_range);
  EXPECT_THROW((Band{3, 2}.validate()), ConfigError);
}

TEST(Dp, SingleTransition) {
  ScoreMatrix m(1, {1, 1});
  m.set(0, 0, 0.3);
  const auto r = dp_segment(m);
  ASSERT_TRUE(r.feasible);
  EXPECT_NEAR(r.log_likelihood, std::log(0.3), 1e-12);
  EXPECT_EQ(r.segments, (std::vector<Interval>{{0, 1}}));
}

TEST(Dp, ConstantHalfPrefersOneSegment) {
  ScoreMatrix m(3, {1, 3});
  for (int i = 0; i < 3; ++i) {
    for (int j = i; j < 3; ++j) m.set(i, j, 0.5);
  }
  const auto r = dp_segment(m);
  EXPECT_NEAR(r.log_likelihood, -3.0 * std::log(2.0), 1e-12);
  EXPECT_EQ(r.segments, (std::vector<Interval>{{0, 3}}));
}

TEST(Dp, TwoTransitionsEnumerated) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const ScoreMatrix m = random_matrix(2, {1, 2}, rng);
    const double one = std::log(m.at(0, 1)) + std::log1p(-m.at(0, 0));
    const double two = std::log(m.at(0, 0)) + std::log(m.at(1, 1));
    const auto r = dp_segment(m);
    EXPECT_NEAR(r.log_likelihood, std::max(one, two), 1e-12);
    EXPECT_EQ(r.segments.size(), two > one ? 2u : 1u);
  }
}

TEST(Dp, MatchesOracleAndBruteForce) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int T = std::uniform_int_distribution<int>(1, 12)(rng);
    const int lo = std::uniform_int_distribution<int>(1, 3)(rng);
    const int hi = std::uniform_int_distribution<int>(lo, lo + 6)(rng);
    const ScoreMatrix m = random_matrix(T, {lo, hi}, rng);
    const auto dp = dp_segment(m);
    const auto bf = brute_force_segment(m);
    const auto want = oracle::best_log_likelihood(lookup(m), T, lo, hi);
    ASSERT_EQ(dp.feasible, want.has_value()) << "T=" << T << " band " << lo << ".." << hi;
    ASSERT_EQ(bf.feasible, want.has_value());
    if (!want) continue;
    EXPECT_NEAR(dp.log_likelihood, *want, 1e-9);
    EXPECT_NEAR(bf.log_likelihood, *want, 1e-9);
    EXPECT_EQ(dp.segments, bf.segments);
    EXPECT_NEAR(oracle::tiling_log_likelihood(lookup(m), dp.segments, lo), *want, 1e-9);
    const auto eval = evaluate_segmentation(m, dp.segmentation.boundaries);
    ASSERT_TRUE(eval.has_value());
    EXPECT_NEAR(*eval, dp.log_likelihood, 1e-9);
    for (const auto& s : dp.segments) EXPECT_TRUE(m.band().contains(s.length()));
  }
}

TEST(Dp, InfeasibleBand) {
  ScoreMatrix m(3, {2, 2});
  m.set(0, 1, 0.5);
  m.set(1, 2, 0.5);
  EXPECT_FALSE(dp_segment(m).feasible);
  EXPECT_FALSE(brute_force_segment(m).feasible);
  const std::vector<std::uint8_t> alpha{0, 1, 1};
  EXPECT_FALSE(evaluate_segmentation(m, alpha).has_value());
}

TEST(Dp, BruteForceRefusesLongInput) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(brute_force_segment(random_matrix(kBruteForceMaxLength + 1, {1, 3}, rng)),
               ConfigError);
}

TEST(Play, ShortTrajectoryIsOneWindow) {
  const PlayRecord r = gym::generate_play_trajectory(2, {});
  SegmenterConfig cfg;
  cfg.window = r.trajectory->length() + 5;
  cfg.band = {1, 10};
  const auto out = segment_play_trajectory(ConstantScorer(0.5), *r.trajectory, cfg);
  ASSERT_EQ(out.windows.size(), 1u);
  EXPECT_EQ(out.windows[0].end, r.trajectory->length());
  EXPECT_TRUE(out.stalls.empty());
  EXPECT_EQ(out.segments.back().end, r.trajectory->length());
}

TEST(Play, GroundTruthScorerRecoversSegments) {
  oracle::GroundTruthScorer scorer(0.99, 0.01);
  std::vector<PlayRecord> records;
  int longest = 1;
  for (int i = 0; i < 50; ++i) {
    records.push_back(gym::generate_play_trajectory(static_cast<std::uint64_t>(100 + i), {}, i));
    scorer.add(records.back());
    for (const auto& s : records.back().gt_segments()) longest = std::max(longest, s.length());
  }
  SegmenterConfig cfg;
  cfg.band = {1, longest};
  cfg.window = 2 * longest;
  for (const auto& r : records) {
    const auto out = segment_play_trajectory(scorer, *r.trajectory, cfg);
    EXPECT_EQ(out.segments, r.gt_segments());
    EXPECT_TRUE(out.gaps.empty());
    const auto labelled = label_segments(scorer, *r.trajectory, out.segments);
    for (std::size_t k = 0; k < labelled.size() && k < r.gt_labels.size(); ++k) {
      EXPECT_EQ(labelled[k].instruction, r.gt_labels[k]);
      EXPECT_NEAR(labelled[k].confidence, 0.99, 1e-12);
    }
  }
}

TEST(Play, SegmentsRespectBandAndOrder) {
  const PlayRecord r = gym::generate_play_trajectory(8, {});
  SegmenterConfig cfg;
  cfg.window = 12;
  cfg.band = {3, 6};
  for (double p : {0.05, 0.5, 0.95}) {
    const auto out = segment_play_trajectory(ConstantScorer(p), *r.trajectory, cfg);
    int last = 0;
    for (const auto& s : out.segments) {
      EXPECT_TRUE(cfg.band.contains(s.length()));
      EXPECT_GE(s.start, last);
      last = s.end;
    }
    EXPECT_LE(last, r.trajectory->length());
  }
}

TEST(Play, StallForcesAdvance) {
  const PlayRecord r = gym::generate_play_trajectory(9, {});
  SegmenterConfig cfg;
  cfg.window = 4;
  cfg.band = {4, 4};
  cfg.advance_threshold = 0.9;
  const auto out = segment_play_trajectory(ConstantScorer(0.5), *r.trajectory, cfg);
  EXPECT_FALSE(out.stalls.empty());
  EXPECT_EQ(out.gaps.size(), out.stalls.size() + (r.trajectory->length() % 4 != 0));
  EXPECT_TRUE(out.segments.size() <= 1u);
}
