#include <gtest/gtest.h>

#include "playseg/error.hpp"
#include "playseg/features.hpp"
#include "playseg/synthgym.hpp"

using namespace playseg;

TEST(Features, Dimensions) {
  const FeatureSchema s;
  EXPECT_EQ(s.frame_dim(), 263);
  EXPECT_EQ(s.segment_dim(), 790);
  const PlayRecord r = gym::generate_play_trajectory(3, {});
  const auto w = slice_segment(*r.trajectory, 0, 5);
  EXPECT_EQ(extract_segment_features(w, s).size(), 790);
  EXPECT_EQ(window_frame_features(w, s).rows(), 6);
  EXPECT_EQ(window_frame_features(w, s).cols(), 263);
}

TEST(Features, ConstantWindowPools) {
  const FeatureSchema s;
  const PlayRecord r = gym::generate_play_trajectory(4, {});
  const Observation o = r.trajectory->observations[0];
  const std::vector<Observation> window(5, o);
  const Eigen::VectorXd f = extract_segment_features(window, s);
  const int d = s.frame_dim();
  // The first frame has no predecessor, so its repeat flag is the only difference.
  Eigen::VectorXd first = f.segment(0, d);
  Eigen::VectorXd last = f.segment(d, d);
  EXPECT_EQ(first[s.repeat_flag_index()], 0.0);
  EXPECT_EQ(last[s.repeat_flag_index()], 1.0);
  first[s.repeat_flag_index()] = 1.0;
  EXPECT_TRUE(first.isApprox(last));
  Eigen::VectorXd mean = f.segment(2 * d, d);
  EXPECT_NEAR(mean[s.repeat_flag_index()], 0.8, 1e-12);
  mean[s.repeat_flag_index()] = 1.0;
  EXPECT_TRUE(mean.isApprox(last));
  EXPECT_DOUBLE_EQ(f[3 * d], 4.0 / s.length_scale);
}

TEST(Features, Deterministic) {
  const FeatureSchema s;
  const PlayRecord r = gym::generate_play_trajectory(5, {});
  const auto w = slice_segment(*r.trajectory, 2, 9);
  EXPECT_EQ(extract_segment_features(w, s), extract_segment_features(w, s));
}

TEST(Features, OneHotBlocks) {
  const FeatureSchema s;
  const PlayRecord r = gym::generate_play_trajectory(6, {});
  for (const auto& o : r.trajectory->observations) {
    const Eigen::VectorXd f = frame_features(o, nullptr, s);
    EXPECT_EQ(f.segment(0, s.width).sum(), 1.0);
    EXPECT_EQ(f.segment(s.width, s.height).sum(), 1.0);
    EXPECT_EQ(f.segment(s.width + s.height, 4).sum(), 1.0);
    EXPECT_EQ(f[o.agent_pos.x], 1.0);
  }
}

TEST(Features, RejectsBadInput) {
  const FeatureSchema s;
  const PlayRecord r = gym::generate_play_trajectory(7, {});
  const std::vector<Observation> one{r.trajectory->observations[0]};
  EXPECT_THROW(extract_segment_features(one, s), DataError);
  FeatureSchema wide = s;
  wide.width = 9;
  EXPECT_THROW(frame_features(one[0], nullptr, wide), DataError);
  EXPECT_NE(wide.hash(), s.hash());
}
