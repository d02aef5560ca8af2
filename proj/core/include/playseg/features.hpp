#pragma once

// Fixed-length numeric encodings of symbolic grid observations.
//
// Frame layout (frame_dim() entries):
//   agent x one-hot (W) | agent y one-hot (H) | heading one-hot (4)
//   object slots, canonical row-major cell order, max_objects x
//       [present, forward offset, lateral offset, type one-hot (3), color one-hot (6)]
//   per instruction (18) x
//       [present, forward offset, lateral offset, facing, ahead, left, right, behind]
//       of the nearest matching object (Manhattan distance, canonical tie-break)
//   [edge ahead, object ahead, repeat of previous frame]
//
// Offsets are egocentric and divided by max(W, H). The repeat flag is 1 when the
// frame equals its predecessor inside the same window (0 for a window's first frame).
//
// Segment layout: first frame | last frame | mean over frames | (n_obs - 1) / length_scale.

#include <cstdint>
#include <span>
#include <string>

#include <Eigen/Core>

#include "playseg/core_model.hpp"

namespace playseg {

struct FeatureSchema {
  int width = 8;
  int height = 8;
  int max_objects = 8;
  double length_scale = 32.0;

  static constexpr int kSlotWidth = 2 + 1 + kNumObjectTypes + kNumColors;
  static constexpr int kLabelWidth = 8;
  static constexpr int kTrailerWidth = 3;

  int frame_dim() const {
    return width + height + 4 + max_objects * kSlotWidth + kNumInstructions * kLabelWidth +
           kTrailerWidth;
  }
  int segment_dim() const { return 3 * frame_dim() + 1; }
  int label_block_offset() const { return width + height + 4 + max_objects * kSlotWidth; }
  int repeat_flag_index() const { return frame_dim() - 1; }

  std::string describe() const;
  /// FNV-1a hash of describe(); checkpoints refuse data with a different hash.
  std::uint64_t hash() const;
  void validate() const;
};

/// Writes frame features into `out` (size frame_dim()). `previous` is the
/// preceding observation inside the same window, or nullptr.
void frame_features(const Observation& obs, const Observation* previous,
                    const FeatureSchema& schema, Eigen::Ref<Eigen::VectorXd> out);
Eigen::VectorXd frame_features(const Observation& obs, const Observation* previous,
                               const FeatureSchema& schema);

/// Requires at least two observations (one transition).
Eigen::VectorXd extract_segment_features(std::span<const Observation> window,
                                         const FeatureSchema& schema);

/// Per-frame features of a whole window, one row per observation.
Eigen::MatrixXd window_frame_features(std::span<const Observation> window,
                                      const FeatureSchema& schema);

std::uint64_t fnv1a64(std::string_view text);

}  // namespace playseg
