#pragma once

// Comparison extractors: random segments, frame-wise classification followed by
// background cropping, and boundary regression from a single anchor frame.
// Both learned extractors see a fixed-size window of frames and encode each
// frame together with pooled features of its temporal neighbourhood.

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "playseg/core_model.hpp"
#include "playseg/features.hpp"
#include "playseg/mlp.hpp"
#include "playseg/scorer.hpp"

namespace playseg {

struct LengthRange {
  int min = 0;
  int max = 0;
  /// Minimum and maximum annotated segment lengths; throws DataError when empty.
  static LengthRange of(const Dataset& annotated);
};

/// Uniform length in the range (capped at T), uniform start, labelled by the
/// label head. Returns nothing when T < range.min.
std::optional<LabelledSegment> random_segment_extract(const LengthRange& range,
                                                      const Trajectory& play,
                                                      const WindowScorer& labeller,
                                                      std::mt19937_64& rng);

inline constexpr int kBackgroundClass = kNumInstructions;
inline constexpr int kFrameClasses = kNumInstructions + 1;

/// Relative frame spans pooled around each frame: [lo, hi] inclusive offsets.
struct ContextBlock {
  int lo;
  int hi;
};
inline constexpr std::array<ContextBlock, 7> kContextBlocks = {{
    {0, 0}, {-1, -1}, {1, 1}, {-3, -2}, {2, 3}, {-7, -4}, {4, 7}}};

int context_dim(const FeatureSchema& schema);
/// One row per frame: each block is the mean of the frame rows it covers,
/// with rows outside the window counted as zeros.
Eigen::MatrixXd frame_context_features(const Eigen::MatrixXd& frames);

/// A training window o_{start..end} of a parent trajectory around `segment`.
struct FrameWindow {
  const Trajectory* trajectory = nullptr;
  int start = 0;
  int end = 0;
  LabelledSegment segment;
};

/// Windows of `window` transitions that fully contain their segment, with a
/// uniform offset; the whole parent when it is shorter than the window.
std::vector<FrameWindow> sample_training_windows(const Dataset& annotated, int window,
                                                 int per_segment, std::mt19937_64& rng);

/// Per-frame class targets: the segment's label inside [t0, t1], background outside.
std::vector<int> frame_targets(const FrameWindow& w);

struct FrameModelConfig {
  int window = 0;  // transitions; <= 0 selects max length + 2 * t_max
  int hidden = 64;
  double learning_rate = 0.05;
  int epochs = 15;
  int batch_windows = 8;
  int windows_per_segment = 1;
  double validation_fraction = 0.2;
  std::uint64_t seed = 11;
  double distance_weight = 1.0;  // boundary regressor only

  void validate() const;
};

/// Window size used by both learned crop baselines.
int default_crop_window(const Dataset& annotated);

class FrameClassifier {
 public:
  FrameClassifier() = default;
  FrameClassifier(FeatureSchema schema, Standardizer normalization, Mlp network, int window);

  /// Rows are frames of the window, columns the |instructions| + 1 classes.
  Eigen::MatrixXd frame_probabilities(std::span<const Observation> window) const;
  std::vector<int> frame_labels(std::span<const Observation> window) const;

  const FeatureSchema& schema() const { return schema_; }
  const Standardizer& normalization() const { return normalization_; }
  const Mlp& network() const { return network_; }
  int window() const { return window_; }

 private:
  FeatureSchema schema_;
  Standardizer normalization_;
  Mlp network_;
  int window_ = 0;
};

/// Mean per-frame cross-entropy; rows of x are normalized context features.
double frame_classifier_loss(const Mlp& net, const Eigen::MatrixXd& x,
                             std::span<const int> labels, MlpGradient* gradient = nullptr);

struct FrameClassifierReport {
  int window = 0;
  std::vector<double> loss_curve;
  std::vector<double> val_loss_curve;
  double val_frame_accuracy = 0.0;
  /// Fraction of validation windows lying inside a single segment whose frames
  /// are all but at most two predicted as that segment's class.
  double val_inside_agreement = 0.0;
  int train_windows = 0;
  int val_windows = 0;
};

FrameClassifier train_frame_classifier(const Dataset& annotated, const FeatureSchema& schema,
                                       const FrameModelConfig& cfg,
                                       FrameClassifierReport* report = nullptr);

struct CropRule {
  int min_length = 2;     // transitions
  bool majority = false;  // accept the plurality class instead of requiring agreement
};

struct CropResult {
  int first = 0;  // frame indices, inclusive
  int last = 0;
  int label = 0;
};

/// Strips leading and trailing background frames, then requires the remaining
/// frames to agree on one instruction (or, in majority mode, takes the most
/// frequent non-background class when it covers more than half the frames).
std::optional<CropResult> crop_frame_labels(std::span<const int> labels, const CropRule& rule);

/// Draws one window of the classifier's size uniformly from the trajectory.
std::optional<LabelledSegment> framecrop_extract(const FrameClassifier& classifier,
                                                 const Trajectory& play, const CropRule& rule,
                                                 std::mt19937_64& rng);

/// Output layout: [class logits (19), start distance, end distance].
inline constexpr int kBoundaryOutputs = kFrameClasses + 2;

class BoundaryRegressor {
 public:
  struct Prediction {
    int start = 0;  // frame indices within the window, start < end
    int end = 1;
    int label = 0;
    double confidence = 0.0;
  };

  BoundaryRegressor() = default;
  BoundaryRegressor(FeatureSchema schema, Standardizer normalization, Mlp network, int window);

  /// Anchors on the frame with the most confident non-background class.
  Prediction predict(std::span<const Observation> window) const;

  const FeatureSchema& schema() const { return schema_; }
  const Standardizer& normalization() const { return normalization_; }
  const Mlp& network() const { return network_; }
  int window() const { return window_; }

 private:
  FeatureSchema schema_;
  Standardizer normalization_;
  Mlp network_;
  int window_ = 0;
};

/// Per-frame distance targets, already divided by the schema length scale.
struct BoundaryTargets {
  std::vector<int> labels;
  std::vector<double> to_start;
  std::vector<double> to_end;
  std::vector<std::uint8_t> inside;
};

BoundaryTargets boundary_targets(const FrameWindow& w, double length_scale);

/// Mean cross-entropy over frames plus distance_weight times the mean squared
/// error of the two softplus distances over frames inside the segment.
double boundary_loss(const Mlp& net, const Eigen::MatrixXd& x, const BoundaryTargets& targets,
                     double distance_weight, MlpGradient* gradient = nullptr);

struct BoundaryRegressorReport {
  int window = 0;
  std::vector<double> loss_curve;
  std::vector<double> val_loss_curve;
  double val_boundary_mae = 0.0;
  double val_class_accuracy = 0.0;
  int train_windows = 0;
  int val_windows = 0;
};

BoundaryRegressor train_boundary_regressor(const Dataset& annotated, const FeatureSchema& schema,
                                           const FrameModelConfig& cfg,
                                           BoundaryRegressorReport* report = nullptr);

std::optional<LabelledSegment> boundarycrop_extract(const BoundaryRegressor& regressor,
                                                    const Trajectory& play, int min_length,
                                                    std::mt19937_64& rng);

}  // namespace playseg
