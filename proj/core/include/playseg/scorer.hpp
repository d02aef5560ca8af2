#pragma once

// Two-headed window model: p_Seg (is this window exactly one completed
// instruction?) and p_LM (which instruction?), sharing one tanh backbone.
// Trained on annotated segments plus shifted/grown/shrunk negative windows.

#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "playseg/core_model.hpp"
#include "playseg/features.hpp"
#include "playseg/mlp.hpp"

namespace playseg {

/// What the segmenter and the augmentation pipeline need from a window model.
class WindowScorer {
 public:
  virtual ~WindowScorer() = default;
  /// p(alpha = 1 | o_{t0..t1}).
  virtual double segment_probability(const Trajectory& traj, int t0, int t1) const = 0;
  /// Distribution over instructions for o_{t0..t1}; sums to one.
  virtual Eigen::VectorXd label_distribution(const Trajectory& traj, int t0, int t1) const = 0;
};

struct NegativeSamplingConfig {
  int t_min = 1;
  int t_max = 1;
  int negatives_per_form = 1;

  void validate() const;
  /// t_min = 1, t_max = ceil(max_segment_length / 2).
  static NegativeSamplingConfig from_max_length(int max_segment_length);
};

enum class NegativeForm {
  kRightGrow,
  kRightShrink,
  kLeftGrow,
  kBothGrow,
  kTranslateRight,
  kTranslateLeft,
};

struct NegativeWindow {
  Interval window;
  NegativeForm form;
};

/// Offsets for the six negative forms, in the order above (both-grow takes two).
struct NegativeOffsets {
  int right_grow = 1;
  int right_shrink = 1;
  int left_grow = 1;
  int both_left = 1;
  int both_right = 1;
  int translate_right = 1;
  int translate_left = 1;
};

/// Windows are clipped to [0, T]; windows equal to the positive or with fewer
/// than two observations are dropped.
std::vector<NegativeWindow> negatives_with_offsets(const Interval& positive, int trajectory_length,
                                                   const NegativeOffsets& k);

/// Draws every offset independently and uniformly from {t_min..t_max}.
std::vector<NegativeWindow> generate_negatives(const LabelledSegment& segment,
                                               int trajectory_length,
                                               const NegativeSamplingConfig& cfg,
                                               std::mt19937_64& rng);

/// Output layout of the shared network: [segment logit, label logits...].
inline constexpr int kScorerOutputs = 1 + kNumInstructions;

class ScorerModel : public WindowScorer {
 public:
  ScorerModel() = default;
  ScorerModel(FeatureSchema schema, Standardizer normalization, Mlp network);

  double predict_seg_prob(std::span<const Observation> window) const;
  Eigen::VectorXd predict_label_dist(std::span<const Observation> window) const;
  /// Raw logits for already extracted segment features.
  Eigen::VectorXd logits(const Eigen::VectorXd& segment_features) const;

  double segment_probability(const Trajectory& traj, int t0, int t1) const override;
  Eigen::VectorXd label_distribution(const Trajectory& traj, int t0, int t1) const override;

  const FeatureSchema& schema() const { return schema_; }
  const Standardizer& normalization() const { return normalization_; }
  const Mlp& network() const { return network_; }

 private:
  FeatureSchema schema_;
  Standardizer normalization_;
  Mlp network_;
};

/// Normalized feature rows for one loss evaluation.
struct ScorerBatch {
  Eigen::MatrixXd positives;
  std::vector<int> labels;
  Eigen::MatrixXd negatives;
};

/// L = mean_pos[-log p_LM(tau|o) - log p_Seg(1|o)] + mean_neg[-log p_Seg(0|o)].
/// The label term only sees positives. Throws DataError without positives.
double scorer_loss(const Mlp& network, const ScorerBatch& batch);
double scorer_loss(const Mlp& network, const ScorerBatch& batch, MlpGradient* gradient);

/// Convenience overload computing features from windows of a trajectory set.
double scorer_loss(const ScorerModel& model, const Dataset& data,
                   std::span<const LabelledSegment> positives,
                   std::span<const LabelledSegment> negatives);

struct ScorerConfig {
  int hidden = 64;
  double learning_rate = 0.05;
  int epochs = 60;
  int batch_size = 32;
  double validation_fraction = 0.2;
  std::uint64_t seed = 7;
  /// t_max <= 0 selects ceil(max annotated length / 2).
  NegativeSamplingConfig negatives{1, 0, 1};
};

struct ScorerTrainReport {
  std::vector<double> loss_curve;      // full training loss after each epoch
  std::vector<double> val_loss_curve;
  int best_epoch = -1;
  double val_label_accuracy = 0.0;
  double val_segment_accuracy = 0.0;
  int train_positives = 0;
  int train_negatives = 0;
  int val_positives = 0;
  int val_negatives = 0;
  NegativeSamplingConfig negatives;
};

/// SGD with a fixed step and seed; returns the best-validation-loss checkpoint.
/// Throws TrainingDivergence on a non-finite loss.
ScorerModel train_scorer(const Dataset& annotated, const FeatureSchema& schema,
                         const ScorerConfig& cfg, ScorerTrainReport* report = nullptr);

int argmax(const Eigen::VectorXd& v);

}  // namespace playseg
