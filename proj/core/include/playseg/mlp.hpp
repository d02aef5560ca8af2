#pragma once

// One-hidden-layer tanh network with manual backpropagation, shared by the
// scorer, the baseline crop models and the policy. Heads interpret slices of the
// output logits.

#include <cstdint>

#include <Eigen/Core>

namespace playseg {

struct MlpGradient {
  Eigen::MatrixXd w1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;
  Eigen::VectorXd b2;

  Eigen::VectorXd flatten() const;
};

class Mlp {
 public:
  Mlp() = default;
  /// Glorot-uniform weights from a seeded generator, zero biases.
  Mlp(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed);

  int input_dim() const { return static_cast<int>(w1.cols()); }
  int hidden_dim() const { return static_cast<int>(w1.rows()); }
  int output_dim() const { return static_cast<int>(w2.rows()); }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  struct Activations {
    Eigen::MatrixXd hidden;  // samples x hidden
    Eigen::MatrixXd output;  // samples x outputs
  };
  /// Rows of `x` are samples.
  Activations forward_batch(const Eigen::MatrixXd& x) const;
  MlpGradient backward_batch(const Eigen::MatrixXd& x, const Activations& act,
                             const Eigen::MatrixXd& d_output) const;

  void apply_gradient(const MlpGradient& g, double step);
  bool all_finite() const;

  Eigen::VectorXd flat_parameters() const;
  void set_flat_parameters(const Eigen::VectorXd& flat);
  Eigen::Index num_parameters() const;

  Eigen::MatrixXd w1;  // hidden x input
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // output x hidden
  Eigen::VectorXd b2;
};

/// Per-feature affine normalization fitted on training inputs.
struct Standardizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  static Standardizer fit(const Eigen::MatrixXd& rows);
  static Standardizer identity(int dim);
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply_rows(const Eigen::MatrixXd& rows) const;
};

double sigmoid(double z);
/// log(1 + exp(z)) without overflow.
double softplus(double z);
Eigen::VectorXd softmax(const Eigen::VectorXd& logits);
/// Row-wise log-softmax.
Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits);

}  // namespace playseg
