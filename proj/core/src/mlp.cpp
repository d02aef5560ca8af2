#include "playseg/mlp.hpp"

#include <cmath>
#include <random>

#include "playseg/error.hpp"

namespace playseg {

Eigen::VectorXd MlpGradient::flatten() const {
  Eigen::VectorXd flat(w1.size() + b1.size() + w2.size() + b2.size());
  Eigen::Index o = 0;
  flat.segment(o, w1.size()) = Eigen::Map<const Eigen::VectorXd>(w1.data(), w1.size());
  o += w1.size();
  flat.segment(o, b1.size()) = b1;
  o += b1.size();
  flat.segment(o, w2.size()) = Eigen::Map<const Eigen::VectorXd>(w2.data(), w2.size());
  o += w2.size();
  flat.segment(o, b2.size()) = b2;
  return flat;
}

Mlp::Mlp(int input_dim, int hidden_dim, int output_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) {
    throw ConfigError("network dimensions must be positive");
  }
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Eigen::MatrixXd& m) {
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = u(rng);
    }
  };
  w1.resize(hidden_dim, input_dim);
  w2.resize(output_dim, hidden_dim);
  glorot(w1);
  glorot(w2);
  b1 = Eigen::VectorXd::Zero(hidden_dim);
  b2 = Eigen::VectorXd::Zero(output_dim);
}

Eigen::VectorXd Mlp::forward(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd h = (w1 * x + b1).array().tanh().matrix();
  return w2 * h + b2;
}

Mlp::Activations Mlp::forward_batch(const Eigen::MatrixXd& x) const {
  Activations act;
  act.hidden = ((x * w1.transpose()).rowwise() + b1.transpose()).array().tanh().matrix();
  act.output = (act.hidden * w2.transpose()).rowwise() + b2.transpose();
  return act;
}

MlpGradient Mlp::backward_batch(const Eigen::MatrixXd& x, const Activations& act,
                                const Eigen::MatrixXd& d_output) const {
  MlpGradient g;
  g.w2 = d_output.transpose() * act.hidden;
  g.b2 = d_output.colwise().sum().transpose();
  const Eigen::MatrixXd d_hidden =
      ((d_output * w2).array() * (1.0 - act.hidden.array().square())).matrix();
  g.w1 = d_hidden.transpose() * x;
  g.b1 = d_hidden.colwise().sum().transpose();
  return g;
}

void Mlp::apply_gradient(const MlpGradient& g, double step) {
  w1.noalias() -= step * g.w1;
  b1.noalias() -= step * g.b1;
  w2.noalias() -= step * g.w2;
  b2.noalias() -= step * g.b2;
}

bool Mlp::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite();
}

Eigen::Index Mlp::num_parameters() const { return w1.size() + b1.size() + w2.size() + b2.size(); }

Eigen::VectorXd Mlp::flat_parameters() const {
  MlpGradient view{w1, b1, w2, b2};
  return view.flatten();
}

void Mlp::set_flat_parameters(const Eigen::VectorXd& flat) {
  if (flat.size() != num_parameters()) throw DataError("parameter vector has wrong size");
  Eigen::Index o = 0;
  Eigen::Map<Eigen::VectorXd>(w1.data(), w1.size()) = flat.segment(o, w1.size());
  o += w1.size();
  b1 = flat.segment(o, b1.size());
  o += b1.size();
  Eigen::Map<Eigen::VectorXd>(w2.data(), w2.size()) = flat.segment(o, w2.size());
  o += w2.size();
  b2 = flat.segment(o, b2.size());
}

Standardizer Standardizer::fit(const Eigen::MatrixXd& rows) {
  Standardizer s;
  const double n = static_cast<double>(rows.rows());
  s.mean = rows.colwise().mean().transpose();
  s.inv_std.resize(rows.cols());
  for (Eigen::Index j = 0; j < rows.cols(); ++j) {
    const double var = (rows.col(j).array() - s.mean[j]).square().sum() / std::max(1.0, n);
    const double sd = std::sqrt(var);
    s.inv_std[j] = sd > 1e-6 ? 1.0 / sd : 1.0;
  }
  return s;
}

Standardizer Standardizer::identity(int dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

Eigen::VectorXd Standardizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw DataError("feature dimension does not match normalization");
  return ((x - mean).array() * inv_std.array()).matrix();
}

Eigen::MatrixXd Standardizer::apply_rows(const Eigen::MatrixXd& rows) const {
  if (rows.cols() != mean.size()) {
    throw DataError("feature dimension does not match normalization");
  }
  return ((rows.rowwise() - mean.transpose()).array().rowwise() * inv_std.transpose().array())
      .matrix();
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const double m = logits.maxCoeff();
  Eigen::VectorXd e = (logits.array() - m).exp().matrix();
  return e / e.sum();
}

Eigen::MatrixXd log_softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd out(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    const double lse = m + std::log((logits.row(i).array() - m).exp().sum());
    out.row(i) = logits.row(i).array() - lse;
  }
  return out;
}

}  // namespace playseg
