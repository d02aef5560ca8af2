#include "playseg/scorer.hpp"

#include <algorithm>
#include <array>
#include <limits>
#include <string>
#include <cmath>
#include <numeric>

#include "playseg/error.hpp"

namespace playseg {
namespace {

struct WindowRef {
  const Trajectory* traj;
  Interval window;
  int label;  // -1 for negatives
};

Eigen::MatrixXd feature_rows(const std::vector<WindowRef>& windows, const FeatureSchema& schema) {
  Eigen::MatrixXd rows(static_cast<Eigen::Index>(windows.size()), schema.segment_dim());
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    rows.row(static_cast<Eigen::Index>(i)) =
        extract_segment_features(slice_segment(*w.traj, w.window.start, w.window.end), schema)
            .transpose();
  }
  return rows;
}

Eigen::MatrixXd gather_rows(const Eigen::MatrixXd& src, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), src.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(idx[i]);
  }
  return out;
}

struct Accuracy {
  double label = 0.0;
  double segment = 0.0;
};

Accuracy accuracy(const Mlp& net, const ScorerBatch& batch) {
  Accuracy acc;
  int label_hits = 0;
  int seg_hits = 0;
  for (Eigen::Index i = 0; i < batch.positives.rows(); ++i) {
    const Eigen::VectorXd out = net.forward(batch.positives.row(i).transpose());
    Eigen::Index best = 0;
    out.tail(kNumInstructions).maxCoeff(&best);
    label_hits += static_cast<int>(best) == batch.labels[static_cast<std::size_t>(i)];
    seg_hits += sigmoid(out[0]) > 0.5;
  }
  for (Eigen::Index i = 0; i < batch.negatives.rows(); ++i) {
    const Eigen::VectorXd out = net.forward(batch.negatives.row(i).transpose());
    seg_hits += sigmoid(out[0]) <= 0.5;
  }
  const auto np = static_cast<double>(batch.positives.rows());
  const auto nn = static_cast<double>(batch.negatives.rows());
  acc.label = np > 0 ? label_hits / np : 0.0;
  acc.segment = (np + nn) > 0 ? seg_hits / (np + nn) : 0.0;
  return acc;
}

}  // namespace

void NegativeSamplingConfig::validate() const {
  if (t_min < 1 || t_max < t_min) {
    throw ConfigError("negative sampling requires 1 <= t_min <= t_max");
  }
  if (negatives_per_form < 1) throw ConfigError("negatives_per_form must be positive");
}

NegativeSamplingConfig NegativeSamplingConfig::from_max_length(int max_segment_length) {
  NegativeSamplingConfig cfg;
  cfg.t_min = 1;
  cfg.t_max = std::max(1, (max_segment_length + 1) / 2);
  return cfg;
}

std::vector<NegativeWindow> negatives_with_offsets(const Interval& pos, int trajectory_length,
                                                   const NegativeOffsets& k) {
  const std::array<std::pair<Interval, NegativeForm>, 6> raw = {{
      {{pos.start, pos.end + k.right_grow}, NegativeForm::kRightGrow},
      {{pos.start, pos.end - k.right_shrink}, NegativeForm::kRightShrink},
      {{pos.start - k.left_grow, pos.end}, NegativeForm::kLeftGrow},
      {{pos.start - k.both_left, pos.end + k.both_right}, NegativeForm::kBothGrow},
      {{pos.start + k.translate_right, pos.end + k.translate_right},
       NegativeForm::kTranslateRight},
      {{pos.start - k.translate_left, pos.end - k.translate_left}, NegativeForm::kTranslateLeft},
  }};
  std::vector<NegativeWindow> out;
  for (const auto& [w, form] : raw) {
    Interval c{std::max(0, w.start), std::min(trajectory_length, w.end)};
    if (c.end - c.start < 1 || c == pos) continue;
    out.push_back({c, form});
  }
  return out;
}

std::vector<NegativeWindow> generate_negatives(const LabelledSegment& segment,
                                               int trajectory_length,
                                               const NegativeSamplingConfig& cfg,
                                               std::mt19937_64& rng) {
  cfg.validate();
  std::uniform_int_distribution<int> k(cfg.t_min, cfg.t_max);
  std::vector<NegativeWindow> out;
  for (int rep = 0; rep < cfg.negatives_per_form; ++rep) {
    NegativeOffsets o;
    o.right_grow = k(rng);
    o.right_shrink = k(rng);
    o.left_grow = k(rng);
    o.both_left = k(rng);
    o.both_right = k(rng);
    o.translate_right = k(rng);
    o.translate_left = k(rng);
    for (auto& n : negatives_with_offsets(segment.interval(), trajectory_length, o)) {
      out.push_back(n);
    }
  }
  return out;
}

ScorerModel::ScorerModel(FeatureSchema schema, Standardizer normalization, Mlp network)
    : schema_(schema), normalization_(std::move(normalization)), network_(std::move(network)) {
  if (network_.input_dim() != schema_.segment_dim() || network_.output_dim() != kScorerOutputs) {
    throw DataError("scorer network does not match the feature schema");
  }
}

Eigen::VectorXd ScorerModel::logits(const Eigen::VectorXd& segment_features) const {
  return network_.forward(normalization_.apply(segment_features));
}

double ScorerModel::predict_seg_prob(std::span<const Observation> window) const {
  return sigmoid(logits(extract_segment_features(window, schema_))[0]);
}

Eigen::VectorXd ScorerModel::predict_label_dist(std::span<const Observation> window) const {
  return softmax(logits(extract_segment_features(window, schema_)).tail(kNumInstructions));
}

double ScorerModel::segment_probability(const Trajectory& traj, int t0, int t1) const {
  return predict_seg_prob(slice_segment(traj, t0, t1));
}

Eigen::VectorXd ScorerModel::label_distribution(const Trajectory& traj, int t0, int t1) const {
  return predict_label_dist(slice_segment(traj, t0, t1));
}

double scorer_loss(const Mlp& network, const ScorerBatch& batch) {
  return scorer_loss(network, batch, nullptr);
}

double scorer_loss(const Mlp& network, const ScorerBatch& batch, MlpGradient* gradient) {
  const Eigen::Index np = batch.positives.rows();
  const Eigen::Index nn = batch.negatives.rows();
  if (np == 0) throw DataError("scorer loss needs at least one positive window");
  if (static_cast<Eigen::Index>(batch.labels.size()) != np) {
    throw DataError("one label per positive window is required");
  }
  Eigen::MatrixXd x(np + nn, batch.positives.cols());
  x.topRows(np) = batch.positives;
  if (nn > 0) x.bottomRows(nn) = batch.negatives;

  const auto act = network.forward_batch(x);
  const Eigen::MatrixXd label_logp =
      log_softmax_rows(act.output.topRows(np).rightCols(kNumInstructions));

  double pos_sum = 0.0;
  double neg_sum = 0.0;
  for (Eigen::Index i = 0; i < np; ++i) {
    pos_sum += -label_logp(i, batch.labels[static_cast<std::size_t>(i)]) +
               softplus(-act.output(i, 0));
  }
  for (Eigen::Index j = 0; j < nn; ++j) neg_sum += softplus(act.output(np + j, 0));
  const double loss = pos_sum / static_cast<double>(np) +
                      (nn > 0 ? neg_sum / static_cast<double>(nn) : 0.0);

  if (gradient) {
    Eigen::MatrixXd d_out = Eigen::MatrixXd::Zero(np + nn, kScorerOutputs);
    const double wp = 1.0 / static_cast<double>(np);
    for (Eigen::Index i = 0; i < np; ++i) {
      d_out(i, 0) = wp * (sigmoid(act.output(i, 0)) - 1.0);
      d_out.row(i).tail(kNumInstructions) = wp * label_logp.row(i).array().exp();
      d_out(i, 1 + batch.labels[static_cast<std::size_t>(i)]) -= wp;
    }
    if (nn > 0) {
      const double wn = 1.0 / static_cast<double>(nn);
      for (Eigen::Index j = 0; j < nn; ++j) d_out(np + j, 0) = wn * sigmoid(act.output(np + j, 0));
    }
    *gradient = network.backward_batch(x, act, d_out);
  }
  return loss;
}

double scorer_loss(const ScorerModel& model, const Dataset& data,
                   std::span<const LabelledSegment> positives,
                   std::span<const LabelledSegment> negatives) {
  std::vector<WindowRef> pos;
  std::vector<WindowRef> neg;
  for (const auto& s : positives) {
    pos.push_back({&data.trajectory(s.trajectory_id), s.interval(), s.instruction.label_id()});
  }
  for (const auto& s : negatives) {
    neg.push_back({&data.trajectory(s.trajectory_id), s.interval(), -1});
  }
  ScorerBatch batch;
  batch.positives = model.normalization().apply_rows(feature_rows(pos, model.schema()));
  batch.negatives = model.normalization().apply_rows(feature_rows(neg, model.schema()));
  for (const auto& p : pos) batch.labels.push_back(p.label);
  return scorer_loss(model.network(), batch);
}

int argmax(const Eigen::VectorXd& v) {
  Eigen::Index i = 0;
  v.maxCoeff(&i);
  return static_cast<int>(i);
}

ScorerModel train_scorer(const Dataset& annotated, const FeatureSchema& schema,
                         const ScorerConfig& cfg, ScorerTrainReport* report) {
  schema.validate();
  if (annotated.annotated.empty()) throw DataError("cannot train the scorer without annotations");
  if (cfg.validation_fraction <= 0.0 || cfg.validation_fraction >= 1.0) {
    throw ConfigError("scorer validation_fraction must lie in (0, 1)");
  }
  if (cfg.batch_size < 1 || cfg.epochs < 1 || !(cfg.learning_rate > 0.0)) {
    throw ConfigError("invalid scorer optimisation settings");
  }
  annotated.validate();

  NegativeSamplingConfig neg_cfg = cfg.negatives;
  if (neg_cfg.t_max <= 0) {
    int max_len = 0;
    for (const auto& s : annotated.annotated) max_len = std::max(max_len, s.length());
    neg_cfg = NegativeSamplingConfig::from_max_length(max_len);
    neg_cfg.negatives_per_form = cfg.negatives.negatives_per_form;
  }
  neg_cfg.validate();

  std::mt19937_64 rng(cfg.seed);
  std::vector<int> order(annotated.annotated.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n = static_cast<int>(order.size());
  int n_val = static_cast<int>(std::lround(cfg.validation_fraction * n));
  if (n >= 2) n_val = std::clamp(n_val, 1, n - 1);
  else n_val = 0;

  // Positives first, then each positive's negatives, per partition.
  std::vector<WindowRef> train_pos, train_neg, val_pos, val_neg;
  std::vector<std::vector<int>> train_neg_of;  // negatives per training positive
  for (int r = 0; r < n; ++r) {
    const auto& seg = annotated.annotated[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
    const Trajectory& traj = annotated.trajectory(seg.trajectory_id);
    const bool is_val = r < n_val;
    auto& pos = is_val ? val_pos : train_pos;
    auto& neg = is_val ? val_neg : train_neg;
    pos.push_back({&traj, seg.interval(), seg.instruction.label_id()});
    std::vector<int> mine;
    for (const auto& nw : generate_negatives(seg, traj.length(), neg_cfg, rng)) {
      mine.push_back(static_cast<int>(neg.size()));
      neg.push_back({&traj, nw.window, -1});
    }
    if (!is_val) train_neg_of.push_back(std::move(mine));
  }

  const Eigen::MatrixXd raw_tp = feature_rows(train_pos, schema);
  const Eigen::MatrixXd raw_tn = feature_rows(train_neg, schema);
  Eigen::MatrixXd all(raw_tp.rows() + raw_tn.rows(), schema.segment_dim());
  all.topRows(raw_tp.rows()) = raw_tp;
  all.bottomRows(raw_tn.rows()) = raw_tn;
  const Standardizer norm = Standardizer::fit(all);

  ScorerBatch train_full{norm.apply_rows(raw_tp), {}, norm.apply_rows(raw_tn)};
  for (const auto& p : train_pos) train_full.labels.push_back(p.label);
  ScorerBatch val_full;
  if (!val_pos.empty()) {
    val_full.positives = norm.apply_rows(feature_rows(val_pos, schema));
    val_full.negatives = norm.apply_rows(feature_rows(val_neg, schema));
    for (const auto& p : val_pos) val_full.labels.push_back(p.label);
  }

  Mlp net(schema.segment_dim(), cfg.hidden, kScorerOutputs, cfg.seed ^ 0x5C0ULL);
  Mlp best = net;
  double best_val = std::numeric_limits<double>::infinity();
  ScorerTrainReport rep;
  rep.negatives = neg_cfg;
  rep.train_positives = static_cast<int>(train_pos.size());
  rep.train_negatives = static_cast<int>(train_neg.size());
  rep.val_positives = static_cast<int>(val_pos.size());
  rep.val_negatives = static_cast<int>(val_neg.size());

  std::vector<int> pos_order(train_pos.size());
  std::iota(pos_order.begin(), pos_order.end(), 0);
  MlpGradient grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(pos_order.begin(), pos_order.end(), rng);
    for (std::size_t b = 0; b < pos_order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(pos_order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      std::vector<int> pidx(pos_order.begin() + static_cast<std::ptrdiff_t>(b),
                            pos_order.begin() + static_cast<std::ptrdiff_t>(e));
      std::vector<int> nidx;
      ScorerBatch batch;
      for (int p : pidx) {
        batch.labels.push_back(train_full.labels[static_cast<std::size_t>(p)]);
        for (int q : train_neg_of[static_cast<std::size_t>(p)]) nidx.push_back(q);
      }
      batch.positives = gather_rows(train_full.positives, pidx);
      batch.negatives = gather_rows(train_full.negatives, nidx);
      const double l = scorer_loss(net, batch, &grad);
      if (!std::isfinite(l)) {
        throw TrainingDivergence("scorer loss became non-finite in epoch " + std::to_string(epoch));
      }
      net.apply_gradient(grad, cfg.learning_rate);
    }
    const double train_loss = scorer_loss(net, train_full);
    if (!std::isfinite(train_loss) || !net.all_finite()) {
      throw TrainingDivergence("scorer training diverged in epoch " + std::to_string(epoch));
    }
    rep.loss_curve.push_back(train_loss);
    const double val_loss = val_pos.empty() ? train_loss : scorer_loss(net, val_full);
    rep.val_loss_curve.push_back(val_loss);
    if (val_loss < best_val) {
      best_val = val_loss;
      best = net;
      rep.best_epoch = epoch;
    }
  }

  ScorerModel model(schema, norm, best);
  if (!val_pos.empty()) {
    const auto acc = accuracy(best, val_full);
    rep.val_label_accuracy = acc.label;
    rep.val_segment_accuracy = acc.segment;
  }
  if (report) *report = std::move(rep);
  return model;
}

}  // namespace playseg
