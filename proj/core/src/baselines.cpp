#include "playseg/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>
#include <string>

#include "playseg/error.hpp"

namespace playseg {
namespace {

struct PreparedWindow {
  FrameWindow window;
  Eigen::MatrixXd frames;
};

std::vector<PreparedWindow> prepare(const std::vector<FrameWindow>& windows,
                                    const FeatureSchema& schema) {
  std::vector<PreparedWindow> out;
  out.reserve(windows.size());
  for (const auto& w : windows) {
    out.push_back({w, window_frame_features(slice_segment(*w.trajectory, w.start, w.end), schema)});
  }
  return out;
}

Standardizer fit_context_standardizer(const std::vector<PreparedWindow>& windows, int dim) {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(dim);
  double n = 0.0;
  for (const auto& w : windows) {
    const Eigen::MatrixXd c = frame_context_features(w.frames);
    sum += c.colwise().sum().transpose();
    sq += c.array().square().matrix().colwise().sum().transpose();
    n += static_cast<double>(c.rows());
  }
  Standardizer s;
  s.mean = sum / std::max(1.0, n);
  s.inv_std.resize(dim);
  for (Eigen::Index j = 0; j < dim; ++j) {
    const double var = std::max(0.0, sq[j] / std::max(1.0, n) - s.mean[j] * s.mean[j]);
    const double sd = std::sqrt(var);
    s.inv_std[j] = sd > 1e-6 ? 1.0 / sd : 1.0;
  }
  return s;
}

Eigen::MatrixXd stack_inputs(const std::vector<PreparedWindow>& windows,
                             const std::vector<int>& idx, const Standardizer& norm) {
  Eigen::Index rows = 0;
  for (int i : idx) rows += windows[static_cast<std::size_t>(i)].frames.rows();
  Eigen::MatrixXd x(rows, norm.mean.size());
  Eigen::Index r = 0;
  for (int i : idx) {
    const auto& f = windows[static_cast<std::size_t>(i)].frames;
    x.middleRows(r, f.rows()) = norm.apply_rows(frame_context_features(f));
    r += f.rows();
  }
  return x;
}

std::vector<int> concat(const std::vector<std::vector<int>>& all, const std::vector<int>& idx) {
  std::vector<int> out;
  for (int i : idx) {
    const auto& v = all[static_cast<std::size_t>(i)];
    out.insert(out.end(), v.begin(), v.end());
  }
  return out;
}

BoundaryTargets concat(const std::vector<BoundaryTargets>& all, const std::vector<int>& idx) {
  BoundaryTargets out;
  for (int i : idx) {
    const auto& t = all[static_cast<std::size_t>(i)];
    out.labels.insert(out.labels.end(), t.labels.begin(), t.labels.end());
    out.to_start.insert(out.to_start.end(), t.to_start.begin(), t.to_start.end());
    out.to_end.insert(out.to_end.end(), t.to_end.begin(), t.to_end.end());
    out.inside.insert(out.inside.end(), t.inside.begin(), t.inside.end());
  }
  return out;
}

struct SplitWindows {
  std::vector<PreparedWindow> train;
  std::vector<PreparedWindow> val;
  int window = 0;
};

SplitWindows split_windows(const Dataset& annotated, const FeatureSchema& schema,
                           const FrameModelConfig& cfg, std::mt19937_64& rng) {
  cfg.validate();
  schema.validate();
  if (annotated.annotated.empty()) throw DataError("cannot train a crop model without annotations");
  SplitWindows s;
  s.window = cfg.window > 0 ? cfg.window : default_crop_window(annotated);
  auto windows = sample_training_windows(annotated, s.window, cfg.windows_per_segment, rng);
  std::vector<std::int64_t> parents;
  for (const auto& [id, traj] : annotated.trajectories()) parents.push_back(id);
  std::shuffle(parents.begin(), parents.end(), rng);
  const auto n = static_cast<int>(parents.size());
  int n_val = static_cast<int>(std::lround(cfg.validation_fraction * n));
  n_val = n >= 2 ? std::clamp(n_val, 1, n - 1) : 0;
  const std::set<std::int64_t> held_out(parents.begin(), parents.begin() + n_val);
  std::vector<FrameWindow> train;
  std::vector<FrameWindow> val;
  for (auto& w : windows) (held_out.contains(w.trajectory->id) ? val : train).push_back(std::move(w));
  std::shuffle(train.begin(), train.end(), rng);
  s.train = prepare(train, schema);
  s.val = prepare(val, schema);
  return s;
}

/// Minibatch SGD over whole windows; keeps the parameters with the lowest
/// validation loss (training loss when there is no validation data).
template <class Targets, class LossFn>
Mlp train_windows(const SplitWindows& data, const std::vector<Targets>& train_targets,
                  const std::vector<Targets>& val_targets, const Standardizer& norm,
                  int outputs, const FrameModelConfig& cfg, std::mt19937_64& rng, LossFn loss,
                  std::vector<double>& loss_curve, std::vector<double>& val_loss_curve,
                  const char* what) {
  Mlp net(static_cast<int>(norm.mean.size()), cfg.hidden, outputs, cfg.seed ^ 0xF7A3ULL);
  Mlp best = net;
  double best_loss = std::numeric_limits<double>::infinity();
  std::vector<int> order(data.train.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<int> val_idx(data.val.size());
  std::iota(val_idx.begin(), val_idx.end(), 0);
  const Eigen::MatrixXd val_x = data.val.empty() ? Eigen::MatrixXd() : stack_inputs(data.val, val_idx, norm);
  const Targets val_t = concat(val_targets, val_idx);

  MlpGradient grad;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_windows)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_windows));
      const std::vector<int> idx(order.begin() + static_cast<std::ptrdiff_t>(b),
                                 order.begin() + static_cast<std::ptrdiff_t>(e));
      const double l = loss(net, stack_inputs(data.train, idx, norm), concat(train_targets, idx), &grad);
      if (!std::isfinite(l)) {
        throw TrainingDivergence(std::string(what) + " loss became non-finite in epoch " +
                                 std::to_string(epoch));
      }
      net.apply_gradient(grad, cfg.learning_rate);
    }
    double total = 0.0;
    double rows = 0.0;
    for (std::size_t b = 0; b < order.size(); b += 64) {
      std::vector<int> idx;
      for (std::size_t i = b; i < std::min(order.size(), b + 64); ++i) idx.push_back(static_cast<int>(i));
      const Eigen::MatrixXd x = stack_inputs(data.train, idx, norm);
      total += loss(net, x, concat(train_targets, idx), nullptr) * static_cast<double>(x.rows());
      rows += static_cast<double>(x.rows());
    }
    const double train_loss = total / std::max(1.0, rows);
    if (!std::isfinite(train_loss) || !net.all_finite()) {
      throw TrainingDivergence(std::string(what) + " training diverged in epoch " +
                               std::to_string(epoch));
    }
    loss_curve.push_back(train_loss);
    const double v = data.val.empty() ? train_loss : loss(net, val_x, val_t, nullptr);
    val_loss_curve.push_back(v);
    if (v < best_loss) {
      best_loss = v;
      best = net;
    }
  }
  return best;
}

Eigen::MatrixXd window_inputs(std::span<const Observation> window, const FeatureSchema& schema,
                              const Standardizer& norm) {
  return norm.apply_rows(frame_context_features(window_frame_features(window, schema)));
}

Interval sample_window(int length, int window, std::mt19937_64& rng) {
  if (length <= window) return {0, length};
  std::uniform_int_distribution<int> start(0, length - window);
  const int s = start(rng);
  return {s, s + window};
}

}  // namespace

LengthRange LengthRange::of(const Dataset& annotated) {
  if (annotated.annotated.empty()) throw DataError("length range of an empty dataset");
  LengthRange r{std::numeric_limits<int>::max(), 0};
  for (const auto& s : annotated.annotated) {
    r.min = std::min(r.min, s.length());
    r.max = std::max(r.max, s.length());
  }
  return r;
}

std::optional<LabelledSegment> random_segment_extract(const LengthRange& range,
                                                      const Trajectory& play,
                                                      const WindowScorer& labeller,
                                                      std::mt19937_64& rng) {
  const int T = play.length();
  if (range.min < 1 || range.max < range.min) throw DataError("invalid segment length range");
  if (T < range.min) return std::nullopt;
  std::uniform_int_distribution<int> len_dist(range.min, std::min(range.max, T));
  const int len = len_dist(rng);
  std::uniform_int_distribution<int> start_dist(0, T - len);
  const int t0 = start_dist(rng);
  const Eigen::VectorXd dist = labeller.label_distribution(play, t0, t0 + len);
  const int label = argmax(dist);
  return LabelledSegment{play.id, t0, t0 + len, Instruction(label), dist[label]};
}

int context_dim(const FeatureSchema& schema) {
  return static_cast<int>(kContextBlocks.size()) * schema.frame_dim();
}

Eigen::MatrixXd frame_context_features(const Eigen::MatrixXd& frames) {
  const Eigen::Index n = frames.rows();
  const Eigen::Index d = frames.cols();
  Eigen::MatrixXd prefix = Eigen::MatrixXd::Zero(n + 1, d);
  for (Eigen::Index i = 0; i < n; ++i) prefix.row(i + 1) = prefix.row(i) + frames.row(i);
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(kContextBlocks.size()) * d);
  for (Eigen::Index t = 0; t < n; ++t) {
    for (std::size_t b = 0; b < kContextBlocks.size(); ++b) {
      const auto [lo, hi] = kContextBlocks[b];
      const Eigen::Index a = std::clamp<Eigen::Index>(t + lo, 0, n);
      const Eigen::Index z = std::clamp<Eigen::Index>(t + hi + 1, 0, n);
      const double span = static_cast<double>(hi - lo + 1);
      auto block = out.block(t, static_cast<Eigen::Index>(b) * d, 1, d);
      if (z > a) {
        block = (prefix.row(z) - prefix.row(a)) / span;
      } else {
        block.setZero();
      }
    }
  }
  return out;
}

std::vector<FrameWindow> sample_training_windows(const Dataset& annotated, int window,
                                                 int per_segment, std::mt19937_64& rng) {
  if (window < 1 || per_segment < 1) throw ConfigError("invalid crop training window settings");
  std::vector<FrameWindow> out;
  for (const auto& seg : annotated.annotated) {
    const Trajectory& traj = annotated.trajectory(seg.trajectory_id);
    const int T = traj.length();
    for (int k = 0; k < per_segment; ++k) {
      FrameWindow w{&traj, 0, T, seg};
      if (T > window && seg.length() <= window) {
        std::uniform_int_distribution<int> start(std::max(0, seg.t1 - window),
                                                 std::min(seg.t0, T - window));
        w.start = start(rng);
        w.end = w.start + window;
      } else if (T > window) {
        w.start = seg.t0;
        w.end = seg.t1;
      }
      out.push_back(w);
    }
  }
  return out;
}

std::vector<int> frame_targets(const FrameWindow& w) {
  std::vector<int> labels;
  labels.reserve(static_cast<std::size_t>(w.end - w.start + 1));
  for (int t = w.start; t <= w.end; ++t) {
    labels.push_back(t >= w.segment.t0 && t <= w.segment.t1 ? w.segment.instruction.label_id()
                                                           : kBackgroundClass);
  }
  return labels;
}

void FrameModelConfig::validate() const {
  if (hidden < 1 || epochs < 1 || batch_windows < 1 || windows_per_segment < 1 ||
      !(learning_rate > 0.0) || validation_fraction < 0.0 || validation_fraction >= 1.0 ||
      distance_weight < 0.0) {
    throw ConfigError("invalid crop model training settings");
  }
}

int default_crop_window(const Dataset& annotated) {
  const LengthRange r = LengthRange::of(annotated);
  return r.max + 2 * NegativeSamplingConfig::from_max_length(r.max).t_max;
}

FrameClassifier::FrameClassifier(FeatureSchema schema, Standardizer normalization, Mlp network,
                                 int window)
    : schema_(schema),
      normalization_(std::move(normalization)),
      network_(std::move(network)),
      window_(window) {
  if (network_.input_dim() != context_dim(schema_) || network_.output_dim() != kFrameClasses) {
    throw DataError("frame classifier network does not match its feature schema");
  }
}

Eigen::MatrixXd FrameClassifier::frame_probabilities(std::span<const Observation> window) const {
  const Eigen::MatrixXd out =
      network_.forward_batch(window_inputs(window, schema_, normalization_)).output;
  return log_softmax_rows(out).array().exp().matrix();
}

std::vector<int> FrameClassifier::frame_labels(std::span<const Observation> window) const {
  const Eigen::MatrixXd p = frame_probabilities(window);
  std::vector<int> labels(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index c = 0;
    p.row(i).maxCoeff(&c);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  return labels;
}

double frame_classifier_loss(const Mlp& net, const Eigen::MatrixXd& x, std::span<const int> labels,
                             MlpGradient* gradient) {
  if (x.rows() == 0 || static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw DataError("frame classifier loss needs one label per frame");
  }
  const auto act = net.forward_batch(x);
  const Eigen::MatrixXd logp = log_softmax_rows(act.output);
  const double n = static_cast<double>(x.rows());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < x.rows(); ++i) loss -= logp(i, labels[static_cast<std::size_t>(i)]);
  loss /= n;
  if (gradient) {
    Eigen::MatrixXd d = logp.array().exp().matrix();
    for (Eigen::Index i = 0; i < x.rows(); ++i) d(i, labels[static_cast<std::size_t>(i)]) -= 1.0;
    d /= n;
    *gradient = net.backward_batch(x, act, d);
  }
  return loss;
}

FrameClassifier train_frame_classifier(const Dataset& annotated, const FeatureSchema& schema,
                                       const FrameModelConfig& cfg,
                                       FrameClassifierReport* report) {
  std::mt19937_64 rng(cfg.seed);
  const SplitWindows data = split_windows(annotated, schema, cfg, rng);
  std::vector<std::vector<int>> train_t;
  std::vector<std::vector<int>> val_t;
  for (const auto& w : data.train) train_t.push_back(frame_targets(w.window));
  for (const auto& w : data.val) val_t.push_back(frame_targets(w.window));
  const Standardizer norm = fit_context_standardizer(data.train, context_dim(schema));

  FrameClassifierReport rep;
  rep.window = data.window;
  rep.train_windows = static_cast<int>(data.train.size());
  rep.val_windows = static_cast<int>(data.val.size());
  auto loss = [](const Mlp& net, const Eigen::MatrixXd& x, const std::vector<int>& t,
                 MlpGradient* g) { return frame_classifier_loss(net, x, t, g); };
  Mlp net = train_windows(data, train_t, val_t, norm, kFrameClasses, cfg, rng, loss,
                          rep.loss_curve, rep.val_loss_curve, "frame classifier");
  FrameClassifier model(schema, norm, std::move(net), data.window);

  int hits = 0;
  int frames = 0;
  int inside_ok = 0;
  for (std::size_t i = 0; i < data.val.size(); ++i) {
    const auto& w = data.val[i].window;
    const auto pred = model.frame_labels(slice_segment(*w.trajectory, w.start, w.end));
    for (std::size_t f = 0; f < pred.size(); ++f) {
      hits += pred[f] == val_t[i][f];
      ++frames;
    }
    const auto inner = model.frame_labels(slice_segment(*w.trajectory, w.segment.t0, w.segment.t1));
    const int label = w.segment.instruction.label_id();
    const auto agree = std::count(inner.begin(), inner.end(), label);
    inside_ok += agree + 2 >= static_cast<long>(inner.size());
  }
  rep.val_frame_accuracy = frames > 0 ? static_cast<double>(hits) / frames : 0.0;
  rep.val_inside_agreement =
      data.val.empty() ? 0.0 : static_cast<double>(inside_ok) / static_cast<double>(data.val.size());
  if (report) *report = std::move(rep);
  return model;
}

std::optional<CropResult> crop_frame_labels(std::span<const int> labels, const CropRule& rule) {
  int first = 0;
  int last = static_cast<int>(labels.size()) - 1;
  while (first <= last && labels[static_cast<std::size_t>(first)] == kBackgroundClass) ++first;
  while (last >= first && labels[static_cast<std::size_t>(last)] == kBackgroundClass) --last;
  if (first > last) return std::nullopt;
  const int n = last - first + 1;
  std::array<int, kFrameClasses> counts{};
  for (int i = first; i <= last; ++i) ++counts[static_cast<std::size_t>(labels[static_cast<std::size_t>(i)])];
  int label = labels[static_cast<std::size_t>(first)];
  if (rule.majority) {
    label = static_cast<int>(std::max_element(counts.begin(), counts.begin() + kNumInstructions) -
                             counts.begin());
    if (2 * counts[static_cast<std::size_t>(label)] <= n) return std::nullopt;
  } else if (counts[static_cast<std::size_t>(label)] != n) {
    return std::nullopt;
  }
  if (last - first < rule.min_length) return std::nullopt;
  return CropResult{first, last, label};
}

std::optional<LabelledSegment> framecrop_extract(const FrameClassifier& classifier,
                                                 const Trajectory& play, const CropRule& rule,
                                                 std::mt19937_64& rng) {
  const Interval w = sample_window(play.length(), classifier.window(), rng);
  const Eigen::MatrixXd p = classifier.frame_probabilities(slice_segment(play, w.start, w.end));
  std::vector<int> labels(static_cast<std::size_t>(p.rows()));
  for (Eigen::Index i = 0; i < p.rows(); ++i) {
    Eigen::Index c = 0;
    p.row(i).maxCoeff(&c);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(c);
  }
  const auto crop = crop_frame_labels(labels, rule);
  if (!crop) return std::nullopt;
  const double confidence = p.col(crop->label).segment(crop->first, crop->last - crop->first + 1).mean();
  return LabelledSegment{play.id, w.start + crop->first, w.start + crop->last,
                         Instruction(crop->label), confidence};
}

BoundaryRegressor::BoundaryRegressor(FeatureSchema schema, Standardizer normalization, Mlp network,
                                     int window)
    : schema_(schema),
      normalization_(std::move(normalization)),
      network_(std::move(network)),
      window_(window) {
  if (network_.input_dim() != context_dim(schema_) || network_.output_dim() != kBoundaryOutputs) {
    throw DataError("boundary regressor network does not match its feature schema");
  }
}

BoundaryRegressor::Prediction BoundaryRegressor::predict(std::span<const Observation> window) const {
  const Eigen::MatrixXd out =
      network_.forward_batch(window_inputs(window, schema_, normalization_)).output;
  const Eigen::MatrixXd prob = log_softmax_rows(out.leftCols(kFrameClasses)).array().exp().matrix();
  Eigen::Index anchor = 0;
  Eigen::Index label = 0;
  double conf = -1.0;
  for (Eigen::Index t = 0; t < prob.rows(); ++t) {
    Eigen::Index c = 0;
    const double p = prob.row(t).head(kNumInstructions).maxCoeff(&c);
    if (p > conf) {
      conf = p;
      anchor = t;
      label = c;
    }
  }
  const int n = static_cast<int>(prob.rows());
  const double scale = schema_.length_scale;
  const int a = static_cast<int>(anchor);
  Prediction pred;
  pred.start = std::clamp(a - static_cast<int>(std::lround(softplus(out(anchor, kFrameClasses)) * scale)),
                          0, n - 2);
  pred.end = std::clamp(a + static_cast<int>(std::lround(softplus(out(anchor, kFrameClasses + 1)) * scale)),
                        pred.start + 1, n - 1);
  pred.label = static_cast<int>(label);
  pred.confidence = conf;
  return pred;
}

BoundaryTargets boundary_targets(const FrameWindow& w, double length_scale) {
  BoundaryTargets t;
  t.labels = frame_targets(w);
  for (int f = w.start; f <= w.end; ++f) {
    const bool in = f >= w.segment.t0 && f <= w.segment.t1;
    t.inside.push_back(in ? 1 : 0);
    t.to_start.push_back(in ? (f - w.segment.t0) / length_scale : 0.0);
    t.to_end.push_back(in ? (w.segment.t1 - f) / length_scale : 0.0);
  }
  return t;
}

double boundary_loss(const Mlp& net, const Eigen::MatrixXd& x, const BoundaryTargets& targets,
                     double distance_weight, MlpGradient* gradient) {
  const Eigen::Index n = x.rows();
  if (n == 0 || static_cast<Eigen::Index>(targets.labels.size()) != n ||
      static_cast<Eigen::Index>(targets.inside.size()) != n) {
    throw DataError("boundary loss needs one target per frame");
  }
  const auto act = net.forward_batch(x);
  const Eigen::MatrixXd logp = log_softmax_rows(act.output.leftCols(kFrameClasses));
  double ce = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) ce -= logp(i, targets.labels[static_cast<std::size_t>(i)]);
  ce /= static_cast<double>(n);

  const auto n_in = std::count(targets.inside.begin(), targets.inside.end(), std::uint8_t{1});
  double se = 0.0;
  Eigen::MatrixXd d;
  if (gradient) {
    d = Eigen::MatrixXd::Zero(n, kBoundaryOutputs);
    d.leftCols(kFrameClasses) = logp.array().exp().matrix();
    for (Eigen::Index i = 0; i < n; ++i) d(i, targets.labels[static_cast<std::size_t>(i)]) -= 1.0;
    d.leftCols(kFrameClasses) /= static_cast<double>(n);
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!targets.inside[static_cast<std::size_t>(i)]) continue;
    const double zs = act.output(i, kFrameClasses);
    const double ze = act.output(i, kFrameClasses + 1);
    const double rs = softplus(zs) - targets.to_start[static_cast<std::size_t>(i)];
    const double re = softplus(ze) - targets.to_end[static_cast<std::size_t>(i)];
    se += rs * rs + re * re;
    if (gradient) {
      const double w = distance_weight * 2.0 / static_cast<double>(n_in);
      d(i, kFrameClasses) = w * rs * sigmoid(zs);
      d(i, kFrameClasses + 1) = w * re * sigmoid(ze);
    }
  }
  const double reg = n_in > 0 ? distance_weight * se / static_cast<double>(n_in) : 0.0;
  if (gradient) *gradient = net.backward_batch(x, act, d);
  return ce + reg;
}

BoundaryRegressor train_boundary_regressor(const Dataset& annotated, const FeatureSchema& schema,
                                           const FrameModelConfig& cfg,
                                           BoundaryRegressorReport* report) {
  std::mt19937_64 rng(cfg.seed);
  const SplitWindows data = split_windows(annotated, schema, cfg, rng);
  std::vector<BoundaryTargets> train_t;
  std::vector<BoundaryTargets> val_t;
  for (const auto& w : data.train) train_t.push_back(boundary_targets(w.window, schema.length_scale));
  for (const auto& w : data.val) val_t.push_back(boundary_targets(w.window, schema.length_scale));
  const Standardizer norm = fit_context_standardizer(data.train, context_dim(schema));

  BoundaryRegressorReport rep;
  rep.window = data.window;
  rep.train_windows = static_cast<int>(data.train.size());
  rep.val_windows = static_cast<int>(data.val.size());
  const double weight = cfg.distance_weight;
  auto loss = [weight](const Mlp& net, const Eigen::MatrixXd& x, const BoundaryTargets& t,
                       MlpGradient* g) { return boundary_loss(net, x, t, weight, g); };
  Mlp net = train_windows(data, train_t, val_t, norm, kBoundaryOutputs, cfg, rng, loss,
                          rep.loss_curve, rep.val_loss_curve, "boundary regressor");
  BoundaryRegressor model(schema, norm, std::move(net), data.window);

  double err = 0.0;
  int hits = 0;
  for (const auto& pw : data.val) {
    const auto& w = pw.window;
    const auto pred = model.predict(slice_segment(*w.trajectory, w.start, w.end));
    err += 0.5 * (std::abs(pred.start - (w.segment.t0 - w.start)) +
                  std::abs(pred.end - (w.segment.t1 - w.start)));
    hits += pred.label == w.segment.instruction.label_id();
  }
  if (!data.val.empty()) {
    rep.val_boundary_mae = err / static_cast<double>(data.val.size());
    rep.val_class_accuracy = static_cast<double>(hits) / static_cast<double>(data.val.size());
  }
  if (report) *report = std::move(rep);
  return model;
}

std::optional<LabelledSegment> boundarycrop_extract(const BoundaryRegressor& regressor,
                                                    const Trajectory& play, int min_length,
                                                    std::mt19937_64& rng) {
  const Interval w = sample_window(play.length(), regressor.window(), rng);
  const auto pred = regressor.predict(slice_segment(play, w.start, w.end));
  if (pred.end - pred.start < min_length) return std::nullopt;
  return LabelledSegment{play.id, w.start + pred.start, w.start + pred.end, Instruction(pred.label),
                         pred.confidence};
}

}  // namespace playseg
