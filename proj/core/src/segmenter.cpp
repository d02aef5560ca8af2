#include "playseg/segmenter.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "playseg/error.hpp"

namespace playseg {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

SegmentationResult infeasible_result(int length) {
  SegmentationResult r;
  r.segmentation.boundaries.assign(static_cast<std::size_t>(length), 0);
  return r;
}

void finish(SegmentationResult& r, int length) {
  r.segmentation = segments_to_boundaries(r.segments, length);
}

}  // namespace

void Band::validate() const {
  if (min_length < 1 || max_length < min_length) {
    throw ConfigError("segment length band requires 1 <= min_length <= max_length");
  }
}

std::int64_t band_pair_count(int length, const Band& band) {
  std::int64_t n = 0;
  for (int len = band.min_length; len <= std::min(band.max_length, length); ++len) {
    n += length - len + 1;
  }
  return n;
}

double clamp_probability(double p) {
  return std::clamp(p, kProbabilityClamp, 1.0 - kProbabilityClamp);
}

ScoreMatrix::ScoreMatrix(int length, Band band) : length_(length), band_(band) {
  if (length < 1) throw DataError("score matrix needs at least one transition");
  band_.validate();
  p_.assign(static_cast<std::size_t>(length) * static_cast<std::size_t>(length),
            std::numeric_limits<double>::quiet_NaN());
}

double ScoreMatrix::at(int i, int j) const {
  if (!in_band(i, j)) {
    throw std::out_of_range("score (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is outside the band");
  }
  return p_[index(i, j)];
}

void ScoreMatrix::set(int i, int j, double p) {
  if (!in_band(i, j)) {
    throw std::out_of_range("score (" + std::to_string(i) + ", " + std::to_string(j) +
                            ") is outside the band");
  }
  if (!(p > 0.0 && p < 1.0)) throw DataError("segment probability must lie in (0, 1)");
  p_[index(i, j)] = p;
}

ScoreMatrix build_score_matrix(const WindowProbability& prob, int length, const Band& band) {
  ScoreMatrix m(length, band);
  for (int i = 0; i < length; ++i) {
    const int j_lo = i + band.min_length - 1;
    const int j_hi = std::min(length - 1, i + band.max_length - 1);
    for (int j = j_lo; j <= j_hi; ++j) {
      m.set(i, j, prob(i, j + 1));
      ++m.evaluations;
    }
  }
  return m;
}

ScoreMatrix build_score_matrix(const WindowScorer& scorer, const Trajectory& traj, int offset,
                               int length, const Band& band) {
  if (offset < 0 || offset + length > traj.length()) {
    throw DataError("score window exceeds the trajectory");
  }
  return build_score_matrix(
      [&](int t0, int t1) { return scorer.segment_probability(traj, offset + t0, offset + t1); },
      length, band);
}

SegmentationResult dp_segment(const ScoreMatrix& scores) {
  const int T = scores.length();
  const Band& band = scores.band();
  const int minlen = band.min_length;
  const int maxlen = band.max_length;

  // cum[s][m] = sum of log(1 - p(s, s + minlen - 1 + m')) for m' < m.
  std::vector<std::vector<double>> cum(static_cast<std::size_t>(T));
  std::vector<std::vector<double>> log_end(static_cast<std::size_t>(T));
  for (int s = 0; s < T; ++s) {
    auto& c = cum[static_cast<std::size_t>(s)];
    auto& le = log_end[static_cast<std::size_t>(s)];
    c.push_back(0.0);
    for (int j = s + minlen - 1; j <= std::min(T - 1, s + maxlen - 1); ++j) {
      const double p = clamp_probability(scores.at(s, j));
      le.push_back(std::log(p));
      c.push_back(c.back() + std::log1p(-p));
    }
  }
  auto seg_ll = [&](int s, int e) {
    const auto m = static_cast<std::size_t>(e - s - minlen);
    return cum[static_cast<std::size_t>(s)][m] + log_end[static_cast<std::size_t>(s)][m];
  };

  const int kmax = T / minlen;
  if (kmax < 1) return infeasible_result(T);
  std::vector<std::vector<double>> S(static_cast<std::size_t>(kmax + 1),
                                     std::vector<double>(static_cast<std::size_t>(T + 1), kNegInf));
  std::vector<std::vector<int>> back(static_cast<std::size_t>(kmax + 1),
                                     std::vector<int>(static_cast<std::size_t>(T + 1), -1));
  SegmentationResult r;
  for (int k = minlen; k <= std::min(T, maxlen); ++k) S[1][static_cast<std::size_t>(k)] = seg_ll(0, k);

  for (int i = 2; i <= kmax; ++i) {
    const auto& prev = S[static_cast<std::size_t>(i - 1)];
    auto& cur = S[static_cast<std::size_t>(i)];
    auto& bp = back[static_cast<std::size_t>(i)];
    const int k_hi = static_cast<int>(std::min<std::int64_t>(T, std::int64_t{i} * maxlen));
    for (int k = i * minlen; k <= k_hi; ++k) {
      const int l_lo = std::max((i - 1) * minlen, k - maxlen);
      const int l_hi = static_cast<int>(
          std::min<std::int64_t>(std::int64_t{i - 1} * maxlen, k - minlen));
      double best = kNegInf;
      int arg = -1;
      for (int l = l_lo; l <= l_hi; ++l) {
        ++r.inner_updates;
        const double base = prev[static_cast<std::size_t>(l)];
        if (base == kNegInf) continue;
        const double v = base + seg_ll(l, k);
        if (v > best) {
          best = v;
          arg = l;
        }
      }
      cur[static_cast<std::size_t>(k)] = best;
      bp[static_cast<std::size_t>(k)] = arg;
    }
  }

  int best_i = -1;
  double best = kNegInf;
  for (int i = 1; i <= kmax; ++i) {
    const double v = S[static_cast<std::size_t>(i)][static_cast<std::size_t>(T)];
    if (v > best) {
      best = v;
      best_i = i;
    }
  }
  if (best_i < 0) {
    auto inf = infeasible_result(T);
    inf.inner_updates = r.inner_updates;
    return inf;
  }

  r.feasible = true;
  r.log_likelihood = best;
  int k = T;
  for (int i = best_i; i >= 1; --i) {
    const int l = i == 1 ? 0 : back[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    r.segments.push_back({l, k});
    k = l;
  }
  std::reverse(r.segments.begin(), r.segments.end());
  finish(r, T);
  return r;
}

std::optional<double> evaluate_segmentation(const ScoreMatrix& scores,
                                            std::span<const std::uint8_t> alpha) {
  const int T = scores.length();
  if (static_cast<int>(alpha.size()) != T) {
    throw DataError("boundary vector length does not match the score matrix");
  }
  if (alpha.back() != 1) return std::nullopt;
  const Band& band = scores.band();
  double ll = 0.0;
  for (int t = 0; t < T; ++t) {
    const auto lb = t == 0 ? std::nullopt : last_boundary_before(alpha, t - 1);
    const int s = lb ? *lb + 1 : 0;
    const int len = t + 1 - s;
    if (len > band.max_length) return std::nullopt;
    if (len < band.min_length) {
      if (alpha[static_cast<std::size_t>(t)]) return std::nullopt;
      continue;
    }
    const double p = clamp_probability(scores.at(s, t));
    ll += alpha[static_cast<std::size_t>(t)] ? std::log(p) : std::log1p(-p);
  }
  return ll;
}

SegmentationResult brute_force_segment(const ScoreMatrix& scores) {
  const int T = scores.length();
  if (T > kBruteForceMaxLength) {
    throw ConfigError("brute-force segmentation is limited to T <= " +
                      std::to_string(kBruteForceMaxLength));
  }
  SegmentationResult best = infeasible_result(T);
  std::vector<std::uint8_t> alpha(static_cast<std::size_t>(T), 0);
  alpha.back() = 1;
  const std::uint32_t masks = 1u << (T - 1);
  for (std::uint32_t mask = 0; mask < masks; ++mask) {
    for (int b = 0; b + 1 < T; ++b) alpha[static_cast<std::size_t>(b)] = (mask >> b) & 1u;
    const auto v = evaluate_segmentation(scores, alpha);
    ++best.inner_updates;
    if (v && (!best.feasible || *v > best.log_likelihood)) {
      best.feasible = true;
      best.log_likelihood = *v;
      best.segmentation.boundaries = alpha;
    }
  }
  if (best.feasible) best.segments = boundaries_to_segments(best.segmentation);
  return best;
}

void SegmenterConfig::validate() const {
  band.validate();
  if (band.max_length > window) {
    throw ConfigError("segment max_length must not exceed the window size");
  }
  if (!(advance_threshold >= 0.0 && advance_threshold <= 1.0)) {
    throw ConfigError("advance threshold must lie in [0, 1]");
  }
}

PlaySegmentation segment_play_trajectory(const WindowScorer& scorer, const Trajectory& traj,
                                         const SegmenterConfig& cfg) {
  cfg.validate();
  validate(traj);
  const int T = traj.length();
  PlaySegmentation out;
  out.trajectory_id = traj.id;
  int start = 0;
  while (start < T) {
    const int end = std::min(start + cfg.window, T);
    WindowRecord rec{start, end, 0, 0, true};
    const bool last_window = end == T;
    int next = start;

    if (end - start < cfg.band.min_length) {
      rec.feasible = false;
      out.windows.push_back(rec);
      out.gaps.push_back({start, end});
      break;
    }
    const ScoreMatrix m = build_score_matrix(scorer, traj, start, end - start, cfg.band);
    const SegmentationResult r = dp_segment(m);
    rec.evaluations = m.evaluations;
    rec.inner_updates = r.inner_updates;
    rec.feasible = r.feasible;
    out.evaluations += m.evaluations;
    out.inner_updates += r.inner_updates;
    out.windows.push_back(rec);

    if (!r.feasible) {
      if (last_window) {
        out.gaps.push_back({start, end});
        break;
      }
    } else if (last_window) {
      for (const auto& s : r.segments) out.segments.push_back({start + s.start, start + s.end});
      break;
    } else {
      for (std::size_t i = 0; i + 1 < r.segments.size(); ++i) {
        out.segments.push_back({start + r.segments[i].start, start + r.segments[i].end});
      }
      const Interval& tail = r.segments.back();
      if (m.at(tail.start, tail.end - 1) > cfg.advance_threshold) {
        out.segments.push_back({start + tail.start, start + tail.end});
        next = end;
      } else {
        next = start + tail.start;
      }
    }

    if (next == start) {
      out.stalls.push_back(start);
      next = std::min(T, start + cfg.effective_stall_advance());
      out.gaps.push_back({start, next});
    }
    start = next;
  }
  return out;
}

std::vector<LabelledSegment> label_segments(const WindowScorer& scorer, const Trajectory& traj,
                                            std::span<const Interval> segments) {
  std::vector<LabelledSegment> out;
  out.reserve(segments.size());
  for (const auto& s : segments) {
    const Eigen::VectorXd dist = scorer.label_distribution(traj, s.start, s.end);
    const int label = argmax(dist);
    out.push_back({traj.id, s.start, s.end, Instruction(label), dist[label]});
  }
  return out;
}

}  // namespace playseg
