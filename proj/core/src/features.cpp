#include "playseg/features.hpp"

#include <algorithm>
#include <array>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "playseg/error.hpp"

namespace playseg {
namespace {

struct Egocentric {
  int forward = 0;
  int lateral = 0;  // positive to the agent's right
};

Egocentric to_egocentric(Position agent, Direction dir, Position target) {
  const int dx = target.x - agent.x;
  const int dy = target.y - agent.y;
  switch (dir) {
    case Direction::kEast: return {dx, dy};
    case Direction::kSouth: return {dy, -dx};
    case Direction::kWest: return {-dx, -dy};
    case Direction::kNorth: return {-dy, dx};
  }
  return {};
}

}  // namespace

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string FeatureSchema::describe() const {
  std::ostringstream s;
  s << "playseg-features/v1 grid=" << width << 'x' << height << " objects=" << max_objects
    << " length_scale=" << length_scale << " frame_dim=" << frame_dim();
  return s.str();
}

std::uint64_t FeatureSchema::hash() const { return fnv1a64(describe()); }

void FeatureSchema::validate() const {
  if (width < 1 || height < 1 || max_objects < 0 || !(length_scale > 0.0)) {
    throw ConfigError("invalid feature schema");
  }
}

void frame_features(const Observation& obs, const Observation* previous,
                    const FeatureSchema& schema, Eigen::Ref<Eigen::VectorXd> out) {
  const Grid& g = *obs.grid;
  if (g.width() != schema.width || g.height() != schema.height) {
    throw DataError("observation grid does not match the feature schema");
  }
  if (out.size() != schema.frame_dim()) throw DataError("frame feature buffer has wrong size");
  out.setZero();
  const double scale = static_cast<double>(std::max(schema.width, schema.height));

  int o = 0;
  out[o + obs.agent_pos.x] = 1.0;
  o += schema.width;
  out[o + obs.agent_pos.y] = 1.0;
  o += schema.height;
  out[o + static_cast<int>(obs.agent_dir)] = 1.0;
  o += 4;

  const int slots_offset = o;
  const int labels_offset = schema.label_block_offset();
  std::array<int, kNumInstructions> best_dist;
  best_dist.fill(std::numeric_limits<int>::max());
  const auto front = obs.front();

  int slot = 0;
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) {
      const Cell& c = g.at({x, y});
      if (c.empty()) continue;
      const Egocentric e = to_egocentric(obs.agent_pos, obs.agent_dir, {x, y});
      if (slot < schema.max_objects) {
        const int s = slots_offset + slot * FeatureSchema::kSlotWidth;
        out[s] = 1.0;
        out[s + 1] = e.forward / scale;
        out[s + 2] = e.lateral / scale;
        out[s + 3 + (c.type - 1)] = 1.0;
        out[s + 3 + kNumObjectTypes + (c.color - 1)] = 1.0;
      }
      ++slot;

      const int label = Instruction::from_object(c.type, c.color).label_id();
      const int dist = std::abs(x - obs.agent_pos.x) + std::abs(y - obs.agent_pos.y);
      if (dist >= best_dist[static_cast<std::size_t>(label)]) continue;
      best_dist[static_cast<std::size_t>(label)] = dist;
      const int b = labels_offset + label * FeatureSchema::kLabelWidth;
      out[b] = 1.0;
      out[b + 1] = e.forward / scale;
      out[b + 2] = e.lateral / scale;
      out[b + 3] = 0.0;
      out[b + 4] = (e.lateral == 0 && e.forward > 0) ? 1.0 : 0.0;
      out[b + 5] = e.lateral < 0 ? 1.0 : 0.0;
      out[b + 6] = e.lateral > 0 ? 1.0 : 0.0;
      out[b + 7] = (e.lateral == 0 && e.forward < 0) ? 1.0 : 0.0;
    }
  }

  const int t = schema.frame_dim() - FeatureSchema::kTrailerWidth;
  if (!front) {
    out[t] = 1.0;
  } else if (const Cell& c = g.at(*front); !c.empty()) {
    out[t + 1] = 1.0;
    const int label = Instruction::from_object(c.type, c.color).label_id();
    out[labels_offset + label * FeatureSchema::kLabelWidth + 3] = 1.0;
  }
  if (previous != nullptr && *previous == obs) out[t + 2] = 1.0;
}

Eigen::VectorXd frame_features(const Observation& obs, const Observation* previous,
                               const FeatureSchema& schema) {
  Eigen::VectorXd out(schema.frame_dim());
  frame_features(obs, previous, schema, out);
  return out;
}

Eigen::MatrixXd window_frame_features(std::span<const Observation> window,
                                      const FeatureSchema& schema) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(window.size()), schema.frame_dim());
  Eigen::VectorXd row(schema.frame_dim());
  for (std::size_t i = 0; i < window.size(); ++i) {
    frame_features(window[i], i == 0 ? nullptr : &window[i - 1], schema, row);
    out.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return out;
}

Eigen::VectorXd extract_segment_features(std::span<const Observation> window,
                                         const FeatureSchema& schema) {
  if (window.size() < 2) {
    throw DataError("segment features need at least two observations (one transition)");
  }
  const int d = schema.frame_dim();
  Eigen::VectorXd out = Eigen::VectorXd::Zero(schema.segment_dim());
  Eigen::VectorXd frame(d);
  for (std::size_t i = 0; i < window.size(); ++i) {
    frame_features(window[i], i == 0 ? nullptr : &window[i - 1], schema, frame);
    if (i == 0) out.segment(0, d) = frame;
    if (i + 1 == window.size()) out.segment(d, d) = frame;
    out.segment(2 * d, d) += frame;
  }
  out.segment(2 * d, d) /= static_cast<double>(window.size());
  out[3 * d] = static_cast<double>(window.size() - 1) / schema.length_scale;
  return out;
}

}  // namespace playseg
