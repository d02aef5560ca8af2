#include "playseg/core_model.hpp"

#include <array>
#include <sstream>

#include "playseg/error.hpp"

namespace playseg {
namespace {

constexpr std::array<std::string_view, kNumObjectTypes> kTypeNames = {"key", "ball", "box"};
constexpr std::array<std::string_view, kNumColors> kColorNames = {"red",    "green",  "blue",
                                                                  "purple", "yellow", "grey"};

}  // namespace

std::string_view action_name(Action a) {
  switch (a) {
    case Action::kTurnLeft: return "left";
    case Action::kTurnRight: return "right";
    case Action::kForward: return "forward";
    case Action::kDone: return "done";
  }
  return "?";
}

std::string_view object_type_name(int type) {
  if (type < 1 || type > kNumObjectTypes) throw DataError("object type out of range");
  return kTypeNames[static_cast<std::size_t>(type - 1)];
}

std::string_view color_name(int color) {
  if (color < 1 || color > kNumColors) throw DataError("color out of range");
  return kColorNames[static_cast<std::size_t>(color - 1)];
}

Cell Cell::from_code(int code) {
  if (code == 0) return {};
  const int type = code / 8;
  const int color = code % 8;
  if (type < 1 || type > kNumObjectTypes || color < 1 || color > kNumColors) {
    throw DataError("invalid cell code " + std::to_string(code));
  }
  return {static_cast<std::uint8_t>(type), static_cast<std::uint8_t>(color)};
}

Grid::Grid(int width, int height)
    : width_(width), height_(height),
      cells_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
  if (width < 1 || height < 1) throw DataError("grid dimensions must be positive");
}

Position step_forward(Position p, Direction d) {
  switch (d) {
    case Direction::kEast: return {p.x + 1, p.y};
    case Direction::kSouth: return {p.x, p.y + 1};
    case Direction::kWest: return {p.x - 1, p.y};
    case Direction::kNorth: return {p.x, p.y - 1};
  }
  return p;
}

Direction turn_left(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 3) % 4);
}

Direction turn_right(Direction d) {
  return static_cast<Direction>((static_cast<int>(d) + 1) % 4);
}

std::optional<Position> Observation::front() const {
  const Position p = step_forward(agent_pos, agent_dir);
  if (!grid->in_bounds(p)) return std::nullopt;
  return p;
}

bool operator==(const Observation& a, const Observation& b) {
  if (a.agent_pos != b.agent_pos || a.agent_dir != b.agent_dir) return false;
  if (a.grid == b.grid) return true;
  if (!a.grid || !b.grid) return false;
  return *a.grid == *b.grid;
}

void validate(const Observation& obs) {
  if (!obs.grid) throw DataError("observation without grid");
  if (!obs.grid->in_bounds(obs.agent_pos)) throw DataError("agent outside grid");
  if (!obs.grid->at(obs.agent_pos).empty()) throw DataError("agent overlaps an object");
}

Instruction::Instruction(int label_id) : label_id_(label_id) {
  if (label_id < 0 || label_id >= kNumInstructions) {
    throw DataError("instruction label out of range: " + std::to_string(label_id));
  }
}

Instruction Instruction::from_object(int type, int color) {
  if (type < 1 || type > kNumObjectTypes || color < 1 || color > kNumColors) {
    throw DataError("object description out of range");
  }
  return Instruction((type - 1) * kNumColors + (color - 1));
}

std::string Instruction::text() const {
  std::ostringstream out;
  out << "go to the " << color_name(color()) << ' ' << object_type_name(object_type());
  return out.str();
}

void validate(const Trajectory& traj) {
  if (traj.actions.empty()) throw DataError("trajectory must have at least one transition");
  if (traj.observations.size() != traj.actions.size() + 1) {
    throw DataError("trajectory " + std::to_string(traj.id) +
                    ": observation count must equal action count + 1");
  }
}

std::span<const Observation> slice_segment(const Trajectory& traj, int t0, int t1) {
  if (t0 < 0 || t0 >= t1 || t1 > traj.length()) {
    throw DataError("slice (" + std::to_string(t0) + ", " + std::to_string(t1) +
                    ") out of range for trajectory of length " + std::to_string(traj.length()));
  }
  return std::span<const Observation>(traj.observations)
      .subspan(static_cast<std::size_t>(t0), static_cast<std::size_t>(t1 - t0 + 1));
}

int Segmentation::num_segments() const {
  int k = 0;
  for (auto b : boundaries) k += b != 0;
  return k;
}

std::vector<Interval> boundaries_to_segments(const Segmentation& seg) {
  if (!seg.complete()) {
    throw DataError("incomplete segmentation: the final boundary flag must be set");
  }
  std::vector<Interval> out;
  int start = 0;
  for (int i = 0; i < seg.length(); ++i) {
    if (seg.boundaries[static_cast<std::size_t>(i)]) {
      out.push_back({start, i + 1});
      start = i + 1;
    }
  }
  return out;
}

Segmentation segments_to_boundaries(std::span<const Interval> intervals, int length,
                                    std::int64_t trajectory_id) {
  if (length < 1) throw DataError("segmentation length must be positive");
  Segmentation seg{trajectory_id, std::vector<std::uint8_t>(static_cast<std::size_t>(length), 0)};
  int expected_start = 0;
  for (const auto& iv : intervals) {
    if (iv.start != expected_start) throw DataError("intervals have a gap or overlap");
    if (iv.end <= iv.start || iv.end > length) throw DataError("interval out of range");
    seg.boundaries[static_cast<std::size_t>(iv.end - 1)] = 1;
    expected_start = iv.end;
  }
  if (expected_start != length) throw DataError("intervals do not cover the trajectory");
  return seg;
}

std::optional<int> last_boundary_before(std::span<const std::uint8_t> alpha, int t) {
  if (t >= static_cast<int>(alpha.size())) t = static_cast<int>(alpha.size()) - 1;
  for (int i = t; i >= 0; --i) {
    if (alpha[static_cast<std::size_t>(i)]) return i;
  }
  return std::nullopt;
}

void validate(const LabelledSegment& seg, const Trajectory& parent, int min_length) {
  if (seg.trajectory_id != parent.id) throw DataError("segment parent mismatch");
  if (seg.t0 < 0 || seg.t0 >= seg.t1 || seg.t1 > parent.length()) {
    throw DataError("segment (" + std::to_string(seg.t0) + ", " + std::to_string(seg.t1) +
                    ") out of range in trajectory " + std::to_string(parent.id));
  }
  if (seg.length() < min_length) throw DataError("segment shorter than the minimum size");
  if (seg.confidence < 0.0 || seg.confidence > 1.0) throw DataError("confidence outside [0,1]");
}

std::string_view split_tag_name(SplitTag tag) {
  switch (tag) {
    case SplitTag::kFull: return "full";
    case SplitTag::kHalf: return "50";
    case SplitTag::kQuarter: return "25";
    case SplitTag::kTenth: return "10";
    case SplitTag::kValidation: return "validation";
    case SplitTag::kUnannotated: return "unannotated";
  }
  return "?";
}

SplitTag split_tag_from_name(std::string_view name) {
  for (auto tag : {SplitTag::kFull, SplitTag::kHalf, SplitTag::kQuarter, SplitTag::kTenth,
                   SplitTag::kValidation, SplitTag::kUnannotated}) {
    if (split_tag_name(tag) == name) return tag;
  }
  if (name == "100") return SplitTag::kFull;
  throw DataError("unknown split tag: " + std::string(name));
}

double split_fraction(SplitTag tag) {
  switch (tag) {
    case SplitTag::kFull: return 1.0;
    case SplitTag::kHalf: return 0.5;
    case SplitTag::kQuarter: return 0.25;
    case SplitTag::kTenth: return 0.1;
    default: throw DataError("split tag has no nested fraction");
  }
}

void Dataset::add_trajectory(TrajectoryPtr traj) {
  const auto id = traj->id;
  const Trajectory* raw = traj.get();
  auto [it, inserted] = trajectories_.emplace(id, std::move(traj));
  if (!inserted && it->second.get() != raw) {
    throw DataError("duplicate trajectory id " + std::to_string(id));
  }
}

const Trajectory& Dataset::trajectory(std::int64_t id) const { return *trajectory_ptr(id); }

TrajectoryPtr Dataset::trajectory_ptr(std::int64_t id) const {
  auto it = trajectories_.find(id);
  if (it == trajectories_.end()) throw DataError("unknown trajectory id " + std::to_string(id));
  return it->second;
}

void Dataset::validate(int min_length) const {
  for (const auto& [id, traj] : trajectories_) playseg::validate(*traj);
  for (const auto& seg : annotated) {
    if (!has_trajectory(seg.trajectory_id)) {
      throw DataError("annotated segment references missing trajectory " +
                      std::to_string(seg.trajectory_id));
    }
    playseg::validate(seg, trajectory(seg.trajectory_id), min_length);
  }
  for (auto id : unannotated) {
    if (!has_trajectory(id)) throw DataError("missing play trajectory " + std::to_string(id));
  }
}

}  // namespace playseg
