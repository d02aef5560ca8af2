#pragma once

// Domain types shared by every playseg module: grid observations, trajectories,
// instructions, boundary-vector segmentations and annotated datasets.
//
// Index convention used throughout the library:
//   * a trajectory of length T has observations o_0..o_T and actions a_0..a_{T-1};
//   * a segment (t0, t1) covers observations o_{t0..t1}, i.e. t1 - t0 transitions;
//   * its end is marked by the boundary flag alpha_{t1-1} = 1;
//   * a complete segmentation has alpha_{T-1} = 1.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace playseg {

inline constexpr int kNumObjectTypes = 3;
inline constexpr int kNumColors = 6;
inline constexpr int kNumInstructions = kNumObjectTypes * kNumColors;
inline constexpr int kNumActions = 4;

enum class Action : std::uint8_t { kTurnLeft = 0, kTurnRight = 1, kForward = 2, kDone = 3 };

/// Headings in clockwise order; y grows downwards.
enum class Direction : std::uint8_t { kEast = 0, kSouth = 1, kWest = 2, kNorth = 3 };

std::string_view action_name(Action a);
std::string_view object_type_name(int type);  // 1..3
std::string_view color_name(int color);       // 1..6

struct Position {
  int x = 0;
  int y = 0;
  friend bool operator==(const Position&, const Position&) = default;
};

/// One grid cell: type 0 means empty, otherwise type in 1..3 and color in 1..6.
struct Cell {
  std::uint8_t type = 0;
  std::uint8_t color = 0;

  bool empty() const { return type == 0; }
  /// Flat integer code used by the file format: 0 empty, else type * 8 + color.
  int code() const { return empty() ? 0 : type * 8 + color; }
  static Cell from_code(int code);
  friend bool operator==(const Cell&, const Cell&) = default;
};

class Grid {
 public:
  Grid() = default;
  Grid(int width, int height);

  int width() const { return width_; }
  int height() const { return height_; }
  bool in_bounds(Position p) const {
    return p.x >= 0 && p.y >= 0 && p.x < width_ && p.y < height_;
  }
  const Cell& at(Position p) const { return cells_[index(p)]; }
  Cell& at(Position p) { return cells_[index(p)]; }
  std::span<const Cell> cells() const { return cells_; }

  friend bool operator==(const Grid&, const Grid&) = default;

 private:
  std::size_t index(Position p) const {
    return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(p.x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<Cell> cells_;
};

using GridPtr = std::shared_ptr<const Grid>;

struct Observation {
  GridPtr grid;
  Position agent_pos;
  Direction agent_dir = Direction::kEast;

  /// Cell directly in front of the agent, or nullopt when facing the grid edge.
  std::optional<Position> front() const;
  friend bool operator==(const Observation& a, const Observation& b);
};

/// Throws DataError when the agent is outside the grid or stands on an object.
void validate(const Observation& obs);

Position step_forward(Position p, Direction d);
Direction turn_left(Direction d);
Direction turn_right(Direction d);

class Instruction {
 public:
  Instruction() = default;
  explicit Instruction(int label_id);
  static Instruction from_object(int type, int color);

  int label_id() const { return label_id_; }
  int object_type() const { return label_id_ / kNumColors + 1; }
  int color() const { return label_id_ % kNumColors + 1; }
  bool matches(const Cell& cell) const {
    return !cell.empty() && cell.type == object_type() && cell.color == color();
  }
  /// "go to the {color} {type}"
  std::string text() const;

  friend bool operator==(const Instruction&, const Instruction&) = default;

 private:
  int label_id_ = 0;
};

struct Trajectory {
  std::int64_t id = 0;
  std::vector<Observation> observations;
  std::vector<Action> actions;

  /// T, the number of transitions.
  int length() const { return static_cast<int>(actions.size()); }
};

using TrajectoryPtr = std::shared_ptr<const Trajectory>;

/// Throws DataError unless |observations| = |actions| + 1 and T >= 1.
void validate(const Trajectory& traj);

/// Observations o_{t0..t1}; throws DataError unless 0 <= t0 < t1 <= T.
std::span<const Observation> slice_segment(const Trajectory& traj, int t0, int t1);

/// Segment covering observations o_{start..end}.
struct Interval {
  int start = 0;
  int end = 0;
  int length() const { return end - start; }
  friend bool operator==(const Interval&, const Interval&) = default;
  friend auto operator<=>(const Interval&, const Interval&) = default;
};

struct Segmentation {
  std::int64_t trajectory_id = 0;
  std::vector<std::uint8_t> boundaries;  // alpha_0 .. alpha_{T-1}

  int length() const { return static_cast<int>(boundaries.size()); }
  bool complete() const { return !boundaries.empty() && boundaries.back() == 1; }
  int num_segments() const;
  friend bool operator==(const Segmentation&, const Segmentation&) = default;
};

std::vector<Interval> boundaries_to_segments(const Segmentation& seg);
Segmentation segments_to_boundaries(std::span<const Interval> intervals, int length,
                                    std::int64_t trajectory_id = 0);

/// Largest i <= t with alpha_i = 1, or nullopt when no boundary occurred yet.
/// A returned boundary i means the current segment starts at observation i + 1.
std::optional<int> last_boundary_before(std::span<const std::uint8_t> alpha, int t);

struct LabelledSegment {
  std::int64_t trajectory_id = 0;
  int t0 = 0;
  int t1 = 0;
  Instruction instruction;
  double confidence = 1.0;

  int length() const { return t1 - t0; }
  Interval interval() const { return {t0, t1}; }
};

/// Throws DataError unless 0 <= t0 < t1 <= T and t1 - t0 >= min_length.
void validate(const LabelledSegment& seg, const Trajectory& parent, int min_length = 1);

enum class SplitTag { kFull, kHalf, kQuarter, kTenth, kValidation, kUnannotated };

std::string_view split_tag_name(SplitTag tag);
SplitTag split_tag_from_name(std::string_view name);
/// Fraction of the full annotated pool kept by a nested split tag.
double split_fraction(SplitTag tag);

/// Annotated segments with their parent trajectories, plus unannotated play
/// trajectories. Trajectories are shared, immutable and looked up by id.
class Dataset {
 public:
  SplitTag split_tag = SplitTag::kFull;
  std::vector<LabelledSegment> annotated;
  std::vector<std::int64_t> unannotated;  // ids of play trajectories

  void add_trajectory(TrajectoryPtr traj);
  bool has_trajectory(std::int64_t id) const { return trajectories_.contains(id); }
  const Trajectory& trajectory(std::int64_t id) const;
  TrajectoryPtr trajectory_ptr(std::int64_t id) const;
  const std::map<std::int64_t, TrajectoryPtr>& trajectories() const { return trajectories_; }

  /// Throws DataError when a segment references a missing trajectory or an
  /// invalid index range.
  void validate(int min_length = 1) const;

 private:
  std::map<std::int64_t, TrajectoryPtr> trajectories_;
};

/// Ground-truth annotation of one play trajectory.
struct PlayRecord {
  TrajectoryPtr trajectory;
  Segmentation gt_boundaries;
  std::vector<Instruction> gt_labels;  // tau_1..tau_K

  std::vector<Interval> gt_segments() const { return boundaries_to_segments(gt_boundaries); }
};

}  // namespace playseg
