#include "playseg/dataset_io.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "playseg/error.hpp"

namespace playseg {
namespace {

using nlohmann::json;
namespace fs = std::filesystem;

json trajectory_to_json(const Trajectory& traj, std::string_view role) {
  json actions = json::array();
  for (auto a : traj.actions) actions.push_back(static_cast<int>(a));
  json grids = json::array();
  json poses = json::array();
  for (const auto& obs : traj.observations) {
    json cells = json::array();
    for (const auto& c : obs.grid->cells()) cells.push_back(c.code());
    grids.push_back(std::move(cells));
    poses.push_back({obs.agent_pos.x, obs.agent_pos.y, static_cast<int>(obs.agent_dir)});
  }
  json j;
  j["id"] = traj.id;
  j["actions"] = std::move(actions);
  j["grids"] = std::move(grids);
  j["poses"] = std::move(poses);
  if (!role.empty()) j["role"] = role;
  return j;
}

TrajectoryPtr trajectory_from_json(const json& j, int width, int height) {
  auto traj = std::make_shared<Trajectory>();
  traj->id = j.at("id").get<std::int64_t>();
  for (int a : j.at("actions")) {
    if (a < 0 || a >= kNumActions) throw DataError("invalid action id");
    traj->actions.push_back(static_cast<Action>(a));
  }
  const auto& grids = j.at("grids");
  const auto& poses = j.at("poses");
  if (grids.size() != poses.size()) throw DataError("grid/pose count mismatch");
  GridPtr previous;
  for (std::size_t t = 0; t < grids.size(); ++t) {
    const auto& codes = grids[t];
    if (width <= 0 || height <= 0) {
      throw DataError("grid dimensions unknown while reading trajectories");
    }
    if (codes.size() != static_cast<std::size_t>(width * height)) {
      throw DataError("flattened grid has wrong size");
    }
    auto grid = std::make_shared<Grid>(width, height);
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        grid->at({x, y}) = Cell::from_code(codes[static_cast<std::size_t>(y * width + x)]);
      }
    }
    // Consecutive frames usually share the same static layout.
    GridPtr shared = (previous && *previous == *grid) ? previous : GridPtr(grid);
    previous = shared;
    const auto& p = poses[t];
    const int dir = p.at(2).get<int>();
    if (dir < 0 || dir > 3) throw DataError("invalid heading");
    Observation obs{shared, {p.at(0).get<int>(), p.at(1).get<int>()}, static_cast<Direction>(dir)};
    validate(obs);
    traj->observations.push_back(std::move(obs));
  }
  validate(*traj);
  return traj;
}

json manifest_to_json(const DatasetManifest& m) {
  json j;
  j["schema_version"] = m.schema_version;
  j["grid_width"] = m.grid_width;
  j["grid_height"] = m.grid_height;
  j["num_labels"] = m.num_labels;
  j["seed"] = m.seed;
  j["split"] = split_tag_name(m.split);
  j["num_tasks"] = m.num_tasks;
  j["done_marker"] = m.done_marker;
  j["min_segment_length"] = m.min_segment_length;
  j["max_segment_length"] = m.max_segment_length;
  return j;
}

DatasetManifest manifest_from_json(const json& j) {
  DatasetManifest m;
  m.schema_version = j.at("schema_version").get<int>();
  if (m.schema_version != kDatasetSchemaVersion) {
    throw DataError("unsupported dataset schema version " + std::to_string(m.schema_version));
  }
  m.grid_width = j.at("grid_width").get<int>();
  m.grid_height = j.at("grid_height").get<int>();
  m.num_labels = j.at("num_labels").get<int>();
  if (m.num_labels != kNumInstructions) throw DataError("unsupported instruction set size");
  m.seed = j.at("seed").get<std::uint64_t>();
  m.split = split_tag_from_name(j.at("split").get<std::string>());
  m.num_tasks = j.at("num_tasks").get<int>();
  m.done_marker = j.at("done_marker").get<bool>();
  m.min_segment_length = j.at("min_segment_length").get<int>();
  m.max_segment_length = j.at("max_segment_length").get<int>();
  return m;
}

json segment_to_json(const LabelledSegment& s, bool with_confidence) {
  json j;
  j["trajectory_id"] = s.trajectory_id;
  j["t0"] = s.t0;
  j["t1"] = s.t1;
  j["label_id"] = s.instruction.label_id();
  if (with_confidence) j["confidence"] = s.confidence;
  return j;
}

LabelledSegment segment_from_json(const json& j) {
  LabelledSegment s;
  s.trajectory_id = j.at("trajectory_id").get<std::int64_t>();
  s.t0 = j.at("t0").get<int>();
  s.t1 = j.at("t1").get<int>();
  s.instruction = Instruction(j.at("label_id").get<int>());
  s.confidence = j.value("confidence", 1.0);
  return s;
}

template <typename Fn>
void for_each_line(const fs::path& file, Fn&& fn) {
  std::ifstream in(file);
  if (!in) throw DataError("cannot open " + file.string());
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      fn(json::parse(line));
    } catch (const json::exception& e) {
      throw DataError(file.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::ofstream open_out(const fs::path& file) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + file.string());
  return out;
}

}  // namespace

std::string read_text_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw DataError("cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const fs::path& file, const std::string& text) {
  auto out = open_out(file);
  out << text;
}

void save_dataset(const Dataset& dataset, const DatasetManifest& manifest, const fs::path& dir) {
  fs::create_directories(dir);
  write_text_file(dir / "manifest.json", manifest_to_json(manifest).dump(2) + "\n");

  auto out = open_out(dir / "trajectories.jsonl");
  std::set<std::int64_t> play(dataset.unannotated.begin(), dataset.unannotated.end());
  for (const auto& [id, traj] : dataset.trajectories()) {
    out << trajectory_to_json(*traj, play.contains(id) ? "play" : "parent").dump() << '\n';
  }
  write_segments(dataset.annotated, dir / "annotations.jsonl", false);
}

DatasetManifest load_manifest(const fs::path& dir) {
  try {
    return manifest_from_json(json::parse(read_text_file(dir / "manifest.json")));
  } catch (const json::exception& e) {
    throw DataError("bad manifest in " + dir.string() + ": " + e.what());
  }
}

Dataset load_dataset(const fs::path& dir, DatasetManifest* manifest_out) {
  const auto manifest = load_manifest(dir);
  Dataset ds;
  ds.split_tag = manifest.split;
  for_each_line(dir / "trajectories.jsonl", [&](const json& j) {
    auto traj = trajectory_from_json(j, manifest.grid_width, manifest.grid_height);
    if (j.value("role", "parent") == "play") ds.unannotated.push_back(traj->id);
    ds.add_trajectory(std::move(traj));
  });
  ds.annotated = read_segments(dir / "annotations.jsonl");
  ds.validate();
  if (manifest_out) *manifest_out = manifest;
  return ds;
}

void save_ground_truth(const std::vector<PlayRecord>& records, const fs::path& dir) {
  auto out = open_out(dir / "ground_truth.jsonl");
  for (const auto& r : records) {
    json j;
    j["trajectory_id"] = r.trajectory->id;
    json b = json::array();
    for (auto v : r.gt_boundaries.boundaries) b.push_back(static_cast<int>(v));
    j["boundaries"] = std::move(b);
    json labels = json::array();
    for (const auto& l : r.gt_labels) labels.push_back(l.label_id());
    j["labels"] = std::move(labels);
    out << j.dump() << '\n';
  }
}

std::vector<PlayRecord> load_ground_truth(const fs::path& dir, const Dataset& dataset) {
  std::vector<PlayRecord> records;
  for_each_line(dir / "ground_truth.jsonl", [&](const json& j) {
    PlayRecord r;
    r.trajectory = dataset.trajectory_ptr(j.at("trajectory_id").get<std::int64_t>());
    r.gt_boundaries.trajectory_id = r.trajectory->id;
    for (int b : j.at("boundaries")) r.gt_boundaries.boundaries.push_back(b ? 1 : 0);
    for (int l : j.at("labels")) r.gt_labels.emplace_back(l);
    if (r.gt_boundaries.length() != r.trajectory->length() ||
        r.gt_boundaries.num_segments() != static_cast<int>(r.gt_labels.size())) {
      throw DataError("ground truth does not match trajectory " + std::to_string(r.trajectory->id));
    }
    records.push_back(std::move(r));
  });
  return records;
}

void write_trajectories(const std::vector<TrajectoryPtr>& trajectories, const fs::path& file) {
  auto out = open_out(file);
  for (const auto& t : trajectories) out << trajectory_to_json(*t, "play").dump() << '\n';
}

std::vector<TrajectoryPtr> read_trajectories(const fs::path& file) {
  // Standalone trajectory files sit next to a manifest that carries the grid size.
  const auto manifest = load_manifest(file.parent_path());
  std::vector<TrajectoryPtr> out;
  for_each_line(file, [&](const json& j) {
    out.push_back(trajectory_from_json(j, manifest.grid_width, manifest.grid_height));
  });
  return out;
}

void write_segments(const std::vector<LabelledSegment>& segments, const fs::path& file,
                    bool with_confidence) {
  auto out = open_out(file);
  for (const auto& s : segments) out << segment_to_json(s, with_confidence).dump() << '\n';
}

std::vector<LabelledSegment> read_segments(const fs::path& file) {
  std::vector<LabelledSegment> out;
  for_each_line(file, [&](const json& j) { out.push_back(segment_from_json(j)); });
  return out;
}

}  // namespace playseg
