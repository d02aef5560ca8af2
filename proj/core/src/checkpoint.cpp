#include "playseg/checkpoint.hpp"

#include <string>
#include <vector>

#include <json.hpp>

#include "playseg/dataset_io.hpp"
#include "playseg/error.hpp"

namespace playseg {
namespace {

using nlohmann::json;

json vec_to_json(const Eigen::VectorXd& v) {
  return json(std::vector<double>(v.data(), v.data() + v.size()));
}

json mat_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

Eigen::VectorXd vec_from_json(const json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Eigen::MatrixXd mat_from_json(const json& j, Eigen::Index cols) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const auto r = j[i].get<std::vector<double>>();
    if (static_cast<Eigen::Index>(r.size()) != cols) throw DataError("ragged weight matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(static_cast<Eigen::Index>(i), c) = r[static_cast<std::size_t>(c)];
  }
  return m;
}

}  // namespace

std::string checkpoint_to_string(const Checkpoint& ckpt) {
  json j;
  j["version"] = kCheckpointVersion;
  j["kind"] = ckpt.kind;
  j["feature_schema"] = {{"width", ckpt.schema.width},
                         {"height", ckpt.schema.height},
                         {"max_objects", ckpt.schema.max_objects},
                         {"length_scale", ckpt.schema.length_scale}};
  j["feature_schema_hash"] = ckpt.schema_hash();
  j["normalization"] = {{"mean", vec_to_json(ckpt.normalization.mean)},
                        {"inv_std", vec_to_json(ckpt.normalization.inv_std)}};
  j["network"] = {{"w1", mat_to_json(ckpt.network.w1)},
                  {"b1", vec_to_json(ckpt.network.b1)},
                  {"w2", mat_to_json(ckpt.network.w2)},
                  {"b2", vec_to_json(ckpt.network.b2)}};
  j["scalars"] = ckpt.scalars;
  return j.dump() + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text, const std::string& expected_kind) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw DataError(std::string("checkpoint is not valid JSON: ") + e.what());
  }
  try {
    if (j.at("version").get<int>() != kCheckpointVersion) {
      throw DataError("unsupported checkpoint version");
    }
    Checkpoint c;
    c.kind = j.at("kind").get<std::string>();
    if (!expected_kind.empty() && c.kind != expected_kind) {
      throw DataError("checkpoint holds a " + c.kind + " model, expected " + expected_kind);
    }
    const auto& fs = j.at("feature_schema");
    c.schema.width = fs.at("width").get<int>();
    c.schema.height = fs.at("height").get<int>();
    c.schema.max_objects = fs.at("max_objects").get<int>();
    c.schema.length_scale = fs.at("length_scale").get<double>();
    if (j.at("feature_schema_hash").get<std::uint64_t>() != c.schema.hash()) {
      throw DataError("checkpoint feature schema hash is inconsistent with its schema");
    }
    c.normalization.mean = vec_from_json(j.at("normalization").at("mean"));
    c.normalization.inv_std = vec_from_json(j.at("normalization").at("inv_std"));
    const auto& n = j.at("network");
    c.network.b1 = vec_from_json(n.at("b1"));
    c.network.b2 = vec_from_json(n.at("b2"));
    const auto& w1 = n.at("w1");
    const Eigen::Index in = w1.empty() ? 0 : static_cast<Eigen::Index>(w1[0].size());
    c.network.w1 = mat_from_json(w1, in);
    c.network.w2 = mat_from_json(n.at("w2"), c.network.b1.size());
    if (c.network.w1.rows() != c.network.b1.size() || c.network.w2.rows() != c.network.b2.size()) {
      throw DataError("checkpoint weight shapes are inconsistent");
    }
    if (c.normalization.mean.size() != in || c.normalization.inv_std.size() != in) {
      throw DataError("checkpoint normalization does not match the network input");
    }
    c.scalars = j.at("scalars").get<std::map<std::string, double>>();
    return c;
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed checkpoint: ") + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file) {
  write_text_file(file, checkpoint_to_string(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& file, const std::string& expected_kind) {
  return checkpoint_from_string(read_text_file(file), expected_kind);
}

void require_schema(const Checkpoint& ckpt, const FeatureSchema& data_schema) {
  if (ckpt.schema_hash() != data_schema.hash()) {
    throw DataError("feature schema mismatch: model was trained on '" + ckpt.schema.describe() +
                    "', data uses '" + data_schema.describe() + "'");
  }
}

}  // namespace playseg
