#pragma once

// JSON checkpoint container shared by every trained model: the network
// weights, the input normalization and the feature schema the model was fit on.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "playseg/features.hpp"
#include "playseg/mlp.hpp"

namespace playseg {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  std::string kind;  // "scorer", "policy", "frame_classifier", "boundary_regressor"
  FeatureSchema schema;
  Standardizer normalization;
  Mlp network;
  std::map<std::string, double> scalars;

  std::uint64_t schema_hash() const { return schema.hash(); }
};

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& file);
/// Throws DataError when the file is malformed or holds a different kind.
Checkpoint load_checkpoint(const std::filesystem::path& file, const std::string& expected_kind);
std::string checkpoint_to_string(const Checkpoint& ckpt);
Checkpoint checkpoint_from_string(const std::string& text, const std::string& expected_kind);

/// Throws DataError unless the checkpoint was trained on `data_schema`.
void require_schema(const Checkpoint& ckpt, const FeatureSchema& data_schema);

}  // namespace playseg
