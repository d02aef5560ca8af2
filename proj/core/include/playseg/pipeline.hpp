#pragma once

// End-to-end experiment: generate -> split -> train-scorer -> extract ->
// augment -> train-policy -> eval-policy -> report. Every stage writes into its
// own directory under the run directory together with a stage.json holding a
// key derived from the config sections and upstream keys it depends on; a stage
// whose key and outputs are present is skipped.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "playseg/config.hpp"

namespace playseg {

/// Runs fn(0..n-1) on up to `workers` threads. Results must be written to
/// per-index slots; the first exception is rethrown after all workers stop.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

inline constexpr const char* kExtractionMethods[] = {"ps", "random", "framecrop", "boundarycrop",
                                                     "gt-relabel"};

struct StageOutcome {
  std::string name;
  std::string key;
  bool ran = false;
};

using LogFunction = std::function<void(const std::string&)>;

class Pipeline {
 public:
  Pipeline(ExperimentConfig cfg, std::filesystem::path run_dir, LogFunction log = {});

  const ExperimentConfig& config() const { return cfg_; }
  const std::filesystem::path& run_dir() const { return run_dir_; }

  StageOutcome generate();
  StageOutcome split();
  StageOutcome train_scorer();
  StageOutcome extract(const std::string& method);
  StageOutcome augment(const std::string& condition);
  StageOutcome train_policy(const std::string& condition, std::uint64_t seed);
  StageOutcome eval_policy(const std::string& condition, std::uint64_t seed);
  StageOutcome report();

  /// Every extraction method needed by the report and the configured conditions.
  std::vector<std::string> extraction_methods() const;
  std::vector<StageOutcome> extract_all();
  std::vector<StageOutcome> augment_all();
  std::vector<StageOutcome> train_policy_all();
  std::vector<StageOutcome> eval_policy_all();
  std::vector<StageOutcome> run_all();

  std::string stage_key(const std::string& stage) const;

 private:
  bool up_to_date(const std::filesystem::path& dir, const std::string& key) const;
  void mark_done(const std::filesystem::path& dir, const std::string& stage,
                 const std::string& key) const;
  void write_run_manifest() const;
  void log(const std::string& msg) const;

  ExperimentConfig cfg_;
  std::filesystem::path run_dir_;
  LogFunction log_;
};

/// Dataset directory a condition trains on.
std::filesystem::path condition_dataset_dir(const std::filesystem::path& run_dir,
                                            const std::string& condition);
std::string policy_file_name(std::uint64_t seed);

}  // namespace playseg
