#pragma once

#include <stdexcept>
#include <string>

namespace playseg {

/// Process exit codes used by the command-line tool, one per failure class.
enum class ExitCode : int {
  kOk = 0,
  kInternal = 1,
  kConfig = 2,
  kData = 3,
  kTrainingDivergence = 4,
  kInfeasibleSegmentation = 5,
};

class Error : public std::runtime_error {
 public:
  Error(ExitCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ExitCode code() const { return code_; }

 private:
  ExitCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ExitCode::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ExitCode::kData, what) {}
};

class TrainingDivergence : public Error {
 public:
  explicit TrainingDivergence(const std::string& what)
      : Error(ExitCode::kTrainingDivergence, what) {}
};

class InfeasibleSegmentation : public Error {
 public:
  explicit InfeasibleSegmentation(const std::string& what)
      : Error(ExitCode::kInfeasibleSegmentation, what) {}
};

}  // namespace playseg
