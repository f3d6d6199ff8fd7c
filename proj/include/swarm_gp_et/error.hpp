#pragma once

#include <stdexcept>
#include <string>

namespace swarm_gp_et {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Precondition or argument check failed.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

// A matrix that must be positive definite (or Hurwitz) is not. Carries the
// offending matrix name and its smallest eigenvalue (real part) so callers
// such as the gain search can act on it.
class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::string matrix, double lambda_min)
      : Error(matrix + " not positive definite (lambda_min = " +
              std::to_string(lambda_min) + ")"),
        matrix_(std::move(matrix)),
        lambda_min_(lambda_min) {}

  const std::string& matrix() const noexcept { return matrix_; }
  double lambda_min() const noexcept { return lambda_min_; }

 private:
  std::string matrix_;
  double lambda_min_;
};

class NotHurwitz : public Error {
 public:
  NotHurwitz(std::string matrix, double max_real_part)
      : Error(matrix + " is not Hurwitz (max real part = " +
              std::to_string(max_real_part) + ")"),
        max_real_part_(max_real_part) {}

  double max_real_part() const noexcept { return max_real_part_; }

 private:
  double max_real_part_;
};

// Raised while simulating; `kind` is a short machine-readable tag such as
// "domain-escape", "non-finite" or "floor-safety".
class SimulationAbort : public Error {
 public:
  SimulationAbort(std::string kind, const std::string& detail)
      : Error(kind + ": " + detail), kind_(std::move(kind)) {}

  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  ConfigError(std::string key, const std::string& detail)
      : Error("config key '" + key + "': " + detail), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

 private:
  std::string key_;
};

}  // namespace swarm_gp_et
