#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nodencg {

/// Argument outside the domain of an operation (time outside [0, T], bad shapes).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// A NaN or Inf showed up where a finite value is required.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The integrator could not make progress (step-size underflow).
class SolverError : public std::runtime_error {
 public:
  SolverError(const std::string& what, double last_time)
      : std::runtime_error(what), last_time_(last_time) {}

  double last_time() const noexcept { return last_time_; }

 private:
  double last_time_;
};

/// Collects every violated constraint of a configuration.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> violations)
      : std::runtime_error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  static std::string join(const std::vector<std::string>& v) {
    std::string out;
    for (const auto& s : v) {
      if (!out.empty()) out += "; ";
      out += s;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

}  // namespace nodencg
