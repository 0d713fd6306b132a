#pragma once

#include <stdexcept>
#include <string>

namespace evoem {

// Base for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// Numerical breakdown (non positive-definite covariances, singular systems).
// Carries the EM iteration and datapoint when known; -1 otherwise.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, long iteration = -1, long datapoint = -1)
      : Error(compose(what, iteration, datapoint)), iteration_(iteration), datapoint_(datapoint) {}

  long iteration() const noexcept { return iteration_; }
  long datapoint() const noexcept { return datapoint_; }

  NumericError with_context(long iteration, long datapoint) const {
    return NumericError(raw_what(), iteration, datapoint);
  }

 private:
  static std::string compose(const std::string& what, long iteration, long datapoint) {
    std::string out = what;
    if (iteration >= 0) out += " (iteration " + std::to_string(iteration);
    if (datapoint >= 0) out += (iteration >= 0 ? ", datapoint " : " (datapoint ") + std::to_string(datapoint);
    if (iteration >= 0 || datapoint >= 0) out += ")";
    return out;
  }
  std::string raw_what() const {
    std::string s = what();
    auto pos = s.find(" (iteration ");
    if (pos == std::string::npos) pos = s.find(" (datapoint ");
    return pos == std::string::npos ? s : s.substr(0, pos);
  }

  long iteration_;
  long datapoint_;
};

}  // namespace evoem
