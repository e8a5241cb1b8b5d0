#pragma once

#include <cstddef>
#include <memory>
#include <string_view>
#include <vector>

#include "hybridrisk/common.hpp"
#include "json.hpp"

namespace hybridrisk {

/// Anything that maps a feature matrix to class-1 probabilities.
class ProbabilisticModel {
 public:
  virtual ~ProbabilisticModel() = default;

  virtual std::vector<double> predict_proba(const Matrix& x) const = 0;
  virtual std::size_t n_features() const = 0;
  virtual std::string_view kind() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

using ModelPtr = std::shared_ptr<const ProbabilisticModel>;

inline void require_features(const Matrix& x, std::size_t expected) {
  if (x.cols() != expected) {
    throw Error(ErrorKind::dimension_mismatch, "expected " + std::to_string(expected) +
                                                   " features, got " + std::to_string(x.cols()));
  }
}

}  // namespace hybridrisk
