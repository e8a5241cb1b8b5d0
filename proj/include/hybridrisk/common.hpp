#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hybridrisk {

/// Failure categories raised across the toolkit. The CLI maps each kind onto
/// a process exit code (see exit_code_for).
enum class ErrorKind {
  config,
  missing_column,
  outcome_not_binary,
  empty_file,
  io,
  class_absent,
  constant_outcome,
  empty_train,
  unseen_category,
  unmappable_column,
  unit_mismatch,
  version_mismatch,
  corrupt_file,
  minority_too_small,
  separation_detected,
  dimension_mismatch,
  single_class,
  no_positives,
  degenerate_scores,
  metric_undefined,
  leakage_guard,
  schema_drift,
  missing_reports,
};

std::string_view to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// 2 config error, 3 data error, 4 leakage-guard abort.
int exit_code_for(ErrorKind kind);

/// Non-fatal diagnostics (k clamped, SMO iteration cap, ...). Defaults to
/// stderr; tests may install a collector.
using WarningSink = std::function<void(std::string_view)>;
void set_warning_sink(WarningSink sink);
void warn(std::string_view message);

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return rows_ == 0; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  void append_row(std::span<const double> values);

  const std::vector<double>& values() const noexcept { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Mixes a master seed with a stream index into an independent seed, so that
/// per-tree / per-row / per-resample generators do not depend on scheduling.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

/// Thin wrapper over mt19937_64 with distribution code that does not depend on
/// the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer on [0, n), n > 0, without modulo bias.
  std::size_t below(std::size_t n);
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& values) {
    for (std::size_t i = values.size(); i > 1; --i) {
      std::swap(values[i - 1], values[below(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Runs body(i) for i in [0, n) on up to `threads` workers (0 = hardware
/// concurrency). Callers write results into per-index slots so the output is
/// independent of the worker count.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body,
                  unsigned threads = 0);

/// Process-wide default for parallel_for when callers pass 0.
void set_default_threads(unsigned threads);

/// Logistic function, clamped to [2^-53, 1 - 2^-53] so results stay in (0, 1).
double sigmoid(double z);

/// FNV-1a, used for schema and data fingerprints.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::string hex64(std::uint64_t value);

}  // namespace hybridrisk
