#include "hybridrisk/common.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

namespace hybridrisk {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return "ConfigError";
    case ErrorKind::missing_column: return "MissingColumn";
    case ErrorKind::outcome_not_binary: return "OutcomeNotBinary";
    case ErrorKind::empty_file: return "EmptyFile";
    case ErrorKind::io: return "IoError";
    case ErrorKind::class_absent: return "ClassAbsent";
    case ErrorKind::constant_outcome: return "ConstantOutcome";
    case ErrorKind::empty_train: return "EmptyTrain";
    case ErrorKind::unseen_category: return "UnseenCategory";
    case ErrorKind::unmappable_column: return "UnmappableColumn";
    case ErrorKind::unit_mismatch: return "UnitMismatch";
    case ErrorKind::version_mismatch: return "VersionMismatch";
    case ErrorKind::corrupt_file: return "CorruptFile";
    case ErrorKind::minority_too_small: return "MinorityTooSmall";
    case ErrorKind::separation_detected: return "SeparationDetected";
    case ErrorKind::dimension_mismatch: return "DimensionMismatch";
    case ErrorKind::single_class: return "SingleClass";
    case ErrorKind::no_positives: return "NoPositives";
    case ErrorKind::degenerate_scores: return "DegenerateScores";
    case ErrorKind::metric_undefined: return "MetricUndefinedOnResample";
    case ErrorKind::leakage_guard: return "LeakageGuard";
    case ErrorKind::schema_drift: return "SchemaDrift";
    case ErrorKind::missing_reports: return "MissingReports";
  }
  return "Error";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config:
    case ErrorKind::version_mismatch:
    case ErrorKind::corrupt_file:
    case ErrorKind::missing_reports:
      return 2;
    case ErrorKind::leakage_guard:
      return 4;
    default:
      return 3;
  }
}

namespace {

std::mutex g_warning_mutex;
WarningSink g_warning_sink;
std::atomic<unsigned> g_default_threads{0};

}  // namespace

void set_warning_sink(WarningSink sink) {
  std::lock_guard lock(g_warning_mutex);
  g_warning_sink = std::move(sink);
}

void warn(std::string_view message) {
  std::lock_guard lock(g_warning_mutex);
  if (g_warning_sink) {
    g_warning_sink(message);
  } else {
    std::fprintf(stderr, "warning: %.*s\n", static_cast<int>(message.size()), message.data());
  }
}

void Matrix::append_row(std::span<const double> values) {
  if (rows_ == 0 && cols_ == 0) {
    cols_ = values.size();
  }
  if (values.size() != cols_) {
    throw Error(ErrorKind::dimension_mismatch, "row has " + std::to_string(values.size()) +
                                                   " values, matrix has " + std::to_string(cols_));
  }
  data_.insert(data_.end(), values.begin(), values.end());
  ++rows_;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
  // splitmix64 finalizer over a combination of both inputs
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::size_t Rng::below(std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t draw = engine_();
  while (draw >= limit) {
    draw = engine_();
  }
  return static_cast<std::size_t>(draw % bound);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = uniform();
  while (u1 <= 0.0) {
    u1 = uniform();
  }
  const double u2 = uniform();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

void set_default_threads(unsigned threads) { g_default_threads = threads; }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body, unsigned threads) {
  if (threads == 0) {
    threads = g_default_threads.load();
  }
  if (threads == 0) {
    threads = std::max(1u, std::thread::hardware_concurrency());
  }
  const std::size_t workers = std::min<std::size_t>(threads, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      body(i);
    }
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
          next = n;
        }
      }
    });
  }
  pool.clear();
  if (failure) {
    std::rethrow_exception(failure);
  }
}

double sigmoid(double z) {
  // Kept inside the open interval: 1 - 2^-53 is the largest double below 1,
  // and the lower clamp mirrors it so that sigmoid(-z) == 1 - sigmoid(z).
  constexpr double lo = 0x1.0p-53;
  constexpr double hi = 1.0 - 0x1.0p-53;
  double p;
  if (z >= 0.0) {
    p = 1.0 / (1.0 + std::exp(-z));
  } else {
    const double e = std::exp(z);
    p = e / (1.0 + e);
  }
  return std::clamp(p, lo, hi);
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t seed) {
  std::uint64_t hash = seed;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::string hex64(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx", static_cast<unsigned long long>(value));
  return buffer;
}

}  // namespace hybridrisk
