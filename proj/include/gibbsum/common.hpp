// Shared utilities: error types, seeded RNG streams, log-domain helpers,
// and the resource ledger used by the quantum-simulation layer.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace gibbsum {

// Raised for malformed inputs: bad model/config files, out-of-range
// parameters, violated operation preconditions. CLI exit code 2.
class ValidationError : public std::runtime_error {
 public:
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Raised when a run fails mid-pipeline: schedule generation aborts, jump
// failure, degenerate estimates, enumeration cap exceeded. CLI exit code 3.
class PipelineError : public std::runtime_error {
 public:
  explicit PipelineError(const std::string& what) : std::runtime_error(what) {}
};

constexpr double kInf = std::numeric_limits<double>::infinity();

// States with more configurations than this cannot be enumerated, sampled
// exactly, or simulated as statevectors.
constexpr std::uint64_t kDefaultEnumerationCap = std::uint64_t{1} << 22;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(const std::string& label) {
  // FNV-1a, then one splitmix64 round to spread the bits.
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return splitmix64(h);
}

// Deterministic child seed; independent streams come from distinct labels
// and indices under one master seed.
inline std::uint64_t derive_seed(std::uint64_t master, const std::string& label,
                                 std::uint64_t index = 0) {
  return splitmix64(master ^ hash_label(label) ^ splitmix64(index * 0x9E3779B97F4A7C15ULL + 1));
}

// A named, reproducible random stream. All randomness in the library flows
// through instances of this class.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}
  RngStream(std::uint64_t master, const std::string& label, std::uint64_t index = 0)
      : engine_(derive_seed(master, label, index)) {}

  std::mt19937_64& engine() { return engine_; }

  double uniform() {
    return std::uniform_real_distribution<double>(0.0, 1.0)(engine_);
  }
  std::uint64_t uniform_index(std::uint64_t count) {
    return std::uniform_int_distribution<std::uint64_t>(0, count - 1)(engine_);
  }
  std::int64_t binomial(std::int64_t trials, double p) {
    if (trials <= 0 || p <= 0.0) return 0;
    if (p >= 1.0) return trials;
    return std::binomial_distribution<std::int64_t>(trials, p)(engine_);
  }
  bool bernoulli(double p) {
    if (p <= 0.0) return false;
    if (p >= 1.0) return true;
    return std::bernoulli_distribution(p)(engine_);
  }

 private:
  std::mt19937_64 engine_;
};

inline double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  if (a < b) std::swap(a, b);
  return a + std::log1p(std::exp(b - a));
}

inline double log_sum_exp(const std::vector<double>& terms) {
  double m = -kInf;
  for (double t : terms) m = std::max(m, t);
  if (m == -kInf) return -kInf;
  double s = 0.0;
  for (double t : terms) {
    if (t != -kInf) s += std::exp(t - m);
  }
  return m + std::log(s);
}

// Counts the simulated quantum resources consumed by qsim operations.
// repreparations records working copies rebuilt after a failed
// post-estimation restoration; each one is also counted as consumed.
struct ResourceLedger {
  std::uint64_t reflections_invoked = 0;
  std::uint64_t qsample_copies_consumed = 0;
  std::uint64_t qsample_copies_restored = 0;
  std::uint64_t qsample_repreparations = 0;

  ResourceLedger& operator+=(const ResourceLedger& o) {
    reflections_invoked += o.reflections_invoked;
    qsample_copies_consumed += o.qsample_copies_consumed;
    qsample_copies_restored += o.qsample_copies_restored;
    qsample_repreparations += o.qsample_repreparations;
    return *this;
  }
};

}  // namespace gibbsum
