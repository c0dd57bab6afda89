// ctcseq/common.hpp — error taxonomy, logging, deterministic RNG, hashing.
#pragma once

#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace ctcseq {

// Error category maps to the CLI exit code: usage=2, data=3, contract=4.
enum class errc { usage = 2, data = 3, contract = 4 };

class error : public std::runtime_error {
 public:
  error(errc c, const std::string& msg) : std::runtime_error(msg), code_(c) {}
  errc code() const { return code_; }

 private:
  errc code_;
};

// Data errors: bad files, bad records, infeasible inputs.
struct parse_error : error {
  explicit parse_error(const std::string& m) : error(errc::data, m) {}
};
struct validation_error : error {
  explicit validation_error(const std::string& m) : error(errc::data, m) {}
};
struct unsupported_format_error : error {
  explicit unsupported_format_error(const std::string& m) : error(errc::data, m) {}
};
struct corrupt_file_error : error {
  explicit corrupt_file_error(const std::string& m) : error(errc::data, m) {}
};
struct too_short_error : error {
  explicit too_short_error(const std::string& m) : error(errc::data, m) {}
};
struct infeasible_target_error : error {
  explicit infeasible_target_error(const std::string& m) : error(errc::data, m) {}
};
struct undefined_rate_error : error {
  explicit undefined_rate_error(const std::string& m) : error(errc::data, m) {}
};

// Caller-side mistakes.
struct invalid_argument_error : error {
  explicit invalid_argument_error(const std::string& m) : error(errc::usage, m) {}
};

// Broken internal invariants.
struct contract_violation : error {
  explicit contract_violation(const std::string& m) : error(errc::contract, m) {}
};
struct shape_error : error {
  explicit shape_error(const std::string& m) : error(errc::contract, m) {}
};

// ---------------------------------------------------------------------------
// Logging. Level comes from the CTC_SEQ_LOG env var: error|warn|info|debug.

enum class log_level : int { error = 0, warn = 1, info = 2, debug = 3 };

inline log_level& global_log_level() {
  static log_level lvl = [] {
    const char* env = std::getenv("CTC_SEQ_LOG");
    if (!env) return log_level::warn;
    if (std::strcmp(env, "error") == 0) return log_level::error;
    if (std::strcmp(env, "warn") == 0) return log_level::warn;
    if (std::strcmp(env, "info") == 0) return log_level::info;
    if (std::strcmp(env, "debug") == 0) return log_level::debug;
    return log_level::warn;
  }();
  return lvl;
}

inline void logf(log_level lvl, const char* fmt, ...) {
  if (static_cast<int>(lvl) > static_cast<int>(global_log_level())) return;
  static const char* names[] = {"error", "warn", "info", "debug"};
  std::fprintf(stderr, "[ctcseq %s] ", names[static_cast<int>(lvl)]);
  va_list args;
  va_start(args, fmt);
  std::vfprintf(stderr, fmt, args);
  va_end(args);
  std::fputc('\n', stderr);
}

// ---------------------------------------------------------------------------
// Deterministic RNG. mt19937_64 is bit-specified by the standard; the
// transforms below avoid std::uniform_*_distribution, whose output is
// implementation-defined.

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return (gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n). Modulo bias is irrelevant at 64 bits for the
  // range sizes used here, and the result is fully deterministic.
  std::uint64_t below(std::uint64_t n) { return n ? gen_() % n : 0; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  // For serializing trainer state.
  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

// FNV-1a, used for vocab fingerprints in model files.
inline std::uint64_t fnv1a64(const void* data, std::size_t n,
                             std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s,
                             std::uint64_t h = 1469598103934665603ull) {
  return fnv1a64(s.data(), s.size(), h);
}

}  // namespace ctcseq
