#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace fdmv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Bad input: malformed files, out-of-range arguments, contract violations.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failure: blow-up, non-finite values, loss of convergence.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Iterative method ran out of iterations (e.g. no eigengap for power iteration).
class ConvergenceError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

inline void require(bool ok, const std::string& message) {
  if (!ok) throw ValidationError(message);
}

// SplitMix64 finalizer. Used to derive independent seeds from one master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_label(std::string_view label) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : label) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

// Per-purpose random stream derived from a master seed, so that e.g. merge
// decisions never shift the weight-initialization stream.
inline std::mt19937_64 derive_stream(std::uint64_t master_seed, std::string_view purpose,
                                     std::uint64_t index = 0) {
  return std::mt19937_64(mix_seed(mix_seed(master_seed ^ hash_label(purpose)) + index));
}

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

}  // namespace fdmv
