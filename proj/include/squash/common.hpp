#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

namespace squash {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

inline constexpr double kLn2 = 0.69314718055994530942;

// Validation bands: residuals below `warn` are clean, between `warn` and
// `hard` are accepted (file round-trip noise), beyond `hard` are rejected.
namespace tol {
inline constexpr double warn = 1e-9;
inline constexpr double hard = 1e-6;
inline constexpr double support_cutoff = 1e-12;  // relative eigenvalue cutoff
inline constexpr double support_leak = 1e-9;     // state mass outside supp(sigma)
}  // namespace tol

/// Basis size (or similar) exceeded a configured cap.
struct resource_error : std::runtime_error {
  explicit resource_error(const std::string& what) : std::runtime_error(what) {}
};

/// A linear system was too ill-conditioned to solve reliably.
struct conditioning_error : std::runtime_error {
  explicit conditioning_error(const std::string& what) : std::runtime_error(what) {}
};

/// Required external resource (binary, env var) is missing.
struct environment_error : std::runtime_error {
  explicit environment_error(const std::string& what) : std::runtime_error(what) {}
};

/// External tool produced output we could not parse.
struct protocol_error : std::runtime_error {
  explicit protocol_error(const std::string& what) : std::runtime_error(what) {}
};

inline std::uint64_t fnv1a(const void* data, std::size_t n,
                           std::uint64_t h = 1469598103934665603ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline std::uint64_t fnv1a_doubles(const double* v, std::size_t n, std::uint64_t h) {
  return fnv1a(v, n * sizeof(double), h);
}

inline std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[i] = digits[h & 0xf];
    h >>= 4;
  }
  return s;
}

}  // namespace squash
