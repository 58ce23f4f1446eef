#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <stdexcept>
#include <string>

namespace mskp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kMembershipTol = 1e-9;

// Error taxonomy shared by the library and the CLI.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input: bad config, mismatched dimensions, unsorted times.
struct InvalidInput : Error {
  using Error::Error;
};

// A point that must lie in the closed domain does not.
struct DomainError : Error {
  using Error::Error;
};

// An inner iteration (resolvent fixed point, elastic limit) ran out of budget.
struct NonConvergence : Error {
  using Error::Error;
};

// The refinement loop did not reach its tolerance.
struct ConvergenceError : Error {
  using Error::Error;
};

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string fmt_short(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_vec(const Vec& v) {
  std::string out = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (i) out += ", ";
    out += fmt_short(v[i]);
  }
  return out + ")";
}

// 64-bit FNV-1a, used to fingerprint check inputs.
class Fnv1a {
 public:
  void bytes(const void* data, std::size_t n) {
    auto p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h_ ^= p[i];
      h_ *= 1099511628211ull;
    }
  }
  void add(double v) { bytes(&v, sizeof v); }
  void add(const Vec& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) add(v[i]);
  }
  std::uint64_t value() const { return h_; }

 private:
  std::uint64_t h_ = 14695981039346656037ull;
};

}  // namespace mskp
