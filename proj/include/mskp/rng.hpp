#pragma once

#include "mskp/core.hpp"

#include <random>

namespace mskp {

// Seeded generator: std::mt19937_64 (its output sequence is fixed by the
// standard). Real-valued draws are derived by hand from the top 53 bits so
// they do not depend on the standard library's distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // uniform on [0, 1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal, Box-Muller
  double normal() {
    double u1 = uniform(), u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  Vec uniform_vec(int d, double a, double b) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = uniform(a, b);
    return v;
  }

  Vec normal_vec(int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = normal();
    return v;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace mskp
