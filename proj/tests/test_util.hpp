#pragma once

#include "mskp/paths.hpp"
#include "mskp/rng.hpp"

namespace mskp::testing {

inline Path random_step(Rng& rng, int d, int jumps, double T = 1.0, double scale = 1.0) {
  std::vector<double> ts{0.0};
  for (int i = 0; i < jumps; ++i) ts.push_back(rng.uniform(0.0, T));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<Vec> vs;
  for (std::size_t i = 0; i < ts.size(); ++i) vs.push_back(scale * rng.uniform_vec(d, -1.0, 1.0));
  return Path::step(T, ts, vs);
}

// Piecewise linear with n interior samples and some flagged jumps.
inline Path random_sampled(Rng& rng, int d, int n, int jumps, double T = 1.0) {
  std::vector<Knot> ks;
  Vec v = rng.uniform_vec(d, -1.0, 1.0);
  ks.push_back({0.0, v, v, false});
  for (int i = 1; i <= n; ++i) {
    double t = T * i / (n + 1);
    Vec l = ks.back().right + 0.3 * rng.uniform_vec(d, -1.0, 1.0);
    bool j = jumps > 0 && rng.uniform() < double(jumps) / n;
    Vec r = j ? Vec(l + rng.uniform_vec(d, -1.0, 1.0)) : l;
    ks.push_back({t, l, r, j});
  }
  return Path::sampled(T, std::move(ks));
}

}  // namespace mskp::testing
