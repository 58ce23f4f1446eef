#pragma once

#include "mskp/operators.hpp"
#include "mskp/paths.hpp"
#include "mskp/projections.hpp"
#include "mskp/rng.hpp"

#include <cmath>
#include <optional>
#include <vector>

namespace mskp {

struct SolverConfig {
  int n_sub = 100;                // resolvent substeps per semigroup evaluation
  double h0 = 0.1;                // uniform mesh at level 0
  double osc0 = 0.1;              // oscillation target at level 0
  double refine = 2.0;            // mesh and target shrink by this factor per level
  int max_levels = 14;
  double tol_conv = 1e-4;         // stop when successive levels differ by less
  int samples_per_interval = 4;   // uniform samples inside each input interval
  int geometric_samples = 0;      // extra samples at r + (r' - r) 2^-g
  std::optional<int> fixed_level; // return exactly this level
};

struct JumpRecord {
  double t = 0;
  Vec dm;
  Vec x_left;
  Vec x_right;
  Vec dk;
};

struct SkorokhodSolution {
  Path x;
  Path k;
  Path kc;
  Path kd;
  Path reaction;  // constraint part of k: normal-cone part of k^c plus k^d
  std::vector<JumpRecord> jumps;
  std::vector<double> grid;  // times where x was evaluated
  int level = 0;
  std::size_t cells = 0;
  double variation = 0;
  double sup_x = 0;
};

namespace detail {

inline std::vector<double> interval_samples(double r, double r1, const SolverConfig& cfg) {
  std::vector<double> ts;
  double len = r1 - r;
  if (!(len > 0)) return ts;
  for (int j = 1; j <= cfg.samples_per_interval; ++j) ts.push_back(r + len * j / (cfg.samples_per_interval + 1));
  for (int g = cfg.geometric_samples; g >= 1; --g) ts.push_back(r + len * std::ldexp(1.0, -g));
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<double> out;
  for (double t : ts)
    if (t > r && t < r1) out.push_back(t);
  return out;
}

inline void check_problem(const Operator& A, const Projection& P, const Path& m) {
  if (A.dim() != m.dim()) throw InvalidInput("operator and input dimensions differ");
  if (P.domain().dim() != m.dim()) throw InvalidInput("projection and input dimensions differ");
  P.require_admissible();
  require_in_domain(A, m.at(0), "initial value m_0");
}

}  // namespace detail

// Exact solution structure for a step input: x_r = Pi(x_{r-} + Delta m_r) at
// breakpoints, x_t = S_A(t - r) x_r in between.
inline SkorokhodSolution solve_step_input(const Operator& A, const Projection& P, const Path& m,
                                          const SolverConfig& cfg = {}) {
  if (m.mode() != PathMode::Step) throw InvalidInput("solve_step_input needs a STEP input");
  detail::check_problem(A, P, m);
  const double T = m.horizon();
  const int d = m.dim();
  const auto& mk = m.knots();

  std::vector<Knot> xk, rk;
  SkorokhodSolution sol;
  Vec x_r = mk[0].right;
  Vec react_r = Vec::Zero(d);

  auto push = [&](double t, const Vec& xl, const Vec& xr, const Vec& rl, const Vec& rr) {
    xk.push_back({t, xl, xr, xl != xr});
    rk.push_back({t, rl, rr, rl != rr});
    sol.grid.push_back(t);
  };
  push(0.0, x_r, x_r, react_r, react_r);

  for (std::size_t i = 0; i < mk.size(); ++i) {
    double r = mk[i].t;
    double r1 = i + 1 < mk.size() ? mk[i + 1].t : T;
    for (double t : detail::interval_samples(r, r1, cfg)) {
      auto s = semigroup_split(A, t - r, x_r, cfg.n_sub);
      Vec rt = react_r + s.reaction;
      push(t, s.state, s.state, rt, rt);
    }
    if (i + 1 < mk.size() || r1 > r) {
      auto s = semigroup_split(A, r1 - r, x_r, cfg.n_sub);
      Vec x_left = s.state;
      Vec react_left = react_r + s.reaction;
      if (i + 1 < mk.size()) {
        Vec dm = mk[i + 1].right - mk[i + 1].left;
        Vec z = x_left + dm;
        Vec x_new = P(z);
        Vec dk = z - x_new;
        sol.jumps.push_back({r1, dm, x_left, x_new, dk});
        push(r1, x_left, x_new, react_left, react_left + dk);
        x_r = x_new;
        react_r = react_left + dk;
      } else {
        push(r1, x_left, x_left, react_left, react_left);
      }
    }
  }

  sol.x = Path::sampled(T, std::move(xk));
  sol.reaction = Path::sampled(T, std::move(rk));
  sol.k = m - sol.x;
  auto dec = jump_decompose(sol.k);
  sol.kc = std::move(dec.continuous);
  sol.kd = std::move(dec.jumps);
  sol.cells = mk.size();
  sol.variation = BVPath(sol.k).total();
  sol.sup_x = sup_norm(sol.x);
  return sol;
}

struct SolveHistory {
  std::vector<SkorokhodSolution> levels;
  std::vector<Path> inputs;          // step approximations m^(n)
  std::vector<double> level_diffs;   // |x^(n) - x^(n-1)|_T, n >= 1
  bool converged = false;
};

// Refinement loop for a general input. Partitions are nested: level n adds a
// uniform mesh h0 / refine^n and greedy cuts at oscillation osc0 / refine^n;
// the jump times of m are in every partition.
inline SolveHistory solve_with_history(const Operator& A, const Projection& P, const Path& m,
                                       const SolverConfig& cfg = {}) {
  detail::check_problem(A, P, m);
  SolveHistory hist;
  if (m.mode() == PathMode::Step) {
    hist.inputs.push_back(m);
    hist.levels.push_back(solve_step_input(A, P, m, cfg));
    hist.converged = true;
    return hist;
  }
  const double T = m.horizon();
  Partition pi(T, m.jump_times());
  int last = cfg.fixed_level.value_or(cfg.max_levels);
  for (int lvl = 0; lvl <= last; ++lvl) {
    double scale = std::pow(cfg.refine, -lvl);
    auto cells = static_cast<std::size_t>(std::ceil(T / (cfg.h0 * scale) - 1e-9));
    pi = pi.merged(Partition::uniform(T, std::max<std::size_t>(cells, 1)).points());
    pi = pi.merged(oscillation_partition(m, cfg.osc0 * scale).points());
    Path mn = discretize(m, pi);
    auto sol = solve_step_input(A, P, mn, cfg);
    sol.level = lvl;
    sol.cells = pi.cells();
    if (!hist.levels.empty()) {
      double diff = sup_distance(sol.x, hist.levels.back().x);
      hist.level_diffs.push_back(diff);
      if (!cfg.fixed_level && diff < cfg.tol_conv) hist.converged = true;
    }
    hist.inputs.push_back(std::move(mn));
    hist.levels.push_back(std::move(sol));
    if (hist.converged) break;
  }
  if (cfg.fixed_level) hist.converged = true;
  return hist;
}

inline SkorokhodSolution solve(const Operator& A, const Projection& P, const Path& m, const SolverConfig& cfg = {}) {
  auto hist = solve_with_history(A, P, m, cfg);
  if (!hist.converged) {
    std::string msg = "refinement did not reach tol " + fmt_short(cfg.tol_conv) + " within " +
                      std::to_string(cfg.max_levels) + " levels; level differences:";
    for (double v : hist.level_diffs) msg += " " + fmt_short(v);
    throw ConvergenceError(msg);
  }
  return std::move(hist.levels.back());
}

// ---------------------------------------------------------------------------
// Variational-inequality residual

struct GraphSample {
  Vec alpha;
  Vec beta;  // beta in A(alpha)
};

// alpha = Pi_D(z), beta = B(alpha) + c (z - alpha); z - Pi_D(z) is a normal
// vector at Pi_D(z), so beta lies in A(alpha).
inline std::vector<GraphSample> graph_samples(const Operator& A, std::uint64_t seed, int count, double spread = 2.0) {
  Rng rng(seed);
  const auto& cert = A.certificate();
  std::vector<GraphSample> out;
  for (int i = 0; i < count; ++i) {
    Vec z = cert.a + spread * rng.uniform_vec(A.dim(), -1.0, 1.0);
    Vec alpha = A.domain().project(z);
    double c = rng.uniform(0.0, 2.0);
    Vec beta = A.single_valued(alpha);
    if (A.kind() == OperatorKind::Indicator || A.kind() == OperatorKind::Sum) beta += c * (z - alpha);
    out.push_back({alpha, beta});
  }
  return out;
}

struct ResidualReport {
  double value = kInf;
  Window window;
  std::size_t sample = 0;
};

// min over windows and graph samples of int_s^t <x_r - alpha, dk^c_r - beta dr>.
inline ResidualReport vi_residual(const SkorokhodSolution& sol, const std::vector<GraphSample>& samples,
                                  const std::vector<Window>& windows) {
  ResidualReport rep;
  for (const auto& w : windows) {
    double xk = stieltjes(sol.x, sol.kc, w.s, w.t);
    Vec dkc = sol.kc.at(w.t) - sol.kc.at(w.s);
    Vec xint = Vec::Zero(sol.x.dim());
    for (int i = 0; i < sol.x.dim(); ++i)
      xint[i] = time_integral(sol.x, [i](const Vec& v) { return v[i]; }, w.s, w.t);
    for (std::size_t j = 0; j < samples.size(); ++j) {
      const auto& g = samples[j];
      double val = xk - g.alpha.dot(dkc) - xint.dot(g.beta) + (w.t - w.s) * g.alpha.dot(g.beta);
      if (val < rep.value) rep = {val, w, j};
    }
  }
  return rep;
}

}  // namespace mskp

namespace mskp {

// A-priori bound |x|_T^2 + V(k)_T <= B = C (1 + |m|_T^2) with C built from the
// interior-ball data, the horizon and N0, the number of cells of a partition
// of m with oscillation below r0 / 2.
struct AprioriBound {
  double bound = 0;
  double constant = 0;
  std::size_t n0 = 0;
};

inline AprioriBound apriori_bound(const Certificate& cert, const Path& m) {
  AprioriBound b;
  const double T = m.horizon(), r0 = cert.r0, mu = cert.mu;
  const double M = sup_norm(m), na = cert.a.norm();
  b.n0 = oscillation_partition(m, 0.999 * 0.5 * r0).cells();
  const double n0 = static_cast<double>(b.n0) + 1.0;
  const double R = 4 * mu * mu * T * T + 16 * n0 * n0 * (M + na) * (M + na) + 2 * mu * T * (M + na) + 2 * r0 * mu * T;
  b.bound = 4 * R + 2 * M * M + 2 * R / r0;
  b.constant = b.bound / (1 + M * M);
  return b;
}

// B - (|x|_T^2 + V(k)_T); nonnegative when the bound holds.
inline double apriori_margin(const Certificate& cert, const Path& m, const Path& x, const Path& k) {
  double sx = sup_norm(x);
  return apriori_bound(cert, m).bound - (sx * sx + BVPath(k).total());
}

}  // namespace mskp
