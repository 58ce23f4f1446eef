#pragma once

#include "mskp/skorokhod.hpp"

#include <vector>

namespace mskp {

enum class PenaltyScheme { Free, Amortized };

struct PenalizedSolution {
  PenaltyScheme scheme = PenaltyScheme::Free;
  double eps = 0;
  double h = 0;
  Path x;
  Path k;
  Path kc;  // int_0^t A_eps(x_s) ds
  Path kd;  // sum of projection corrections at large jumps
  std::vector<JumpRecord> jumps;
  std::vector<double> grid;
  double energy = 0;  // int_0^T |A_eps(x_s)|^2 ds (implicit Euler sum)
};

namespace detail {

// Implicit Euler on dx + A_eps(x) dt = dm. Jumps of m larger than
// `threshold` are projected, smaller ones pass through unchanged.
inline PenalizedSolution penalized_stepper(const Operator& A, const Projection* P, double eps, const Path& m,
                                           double h, double threshold, PenaltyScheme scheme) {
  if (!(eps > 0)) throw InvalidInput("penalization needs eps > 0");
  if (!(h > 0)) throw InvalidInput("penalization needs h > 0");
  if (A.dim() != m.dim()) throw InvalidInput("operator and input dimensions differ");
  if (P) {
    if (P->domain().dim() != m.dim()) throw InvalidInput("projection and input dimensions differ");
    P->require_admissible();
  }
  const double T = m.horizon();
  const int d = m.dim();
  auto cells = static_cast<std::size_t>(std::ceil(T / h - 1e-9));
  Partition grid = Partition::uniform(T, std::max<std::size_t>(cells, 1)).merged(m.jump_times());
  std::vector<double> g = grid.points();
  if (g.back() < T) g.push_back(T);

  PenalizedSolution sol;
  sol.scheme = scheme;
  sol.eps = eps;
  sol.h = h;
  sol.grid = g;
  Vec x = m.at(0);
  Vec kc = Vec::Zero(d), kd = Vec::Zero(d);
  std::vector<Knot> xk{{0.0, x, x, false}}, ck{{0.0, kc, kc, false}};
  std::vector<double> dt{0.0};
  std::vector<Vec> dv{kd};
  for (std::size_t i = 0; i + 1 < g.size(); ++i) {
    double a = g[i], b = g[i + 1];
    Vec z = x + (m.left(b) - m.at(a));
    Vec x_left = yosida_resolvent(A, eps, b - a, z);
    Vec inc = z - x_left;
    kc += inc;
    sol.energy += inc.squaredNorm() / (b - a);
    Vec dm = m.at(b) - m.left(b);
    Vec x_right = x_left;
    if (dm.squaredNorm() > 0) {
      Vec w = x_left + dm;
      if (dm.norm() > threshold) {
        x_right = (*P)(w);
        Vec dk = w - x_right;
        kd += dk;
        dt.push_back(b);
        dv.push_back(kd);
        sol.jumps.push_back({b, dm, x_left, x_right, dk});
      } else {
        x_right = w;
        sol.jumps.push_back({b, dm, x_left, x_right, Vec::Zero(d)});
      }
    }
    xk.push_back({b, x_left, x_right, x_left != x_right});
    ck.push_back({b, kc, kc, false});
    x = x_right;
  }
  sol.x = Path::sampled(T, std::move(xk));
  sol.kc = Path::sampled(T, std::move(ck));
  sol.kd = Path::step(T, dt, dv);
  sol.k = sol.kc + sol.kd;
  return sol;
}

}  // namespace detail

// Free penalized scheme: jumps of m pass through, the Yosida drift pulls
// the state back.
inline PenalizedSolution solve_yosida_free(const Operator& A, double eps, const Path& m, double h) {
  return detail::penalized_stepper(A, nullptr, eps, m, h, kInf, PenaltyScheme::Free);
}

// Amortized scheme: jumps with |Delta m| > eps are projected with P.
inline PenalizedSolution solve_amortized(const Operator& A, const Projection& P, double eps, const Path& m, double h) {
  return detail::penalized_stepper(A, &P, eps, m, h, eps, PenaltyScheme::Amortized);
}

// ---------------------------------------------------------------------------
// Convergence study

struct StudyRow {
  double eps = 0;
  double h = 0;
  double err_free_xbar = 0;  // |x^eps - xbar| on the observation grid
  double err_jeps_x = 0;     // |J_eps(x^eps) - x|
  double int_aeps = 0;       // eps int_0^T |A_eps(x^eps)|^2 ds
  double err_amortized = 0;  // |x^{eps,P} - x^P|
  double bound_margin = 0;   // a-priori bound margin of the amortized solution
};

// Uniform grid of n + 1 points plus the jump times of m; independent of eps.
inline std::vector<double> observation_grid(const Path& m, int n) {
  Partition p = Partition::uniform(m.horizon(), static_cast<std::size_t>(n)).merged(m.jump_times());
  std::vector<double> g = p.points();
  if (g.back() < m.horizon()) g.push_back(m.horizon());
  return g;
}

inline std::vector<StudyRow> convergence_study(const Operator& A, const Projection& P, const Path& m,
                                               const std::vector<double>& eps_list, double h_ratio,
                                               const SolverConfig& cfg = {}, int obs_points = 1000) {
  if (!(h_ratio > 0)) throw InvalidInput("h ratio must be positive");
  auto ref = solve(A, Projection::orthogonal(A.domain()), m, cfg);
  auto refP = P.kind() == ProjectionKind::Orthogonal ? ref : solve(A, P, m, cfg);
  auto grid = observation_grid(m, obs_points);
  std::vector<Vec> xbar;
  for (double t : grid) {
    Vec v = ref.x.at(t);
    if (m.has_knot(t)) {
      Vec dm = m.jump_at(t);
      if (dm.squaredNorm() > 0) v = ref.x.left(t) + dm;
    }
    xbar.push_back(v);
  }
  std::vector<StudyRow> rows;
  for (double eps : eps_list) {
    StudyRow r;
    r.eps = eps;
    r.h = eps * h_ratio;
    auto free = solve_yosida_free(A, eps, m, r.h);
    auto am = solve_amortized(A, P, eps, m, r.h);
    for (std::size_t i = 0; i < grid.size(); ++i) {
      double t = grid[i];
      Vec xe = free.x.at(t);
      r.err_free_xbar = std::max(r.err_free_xbar, (xe - xbar[i]).norm());
      r.err_jeps_x = std::max(r.err_jeps_x, (A.resolvent(eps, xe) - ref.x.at(t)).norm());
      r.err_amortized = std::max(r.err_amortized, (am.x.at(t) - refP.x.at(t)).norm());
    }
    r.int_aeps = eps * free.energy;
    r.bound_margin = apriori_margin(A.certificate(), m, am.x, am.k);
    rows.push_back(r);
  }
  return rows;
}

struct ConstantInputRow {
  double eps = 0;
  double sup_after = 0;  // sup over [delta, T] of |x^eps_t - Pi_D(alpha)|
  double l2 = 0;         // trapezoid L2 norm over [0, T] of the same error
};

// Free scheme with m constant alpha; the limit is the projection of alpha.
inline std::vector<ConstantInputRow> constant_input_study(const Operator& A, const Vec& alpha, double horizon,
                                                          const std::vector<double>& eps_list, double h_ratio,
                                                          double delta) {
  Path m = Path::constant(horizon, alpha);
  Vec target = A.domain().project(alpha);
  std::vector<ConstantInputRow> rows;
  for (double eps : eps_list) {
    auto sol = solve_yosida_free(A, eps, m, eps * h_ratio);
    ConstantInputRow r{eps, 0, 0};
    double prev_t = 0, prev_e = (sol.x.at(0) - target).squaredNorm();
    for (double t : sol.grid) {
      double e2 = (sol.x.at(t) - target).squaredNorm();
      if (t >= delta) r.sup_after = std::max(r.sup_after, std::sqrt(e2));
      if (t > 0) r.l2 += 0.5 * (t - prev_t) * (e2 + prev_e);
      prev_t = t;
      prev_e = e2;
    }
    r.l2 = std::sqrt(r.l2);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace mskp
