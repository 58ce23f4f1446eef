#pragma once

#include "mskp/penalized.hpp"
#include "mskp/skorokhod.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mskp {

inline constexpr double kExactTol = 1e-6;
inline constexpr double kDiscretizationTol = 1e-3;

struct CheckReport {
  std::string id;
  std::string digest;
  double margin = 0;  // worst signed slack; pass when margin >= -tol
  double tol = kExactTol;
  std::string location;
  bool pass = true;
  bool applicable = true;
};

// Everything the checks look at. `m` must be the input that `sol` solves
// exactly (for refined solves, the finest step approximation). The optional
// hat solution solves the same problem driven by `m_hat`; the optional
// amortized pair comes from the penalized scheme with the same eps.
struct Bundle {
  Bundle(Operator a, Projection p, Path input, SkorokhodSolution s)
      : A(std::move(a)), P(std::move(p)), m(std::move(input)), sol(std::move(s)) {}

  Operator A;
  Projection P;
  Path m;
  SkorokhodSolution sol;
  std::optional<Path> m_hat;
  std::optional<SkorokhodSolution> sol_hat;
  std::optional<PenalizedSolution> amortized;
  std::optional<PenalizedSolution> amortized_hat;
  std::uint64_t seed = 1;
  int window_depth = 6;
  int point_samples = 200;
  int graph_sample_count = 32;
};

namespace detail {

inline void hash_path(Fnv1a& h, const Path& p) {
  h.add(p.horizon());
  for (const auto& k : p.knots()) {
    h.add(k.t);
    h.add(k.left);
    h.add(k.right);
  }
}

inline std::string bundle_digest(const Bundle& b) {
  Fnv1a h;
  hash_path(h, b.m);
  hash_path(h, b.sol.x);
  hash_path(h, b.sol.k);
  if (b.m_hat) hash_path(h, *b.m_hat);
  if (b.amortized) hash_path(h, b.amortized->x);
  h.add(static_cast<double>(b.seed));
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h.value()));
  return buf;
}

// Running minimum with the location of the worst case.
struct Worst {
  double margin = kInf;
  std::string location;
  void update(double v, const std::function<std::string()>& where) {
    if (v < margin) {
      margin = v;
      location = where();
    }
  }
};

inline std::string at_sample(std::size_t i) { return "sample " + std::to_string(i); }
inline std::string at_time(double t) { return "t=" + fmt_short(t); }
inline std::string at_window(const Window& w) { return "[" + fmt_short(w.s) + "," + fmt_short(w.t) + "]"; }

struct PointDraws {
  std::vector<Vec> x, y, a;
  std::vector<double> eps, eps2, delta;
};

// Random points around the interior-ball centre, anchors projected onto the
// closed domain.
inline PointDraws draw_points(const Bundle& b, std::uint64_t salt) {
  Rng rng(b.seed * 0x9E3779B97F4A7C15ull + salt);
  const auto& c = b.A.certificate();
  const int d = b.A.dim();
  double spread = 2.0 + c.r0 + 0.5 * c.a.norm();
  PointDraws p;
  for (int i = 0; i < b.point_samples; ++i) {
    p.x.push_back(c.a + spread * rng.uniform_vec(d, -1.0, 1.0));
    p.y.push_back(c.a + spread * rng.uniform_vec(d, -1.0, 1.0));
    p.a.push_back(b.A.domain().project(c.a + spread * rng.uniform_vec(d, -1.0, 1.0)));
    double e = std::exp(rng.uniform(std::log(0.01), 0.0));
    p.eps.push_back(e);
    p.eps2.push_back(e * rng.uniform(1.0, 4.0));
    p.delta.push_back(rng.uniform());
  }
  return p;
}

inline std::vector<double> thinned(std::vector<double> ts, std::size_t cap) {
  if (ts.size() <= cap) return ts;
  std::vector<double> out;
  for (std::size_t i = 0; i < cap; ++i) out.push_back(ts[i * (ts.size() - 1) / (cap - 1)]);
  return out;
}

// |x_t - x^_t|^2 <= |D_t|^2 - 2 int_0^t <D_t - D_s, dK_s> with D = m - m^, K = k - k^.
inline Worst tanaka_distance(const Path& m, const Path& mh, const Path& x, const Path& xh, const Path& k,
                             const Path& kh) {
  Path D = m - mh, X = x - xh, K = k - kh;
  Worst w;
  auto ts = thinned(union_times(X, K), 256);
  double running = 0, prev = 0;
  for (double t : ts) {
    if (t <= 0) continue;
    running += stieltjes(D, K, prev, t);
    prev = t;
    Vec Dt = D.at(t);
    double integral = Dt.dot(K.at(t) - K.at(0)) - running;
    double margin = Dt.squaredNorm() - 2.0 * integral - X.at(t).squaredNorm();
    w.update(margin / std::max(1.0, Dt.squaredNorm()), [t] { return at_time(t); });
  }
  return w;
}

// Additive window functional evaluated once per finest dyadic cell; coarser
// dyadic windows are differences of prefix sums.
class DyadicSums {
 public:
  DyadicSums(double horizon, int depth, const std::function<double(double, double)>& cell)
      : horizon_(horizon), cells_(1L << depth), prefix_{0.0} {
    auto cuts = dyadic_windows(horizon, depth);
    for (auto it = cuts.end() - cells_; it != cuts.end(); ++it) prefix_.push_back(prefix_.back() + cell(it->s, it->t));
  }
  double operator()(const Window& w) const { return prefix_[index(w.t)] - prefix_[index(w.s)]; }

 private:
  std::size_t index(double t) const {
    return static_cast<std::size_t>(std::lround(t / horizon_ * static_cast<double>(cells_)));
  }
  double horizon_;
  long cells_;
  std::vector<double> prefix_;
};

inline double jump_square_sum(const Path& k, double s, double t) {
  double acc = 0;
  for (const auto& kn : k.knots())
    if (kn.t > s && kn.t <= t && kn.jump) acc += (kn.right - kn.left).squaredNorm();
  return acc;
}

}  // namespace detail

struct CheckSpec {
  double tol;
  std::function<CheckReport(const Bundle&)> run;
};

namespace detail {

inline CheckReport make_report(const Worst& w, double tol) {
  CheckReport r;
  r.margin = w.margin == kInf ? 0.0 : w.margin;
  r.location = w.location;
  r.tol = tol;
  r.pass = r.margin >= -tol;
  return r;
}

inline CheckReport not_applicable(const std::string& why, double tol) {
  CheckReport r;
  r.applicable = false;
  r.location = "not applicable: " + why;
  r.tol = tol;
  return r;
}

inline const std::map<std::string, CheckSpec>& registry() {
  static const std::map<std::string, CheckSpec> reg = [] {
    std::map<std::string, CheckSpec> m;

    // Generalized projection inequalities.
    m["projection_pair_inequality"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 1);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        Vec px = b.P(p.x[i]), py = b.P(p.y[i]);
        Vec d = (px - p.x[i]) - (py - p.y[i]);
        w.update(0.5 * d.squaredNorm() - (px - py).dot(d), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["projection_anchor_inequality"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 2);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        Vec px = b.P(p.x[i]);
        w.update(0.5 * (px - p.x[i]).squaredNorm() - (px - p.a[i]).dot(px - p.x[i]), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["projection_interior_ball"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 3);
      const auto& c = b.A.certificate();
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        Vec px = b.P(p.x[i]), g = px - p.x[i];
        w.update((c.a - px).dot(g) + 0.5 * g.squaredNorm() - c.r0 * g.norm(), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["elastic_descent"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 4);
      const auto& c = b.A.certificate();
      const auto& dom = b.A.domain();
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        const Vec& z = p.x[i];
        double delta = p.delta[i], gap = dom.distance(z);
        Vec pd = Projection::elastic(dom, delta)(z);
        double lhs = (pd - c.a).squaredNorm() + (1 - delta * delta) * gap * gap + 2 * c.r0 * (1 + delta) * gap;
        w.update((z - c.a).squaredNorm() - lhs, [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["projection_firmly_nonexpansive"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 5);
      const auto& dom = b.A.domain();
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        Vec px = dom.project(p.x[i]), py = dom.project(p.y[i]);
        w.update((px - py).dot(p.x[i] - p.y[i]) - (px - py).squaredNorm(), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};

    // Resolvent and Yosida approximation.
    m["resolvent_nonexpansive"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 6);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        double e = p.eps[i];
        w.update((p.x[i] - p.y[i]).norm() - (b.A.resolvent(e, p.x[i]) - b.A.resolvent(e, p.y[i])).norm(),
                 [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["yosida_lipschitz"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 7);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        double e = p.eps[i];
        double lhs = (b.A.yosida(e, p.x[i]) - b.A.yosida(e, p.y[i])).norm();
        w.update(e * ((p.x[i] - p.y[i]).norm() / e - lhs), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["yosida_monotone_in_eps"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 8);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        double small = b.A.yosida(p.eps[i], p.x[i]).norm(), large = b.A.yosida(p.eps2[i], p.x[i]).norm();
        w.update(p.eps[i] * (small - large), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["yosida_cocoercive"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 9);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        double e = p.eps[i];
        Vec d = b.A.yosida(e, p.x[i]) - b.A.yosida(e, p.y[i]);
        w.update((p.x[i] - p.y[i]).dot(d) - e * d.squaredNorm(), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};
    m["interior_ball_inequality"] = {kExactTol, [](const Bundle& b) {
      auto p = draw_points(b, 10);
      const auto& c = b.A.certificate();
      auto a0 = b.A.minimal_section(c.a);
      if (!a0) return not_applicable("no closed-form minimal section at the ball centre", kExactTol);
      Worst w;
      for (std::size_t i = 0; i < p.x.size(); ++i) {
        const Vec& z = p.x[i];
        double e = std::min(p.eps[i], 1.0);
        Vec az = b.A.yosida(e, z);
        double rhs = az.dot(z - c.a) + c.mu * (z - c.a).norm() + (a0->norm() + c.r0) * c.mu;
        w.update(rhs - c.r0 * az.norm(), [i] { return at_sample(i); });
      }
      return make_report(w, kExactTol);
    }};

    // Solution-level checks.
    m["consistency"] = {kExactTol, [](const Bundle& b) {
      Worst w;
      for (double t : b.sol.grid) w.update(-(b.sol.x.at(t) + b.sol.k.at(t) - b.m.at(t)).norm(), [t] { return at_time(t); });
      if (b.amortized)
        for (double t : b.amortized->grid)
          w.update(-(b.amortized->x.at(t) + b.amortized->k.at(t) - b.m.at(t)).norm(),
                   [t] { return "amortized " + at_time(t); });
      return make_report(w, kExactTol);
    }};
    m["domain_membership"] = {kExactTol, [](const Bundle& b) {
      Worst w;
      for (const auto& kn : b.sol.x.knots()) {
        double v = std::max(b.A.domain().violation(kn.left), b.A.domain().violation(kn.right));
        double t = kn.t;
        w.update(-v, [t] { return at_time(t); });
      }
      return make_report(w, kExactTol);
    }};
    m["jump_bounds"] = {kExactTol, [](const Bundle& b) {
      Worst w;
      for (const auto& j : b.sol.jumps) {
        double t = j.t, dm = j.dm.norm();
        w.update(dm - (j.x_right - j.x_left).norm(), [t] { return "dx " + at_time(t); });
        w.update(2 * dm - j.dk.norm(), [t] { return "dk " + at_time(t); });
      }
      return make_report(w, kExactTol);
    }};
    m["variation_bound"] = {kDiscretizationTol, [](const Bundle& b) {
      const auto& c = b.A.certificate();
      const Path& x = b.sol.x;
      const Path& k = b.sol.k;
      Path xa = shifted(x, -c.a);
      double T = x.horizon();
      int depth = b.window_depth;
      detail::DyadicSums var(T, depth, [&](double s, double t) { return total_variation(k, s, t); });
      detail::DyadicSums rhs_sum(T, depth, [&](double s, double t) {
        return stieltjes(xa, k, s, t) + 0.5 * detail::jump_square_sum(k, s, t) +
               c.mu * time_integral(x, [&c](const Vec& v) { return (v - c.a).norm(); }, s, t);
      });
      Worst w;
      for (const auto& win : dyadic_windows(T, depth)) {
        double lhs = c.r0 * var(win);
        double rhs = rhs_sum(win) + (win.t - win.s) * c.r0 * c.mu;
        w.update(rhs - lhs, [win] { return at_window(win); });
      }
      return make_report(w, kDiscretizationTol);
    }};
    m["apriori_bound"] = {kDiscretizationTol, [](const Bundle& b) {
      Worst w;
      w.update(apriori_margin(b.A.certificate(), b.m, b.sol.x, b.sol.k), [] { return std::string("[0,T]"); });
      return make_report(w, kDiscretizationTol);
    }};
    m["vi_residual"] = {kDiscretizationTol, [](const Bundle& b) {
      auto samples = graph_samples(b.A, b.seed, b.graph_sample_count);
      auto rep = vi_residual(b.sol, samples, dyadic_windows(b.sol.x.horizon(), b.window_depth));
      Worst w;
      w.update(rep.value, [&rep] { return at_window(rep.window) + " " + at_sample(rep.sample); });
      return make_report(w, kDiscretizationTol);
    }};
    m["tanaka_monotonicity"] = {kDiscretizationTol, [](const Bundle& b) {
      if (!b.sol_hat) return not_applicable("no paired solution", kDiscretizationTol);
      Path X = b.sol.x - b.sol_hat->x, K = b.sol.k - b.sol_hat->k;
      detail::DyadicSums sums(X.horizon(), b.window_depth, [&](double s, double t) {
        return stieltjes(X, K, s, t) + 0.5 * detail::jump_square_sum(K, s, t);
      });
      Worst w;
      for (const auto& win : dyadic_windows(X.horizon(), b.window_depth)) {
        double v = sums(win);
        w.update(v, [win] { return at_window(win); });
      }
      return make_report(w, kDiscretizationTol);
    }};
    m["tanaka_distance"] = {kDiscretizationTol, [](const Bundle& b) {
      if (!b.sol_hat) return not_applicable("no paired solution", kDiscretizationTol);
      auto w = tanaka_distance(b.m, *b.m_hat, b.sol.x, b.sol_hat->x, b.sol.k, b.sol_hat->k);
      return make_report(w, kDiscretizationTol);
    }};
    m["amortized_tanaka_distance"] = {kDiscretizationTol, [](const Bundle& b) {
      if (!b.amortized || !b.amortized_hat) return not_applicable("no paired amortized solution", kDiscretizationTol);
      auto w = tanaka_distance(b.m, *b.m_hat, b.amortized->x, b.amortized_hat->x, b.amortized->k,
                               b.amortized_hat->k);
      return make_report(w, kDiscretizationTol);
    }};
    m["amortized_apriori_bound"] = {kDiscretizationTol, [](const Bundle& b) {
      if (!b.amortized) return not_applicable("no amortized solution", kDiscretizationTol);
      Worst w;
      w.update(apriori_margin(b.A.certificate(), b.m, b.amortized->x, b.amortized->k),
               [] { return std::string("[0,T]"); });
      return make_report(w, kDiscretizationTol);
    }};
    return m;
  }();
  return reg;
}

}  // namespace detail

inline std::vector<std::string> check_ids() {
  std::vector<std::string> ids;
  for (const auto& [id, spec] : detail::registry()) ids.push_back(id);
  return ids;
}

// One report per selected id, sorted by id. Unknown ids are rejected.
inline std::vector<CheckReport> run_invariant_suite(const Bundle& b, const std::vector<std::string>& selection) {
  const auto& reg = detail::registry();
  std::vector<std::string> ids = selection;
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  for (const auto& id : ids)
    if (!reg.count(id)) throw InvalidInput("unknown check id '" + id + "'");
  if (b.A.dim() != b.m.dim() || b.sol.x.dim() != b.m.dim()) throw InvalidInput("bundle dimensions differ");
  std::string digest = detail::bundle_digest(b);
  std::vector<CheckReport> out;
  for (const auto& id : ids) {
    auto r = reg.at(id).run(b);
    r.id = id;
    r.digest = digest;
    out.push_back(std::move(r));
  }
  return out;
}

inline std::vector<CheckReport> run_invariant_suite(const Bundle& b) { return run_invariant_suite(b, check_ids()); }

inline bool all_pass(const std::vector<CheckReport>& reports) {
  return std::all_of(reports.begin(), reports.end(), [](const CheckReport& r) { return r.pass; });
}

// ---------------------------------------------------------------------------
// Convergence of Stieltjes integrals along a sequence of solutions

struct HellyBrayReport {
  CheckReport report;
  std::vector<double> hb1;  // per element: max over windows of the integral difference
  double hb2 = 0;           // min(0, tail minimum of approximant variation integrals - limit value)
  std::vector<double> x_distance;
  std::vector<double> k_distance;
  std::vector<double> variation;
};

// Windows integrals int <x^n, dk^n> against the limit, and the lower
// semicontinuity of int |x| d|k|. The hypotheses (uniform convergence and
// bounded variation) are measured; when they fail the report is flagged
// not applicable instead of failed.
inline HellyBrayReport helly_bray_check(const std::vector<std::pair<Path, Path>>& seq, const Path& x, const Path& k,
                                        const std::vector<Window>& windows, double tol = kDiscretizationTol) {
  if (seq.empty()) throw InvalidInput("Helly-Bray check needs a non-empty sequence");
  HellyBrayReport h;
  h.report.id = "helly_bray";
  h.report.tol = tol;
  std::vector<double> limit_xk;
  for (const auto& w : windows) limit_xk.push_back(stieltjes(x, k, w.s, w.t));
  double limit_var = variation_integral(x, k, 0.0, x.horizon());
  double limit_v = BVPath(k).total();
  double tail_min = kInf;
  std::string worst;
  for (std::size_t n = 0; n < seq.size(); ++n) {
    const auto& [xn, kn] = seq[n];
    h.x_distance.push_back(sup_distance(xn, x));
    h.k_distance.push_back(sup_distance(kn, k));
    h.variation.push_back(BVPath(kn).total());
    double diff = 0;
    for (std::size_t i = 0; i < windows.size(); ++i) {
      double v = std::abs(stieltjes(xn, kn, windows[i].s, windows[i].t) - limit_xk[i]);
      if (v > diff) {
        diff = v;
        if (n + 1 == seq.size()) worst = detail::at_window(windows[i]);
      }
    }
    h.hb1.push_back(diff);
    if (2 * n + 2 > seq.size()) tail_min = std::min(tail_min, variation_integral(xn, kn, 0.0, x.horizon()));
  }
  h.hb2 = std::min(0.0, tail_min - limit_var);

  double bound = 10.0 * std::max(1.0, limit_v);
  bool bounded = std::all_of(h.variation.begin(), h.variation.end(), [bound](double v) { return v <= bound; });
  bool converging = h.x_distance.back() <= h.x_distance.front() + 1e-12 && h.k_distance.back() <= h.k_distance.front() + 1e-12;
  if (!bounded || !converging) {
    h.report.applicable = false;
    h.report.pass = true;
    h.report.location = std::string("not applicable: ") + (!bounded ? "variation not bounded along the sequence"
                                                                     : "sequence does not approach the limit");
    return h;
  }
  h.report.margin = std::min(-h.hb1.back(), h.hb2 >= -1e-6 ? 0.0 : h.hb2);
  h.report.location = h.hb2 < -1e-6 ? "lower semicontinuity" : worst;
  h.report.pass = h.report.margin >= -tol;
  return h;
}

// ---------------------------------------------------------------------------
// Report emission

inline std::string reports_csv(const std::vector<CheckReport>& reports) {
  std::string out = "check_id,margin,location,pass\n";
  char buf[64];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%.10g", r.margin);
    std::string loc = r.location;
    std::replace(loc.begin(), loc.end(), ',', ';');
    out += r.id + "," + buf + "," + loc + "," + (r.pass ? (r.applicable ? "PASS" : "N/A") : "FAIL") + "\n";
  }
  return out;
}

inline std::string reports_table(const std::vector<CheckReport>& reports) {
  std::size_t w = 8;
  for (const auto& r : reports) w = std::max(w, r.id.size());
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-*s  %-6s  %13s  %9s  %s\n", static_cast<int>(w), "check", "result", "margin", "tol",
                "location");
  out += buf;
  for (const auto& r : reports) {
    const char* res = !r.pass ? "FAIL" : (r.applicable ? "PASS" : "N/A");
    std::snprintf(buf, sizeof buf, "%-*s  %-6s  %13.6e  %9.1e  %s\n", static_cast<int>(w), r.id.c_str(), res, r.margin,
                  r.tol, r.location.c_str());
    out += buf;
  }
  if (!reports.empty()) out += "digest " + reports.front().digest + "\n";
  return out;
}

}  // namespace mskp
