#pragma once

#include "mskp/convex_sets.hpp"

#include <string>
#include <variant>

namespace mskp {

enum class ProjectionKind { Orthogonal, Elastic, Iterated, Limit, Custom };

// 1-Lipschitz function used by the coordinatewise projection:
// linear: g(u) = c u with |c| <= 1; cap: g(u) = min(u, cap).
struct LinearG {
  double c = 0;
};
struct CapG {
  double cap = 0;
};
using GFunction = std::variant<LinearG, CapG>;

inline double eval_g(const GFunction& g, double u) {
  if (auto l = std::get_if<LinearG>(&g)) return l->c * u;
  return std::min(u, std::get<CapG>(g).cap);
}

inline std::string describe_g(const GFunction& g) {
  if (auto l = std::get_if<LinearG>(&g)) return "linear:" + fmt_short(l->c);
  return "cap:" + fmt_short(std::get<CapG>(g).cap);
}

struct LimitResult {
  Vec point;
  long iterations = 0;
  double displacement = 0;  // sum_i |P(z_i) - z_i|
  double bound = 0;         // |z_0 - a|^2 / (2 r0 (1 + delta))
};

// lim_n (Pi^delta)^n z, stopping when the iterate enters the closed set
// (or moves less than `tol` while within 1e-9 of it).
inline LimitResult limit_elastic(const ConvexSet& c, double delta, const Vec& z, long budget = 1000000,
                                 double tol = 1e-12) {
  if (!(delta >= 0 && delta <= 1)) throw InvalidInput("elastic coefficient must lie in [0, 1]");
  auto ball = c.interior_ball(1.0);
  LimitResult r;
  r.bound = (z - ball.a).squaredNorm() / (2.0 * ball.r0 * (1.0 + delta));
  Vec zi = z;
  for (long it = 0; it <= budget; ++it) {
    // entry test tolerates rounding of the set projection itself
    if (c.contains(zi, 4e-16 * std::max(1.0, zi.norm()))) {
      r.point = zi;
      r.iterations = it;
      return r;
    }
    Vec p = c.project(zi);
    double gap = (zi - p).norm();
    r.displacement += gap;
    Vec next = p - delta * (zi - p);
    double step = (next - zi).norm();
    zi = std::move(next);
    if (step < tol && c.distance(zi) < kMembershipTol) {
      r.point = c.project(zi);
      r.iterations = it + 1;
      return r;
    }
  }
  throw NonConvergence("elastic projection limit did not converge in " + std::to_string(budget) +
                       " iterations (displacement " + fmt_short(r.displacement) + ", bound " + fmt_short(r.bound) + ")");
}

// A generalized projection onto the closed domain.
class Projection {
 public:
  static Projection orthogonal(const ConvexSet& c) { return Projection(ProjectionKind::Orthogonal, c); }

  static Projection elastic(const ConvexSet& c, double delta) {
    check_delta(delta);
    Projection p(ProjectionKind::Elastic, c);
    p.delta_ = delta;
    return p;
  }

  static Projection iterated(const ConvexSet& c, double delta, int n) {
    check_delta(delta);
    if (n < 1) throw InvalidInput("iterated projection needs n >= 1");
    Projection p(ProjectionKind::Iterated, c);
    p.delta_ = delta;
    p.n_ = n;
    return p;
  }

  static Projection limit(const ConvexSet& c, double delta, double tol = 1e-12) {
    check_delta(delta);
    if (!(tol > 0)) throw InvalidInput("limit projection tolerance must be positive");
    Projection p(ProjectionKind::Limit, c);
    p.delta_ = delta;
    p.tol_ = tol;
    return p;
  }

  static Projection custom(const ConvexSet& c, const GFunction& g) {
    if (!c.is_box()) throw InvalidInput("coordinatewise projection needs a box domain");
    for (Eigen::Index i = 0; i < c.dim(); ++i)
      if (std::isfinite(c.upper()[i])) throw InvalidInput("coordinatewise projection needs boxes bounded only from below");
    if (auto l = std::get_if<LinearG>(&g); l && std::abs(l->c) > 1.0)
      throw InvalidInput("coordinatewise projection needs |c| <= 1");
    Projection p(ProjectionKind::Custom, c);
    p.g_ = g;
    return p;
  }

  ProjectionKind kind() const { return kind_; }
  const ConvexSet& domain() const { return set_; }
  double delta() const { return delta_; }
  int n() const { return n_; }
  const GFunction& g() const { return g_; }

  Vec operator()(const Vec& z) const { return apply(z); }

  Vec apply(const Vec& z) const {
    switch (kind_) {
      case ProjectionKind::Orthogonal:
        return set_.project(z);
      case ProjectionKind::Elastic:
        return elastic_step(z);
      case ProjectionKind::Iterated: {
        Vec w = z;
        for (int i = 0; i < n_; ++i) w = elastic_step(w);
        return w;
      }
      case ProjectionKind::Limit:
        return limit_elastic(set_, delta_, z, 1000000, tol_).point;
      case ProjectionKind::Custom:
        return coordinatewise(z);
    }
    return z;
  }

  // Whether the map is guaranteed to send every point into the closed domain.
  bool is_admissible() const {
    switch (kind_) {
      case ProjectionKind::Elastic:
      case ProjectionKind::Iterated:
        return delta_ == 0.0;
      default:
        return true;
    }
  }

  void require_admissible() const {
    if (!is_admissible())
      throw InvalidInput("projection '" + describe() + "' can leave the domain; use orthogonal, limit or custom");
  }

  std::string describe() const {
    switch (kind_) {
      case ProjectionKind::Orthogonal:
        return "orthogonal";
      case ProjectionKind::Elastic:
        return "elastic delta=" + fmt_short(delta_);
      case ProjectionKind::Iterated:
        return "iterated delta=" + fmt_short(delta_) + " n=" + std::to_string(n_);
      case ProjectionKind::Limit:
        return "limit delta=" + fmt_short(delta_);
      case ProjectionKind::Custom:
        return "coordinatewise g=" + describe_g(g_);
    }
    return "";
  }

 private:
  Projection(ProjectionKind k, const ConvexSet& c) : kind_(k), set_(c) {}

  static void check_delta(double d) {
    if (!(d >= 0 && d <= 1)) throw InvalidInput("elastic coefficient must lie in [0, 1]");
  }

  Vec elastic_step(const Vec& z) const {
    Vec p = set_.project(z);
    return p - delta_ * (z - p);
  }

  // p^i = (x^i)^+ + [g((x^i)^-) - g(0)]^+ on constrained coordinates, shifted
  // to the lower bound.
  Vec coordinatewise(const Vec& z) const {
    Vec out = z;
    double g0 = eval_g(g_, 0.0);
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      double lo = set_.lower()[i];
      if (!std::isfinite(lo)) continue;
      double u = z[i] - lo;
      double pos = std::max(u, 0.0), neg = std::max(-u, 0.0);
      out[i] = lo + pos + std::max(eval_g(g_, neg) - g0, 0.0);
    }
    return out;
  }

  ProjectionKind kind_;
  ConvexSet set_;
  double delta_ = 0;
  double tol_ = 1e-12;
  int n_ = 1;
  GFunction g_ = LinearG{0.0};
};

}  // namespace mskp
