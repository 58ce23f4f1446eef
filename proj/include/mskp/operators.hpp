#pragma once

#include "mskp/convex_sets.hpp"

#include <optional>
#include <string>

namespace mskp {

enum class OperatorKind { Indicator, Linear, ScaledIdentity, Sum, Prox };

// Interior-ball data: B(a, r0) lies in the closed domain and mu bounds the
// minimal section of A on that ball.
struct Certificate {
  Vec a;
  double r0 = 0;
  double mu = 0;
};

// y = J_eps(x) split as x = y + eps * B(y) + n, where B is the single-valued
// part of the operator and n is the normal-cone (constraint) part.
struct ResolventStep {
  Vec y;
  Vec normal;
};

// A maximal monotone operator from the supported gallery. The single-valued
// part B is x -> Lx, lambda x or lambda (x - c); the set part is the normal
// cone of the domain.
class Operator {
 public:
  static Operator indicator(const ConvexSet& c, double r0 = 1.0) {
    Operator op(OperatorKind::Indicator, c.dim(), c);
    auto b = c.interior_ball(r0);
    op.cert_ = {b.a, b.r0, 0.0};
    return op;
  }

  static Operator linear(const Mat& L, double r0 = 1.0) {
    check_monotone(L);
    Operator op(OperatorKind::Linear, static_cast<int>(L.rows()), ConvexSet::whole(static_cast<int>(L.rows())));
    op.L_ = L;
    op.finish_linear(Vec::Zero(L.rows()), r0);
    return op;
  }

  static Operator scaled_identity(int d, double lambda, double r0 = 1.0) {
    if (!(lambda >= 0)) throw InvalidInput("scaled identity needs lambda >= 0");
    Operator op(OperatorKind::ScaledIdentity, d, ConvexSet::whole(d));
    op.lambda_ = lambda;
    op.L_ = lambda * Mat::Identity(d, d);
    op.finish_linear(Vec::Zero(d), r0);
    return op;
  }

  // L + normal cone of C.
  static Operator sum(const Mat& L, const ConvexSet& c, double r0 = 1.0) {
    check_monotone(L);
    if (L.rows() != c.dim()) throw InvalidInput("matrix and set dimensions differ");
    Operator op(OperatorKind::Sum, c.dim(), c);
    op.L_ = L;
    auto b = c.interior_ball(r0);
    op.finish_linear(b.a, b.r0);
    return op;
  }

  // Gradient of 1/2 lambda |x - c|^2.
  static Operator prox_quadratic(const Vec& center, double lambda, double r0 = 1.0) {
    if (!(lambda >= 0)) throw InvalidInput("quadratic prox needs lambda >= 0");
    int d = static_cast<int>(center.size());
    Operator op(OperatorKind::Prox, d, ConvexSet::whole(d));
    op.lambda_ = lambda;
    op.center_ = center;
    op.L_ = lambda * Mat::Identity(d, d);
    op.lnorm_ = lambda;
    op.cert_ = {center, r0, lambda * r0};
    return op;
  }

  OperatorKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const ConvexSet& domain() const { return domain_; }
  const Certificate& certificate() const { return cert_; }
  const Mat& matrix() const { return L_; }
  double lambda() const { return lambda_; }
  double lipschitz() const { return lnorm_; }

  Vec single_valued(const Vec& x) const {
    switch (kind_) {
      case OperatorKind::Indicator:
        return Vec::Zero(dim_);
      case OperatorKind::Prox:
        return lambda_ * (x - center_);
      default:
        return L_ * x;
    }
  }

  ResolventStep resolvent_split(double eps, const Vec& x) const {
    if (!(eps >= 0)) throw InvalidInput("resolvent needs eps >= 0");
    if (x.size() != dim_) throw InvalidInput("resolvent argument has the wrong dimension");
    Vec zero = Vec::Zero(dim_);
    switch (kind_) {
      case OperatorKind::Indicator: {
        Vec y = domain_.project(x);
        return {y, x - y};
      }
      case OperatorKind::ScaledIdentity:
        return {x / (1.0 + eps * lambda_), zero};
      case OperatorKind::Prox:
        return {(x + eps * lambda_ * center_) / (1.0 + eps * lambda_), zero};
      case OperatorKind::Linear: {
        Mat M = Mat::Identity(dim_, dim_) + eps * L_;
        return {M.partialPivLu().solve(x), zero};
      }
      case OperatorKind::Sum:
        return sum_resolvent(eps, x);
    }
    return {x, zero};
  }

  Vec resolvent(double eps, const Vec& x) const { return resolvent_split(eps, x).y; }

  Vec yosida(double eps, const Vec& x) const {
    if (!(eps > 0)) throw InvalidInput("Yosida approximation needs eps > 0");
    return (x - resolvent(eps, x)) / eps;
  }

  // Element of least norm of A(x); nullopt when x is outside the domain or
  // the normal cone of the domain has no closed-form projection.
  std::optional<Vec> minimal_section(const Vec& x) const {
    if (!domain_.contains(x)) return std::nullopt;
    Vec b = single_valued(x);
    if (kind_ == OperatorKind::Indicator || kind_ == OperatorKind::Sum) {
      auto n = domain_.normal_cone_project(x, -b);
      if (!n) return std::nullopt;
      return b + *n;
    }
    return b;
  }

  std::string describe() const {
    switch (kind_) {
      case OperatorKind::Indicator:
        return "indicator of " + domain_.describe();
      case OperatorKind::Linear:
        return "linear (d=" + std::to_string(dim_) + ")";
      case OperatorKind::ScaledIdentity:
        return "scaled identity lambda=" + fmt_short(lambda_);
      case OperatorKind::Sum:
        return "linear + indicator of " + domain_.describe();
      case OperatorKind::Prox:
        return "quadratic prox lambda=" + fmt_short(lambda_) + " center " + fmt_vec(center_);
    }
    return "";
  }

  static constexpr double kResolventTol = 1e-13;
  static constexpr int kResolventBudget = 100000;

 private:
  Operator(OperatorKind k, int d, ConvexSet dom) : kind_(k), dim_(d), domain_(std::move(dom)) {}

  static void check_monotone(const Mat& L) {
    if (L.rows() != L.cols() || L.rows() == 0) throw InvalidInput("matrix must be square and non-empty");
    if (!L.allFinite()) throw InvalidInput("matrix has non-finite entries");
    Mat S = 0.5 * (L + L.transpose());
    double lmin = Eigen::SelfAdjointEigenSolver<Mat>(S, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lmin < -1e-12) throw InvalidInput("matrix is not monotone (symmetric part has eigenvalue " + fmt_short(lmin) + ")");
  }

  void finish_linear(const Vec& a, double r0) {
    lnorm_ = Eigen::JacobiSVD<Mat>(L_).singularValues()(0);
    cert_ = {a, r0, lnorm_ * (a.norm() + r0)};
  }

  // y = Pi_C(x - eps L y). Plain fixed point while eps|L| <= 0.9, otherwise
  // projected gradient on the strongly monotone map y -> (I + eps L) y - x.
  ResolventStep sum_resolvent(double eps, const Vec& x) const {
    double q = eps * lnorm_;
    double scale = std::max(1.0, x.norm());
    Vec y = domain_.project(x);
    if (q == 0) return {y, x - y};
    if (q <= 0.9) {
      for (int it = 0; it < kResolventBudget; ++it) {
        Vec next = domain_.project(x - eps * (L_ * y));
        double step = (next - y).norm();
        y = std::move(next);
        if (step * q / (1.0 - q) <= kResolventTol * scale) return finish_sum(eps, x, y);
      }
    } else {
      Mat M = Mat::Identity(dim_, dim_) + eps * L_;
      double ell = Eigen::JacobiSVD<Mat>(M).singularValues()(0);
      double tau = 1.0 / (ell * ell);
      double rho = std::sqrt(std::max(0.0, 1.0 - tau));
      for (int it = 0; it < kResolventBudget; ++it) {
        Vec next = domain_.project(y - tau * (M * y - x));
        double step = (next - y).norm();
        y = std::move(next);
        if (step * rho / (1.0 - rho) <= kResolventTol * scale) return finish_sum(eps, x, y);
      }
    }
    throw NonConvergence("resolvent iteration exceeded " + std::to_string(kResolventBudget) +
                         " iterations (eps=" + fmt_short(eps) + ")");
  }

  ResolventStep finish_sum(double eps, const Vec& x, const Vec& y) const {
    Vec w = x - eps * (L_ * y);
    Vec p = domain_.project(w);
    return {p, w - p};
  }

  OperatorKind kind_;
  int dim_;
  ConvexSet domain_;
  Mat L_;
  double lambda_ = 0;
  Vec center_;
  double lnorm_ = 0;
  Certificate cert_;
};

inline void require_in_domain(const Operator& op, const Vec& y, const std::string& what) {
  if (!op.domain().contains(y))
    throw DomainError(what + " " + fmt_vec(y) + " is outside the closed domain: violates " +
                      op.domain().violated_constraint(y));
}

struct SemigroupStep {
  Vec state;
  Vec reaction;  // accumulated normal-cone part over the substeps
};

// (I + (t/n) A)^{-n} y, with the accumulated constraint reaction.
inline SemigroupStep semigroup_split(const Operator& op, double t, const Vec& y, int n) {
  if (!(t >= 0)) throw InvalidInput("semigroup time must be nonnegative");
  if (n < 1) throw InvalidInput("semigroup needs n >= 1");
  require_in_domain(op, y, "semigroup start");
  SemigroupStep out{y, Vec::Zero(y.size())};
  if (t == 0) return out;
  double h = t / n;
  for (int i = 0; i < n; ++i) {
    auto s = op.resolvent_split(h, out.state);
    out.state = std::move(s.y);
    out.reaction += s.normal;
  }
  return out;
}

inline Vec semigroup(const Operator& op, double t, const Vec& y, int n) { return semigroup_split(op, t, y, n).state; }

// (I + lambda A_eps)^{-1} x = (eps x + lambda J_{eps+lambda} x) / (eps + lambda)
inline Vec yosida_resolvent(const Operator& op, double eps, double lambda, const Vec& x) {
  if (!(eps > 0) || !(lambda >= 0)) throw InvalidInput("need eps > 0 and lambda >= 0");
  if (lambda == 0) return x;
  return (eps * x + lambda * op.resolvent(eps + lambda, x)) / (eps + lambda);
}

}  // namespace mskp
