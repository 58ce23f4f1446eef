#pragma once

#include "mskp/core.hpp"

#include <memory>
#include <optional>
#include <vector>

namespace mskp {

enum class SetKind { Box, Ball, HalfSpace, Intersection };

// Closed convex sets with an explicit projection. A box with all bounds
// infinite is the whole space.
class ConvexSet {
 public:
  struct Ball {
    Vec a;
    double r0 = 0;
  };

  static ConvexSet box(Vec lo, Vec hi) {
    if (lo.size() != hi.size() || lo.size() == 0) throw InvalidInput("box bounds must have the same positive dimension");
    for (Eigen::Index i = 0; i < lo.size(); ++i)
      if (!(lo[i] <= hi[i]) || lo[i] == kInf || hi[i] == -kInf)
        throw InvalidInput("box bounds are empty in coordinate " + std::to_string(i + 1));
    ConvexSet s(SetKind::Box, static_cast<int>(lo.size()));
    s.lo_ = std::move(lo);
    s.hi_ = std::move(hi);
    return s;
  }

  static ConvexSet whole(int d) { return box(Vec::Constant(d, -kInf), Vec::Constant(d, kInf)); }

  static ConvexSet half_line() { return orthant(1, 1); }

  // [0, inf)^constrained x R^(d - constrained)
  static ConvexSet orthant(int d, int constrained) {
    if (constrained < 0 || constrained > d) throw InvalidInput("orthant: constrained count out of range");
    Vec lo = Vec::Constant(d, -kInf);
    lo.head(constrained).setZero();
    return box(lo, Vec::Constant(d, kInf));
  }

  static ConvexSet ball(Vec center, double radius) {
    if (!(radius > 0) || !std::isfinite(radius)) throw InvalidInput("ball radius must be positive and finite");
    ConvexSet s(SetKind::Ball, static_cast<int>(center.size()));
    s.center_ = std::move(center);
    s.radius_ = radius;
    return s;
  }

  // {x : <normal, x> <= offset}
  static ConvexSet half_space(Vec normal, double offset) {
    if (!(normal.norm() > 0)) throw InvalidInput("half-space normal must be nonzero");
    ConvexSet s(SetKind::HalfSpace, static_cast<int>(normal.size()));
    s.normal_ = std::move(normal);
    s.offset_ = offset;
    return s;
  }

  static ConvexSet intersection(const ConvexSet& a, const ConvexSet& b) {
    if (a.dim() != b.dim()) throw InvalidInput("intersection of sets with different dimensions");
    if (a.kind_ == SetKind::Box && b.kind_ == SetKind::Box)
      return box(a.lo_.cwiseMax(b.lo_), a.hi_.cwiseMin(b.hi_));
    ConvexSet s(SetKind::Intersection, a.dim());
    s.parts_ = {std::make_shared<ConvexSet>(a), std::make_shared<ConvexSet>(b)};
    return s;
  }

  SetKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Vec& lower() const { return lo_; }
  const Vec& upper() const { return hi_; }
  const Vec& center() const { return center_; }
  double radius() const { return radius_; }
  const Vec& normal() const { return normal_; }
  double offset() const { return offset_; }

  bool is_whole() const {
    return kind_ == SetKind::Box && lo_.array().isInf().all() && hi_.array().isInf().all();
  }

  bool is_box() const { return kind_ == SetKind::Box; }

  Vec project(const Vec& x) const {
    check_dim(x);
    switch (kind_) {
      case SetKind::Box:
        return x.cwiseMax(lo_).cwiseMin(hi_);
      case SetKind::Ball: {
        Vec d = x - center_;
        double n = d.norm();
        if (n <= radius_) return x;
        return center_ + (radius_ / n) * d;
      }
      case SetKind::HalfSpace: {
        double v = normal_.dot(x) - offset_;
        if (v <= 0) return x;
        return x - (v / normal_.squaredNorm()) * normal_;
      }
      case SetKind::Intersection:
        return dykstra(x);
    }
    return x;
  }

  bool contains(const Vec& x, double tol = kMembershipTol) const { return violation(x) <= tol; }

  // Size of the worst constraint violation (0 inside).
  double violation(const Vec& x) const {
    check_dim(x);
    switch (kind_) {
      case SetKind::Box: {
        double v = 0;
        for (Eigen::Index i = 0; i < x.size(); ++i) v = std::max({v, lo_[i] - x[i], x[i] - hi_[i]});
        return v;
      }
      case SetKind::Ball:
        return std::max(0.0, (x - center_).norm() - radius_);
      case SetKind::HalfSpace:
        return std::max(0.0, (normal_.dot(x) - offset_) / normal_.norm());
      case SetKind::Intersection:
        return std::max(parts_[0]->violation(x), parts_[1]->violation(x));
    }
    return 0;
  }

  double distance(const Vec& x) const { return (x - project(x)).norm(); }

  // Human-readable name of the first violated constraint.
  std::string violated_constraint(const Vec& x, double tol = kMembershipTol) const {
    switch (kind_) {
      case SetKind::Box:
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          if (x[i] < lo_[i] - tol)
            return "coordinate " + std::to_string(i + 1) + " >= " + fmt_short(lo_[i]) + " (value " + fmt_short(x[i]) + ")";
          if (x[i] > hi_[i] + tol)
            return "coordinate " + std::to_string(i + 1) + " <= " + fmt_short(hi_[i]) + " (value " + fmt_short(x[i]) + ")";
        }
        return "";
      case SetKind::Ball:
        if (violation(x) > tol) return "|x - center| <= " + fmt_short(radius_) + " (distance " + fmt_short((x - center_).norm()) + ")";
        return "";
      case SetKind::HalfSpace:
        if (violation(x) > tol) return "<normal, x> <= " + fmt_short(offset_) + " (value " + fmt_short(normal_.dot(x)) + ")";
        return "";
      case SetKind::Intersection: {
        auto a = parts_[0]->violated_constraint(x, tol);
        return a.empty() ? parts_[1]->violated_constraint(x, tol) : a;
      }
    }
    return "";
  }

  // Projection of v onto the normal cone at x (x in the set). Not available
  // for general intersections.
  std::optional<Vec> normal_cone_project(const Vec& x, const Vec& v, double tol = kMembershipTol) const {
    switch (kind_) {
      case SetKind::Box: {
        Vec out = Vec::Zero(x.size());
        for (Eigen::Index i = 0; i < x.size(); ++i) {
          bool at_lo = x[i] <= lo_[i] + tol, at_hi = x[i] >= hi_[i] - tol;
          if (at_lo && at_hi) out[i] = v[i];
          else if (at_lo) out[i] = std::min(v[i], 0.0);
          else if (at_hi) out[i] = std::max(v[i], 0.0);
        }
        return out;
      }
      case SetKind::Ball: {
        Vec d = x - center_;
        if (d.norm() < radius_ - tol) return Vec::Zero(x.size());
        Vec n = d.normalized();
        return std::max(v.dot(n), 0.0) * n;
      }
      case SetKind::HalfSpace: {
        if (normal_.dot(x) < offset_ - tol * normal_.norm()) return Vec::Zero(x.size());
        return std::max(v.dot(normal_), 0.0) / normal_.squaredNorm() * normal_;
      }
      case SetKind::Intersection: {
        // closed form only when at most one part is active
        bool a0 = parts_[0]->inscribed_radius(x) <= tol, a1 = parts_[1]->inscribed_radius(x) <= tol;
        if (a0 && a1) return std::nullopt;
        if (a0) return parts_[0]->normal_cone_project(x, v, tol);
        if (a1) return parts_[1]->normal_cone_project(x, v, tol);
        return Vec::Zero(x.size());
      }
    }
    return std::nullopt;
  }

  // Radius of the largest ball around a that fits in the set (negative outside).
  double inscribed_radius(const Vec& a) const {
    switch (kind_) {
      case SetKind::Box: {
        double r = kInf;
        for (Eigen::Index i = 0; i < a.size(); ++i) r = std::min({r, a[i] - lo_[i], hi_[i] - a[i]});
        return r;
      }
      case SetKind::Ball:
        return radius_ - (a - center_).norm();
      case SetKind::HalfSpace:
        return (offset_ - normal_.dot(a)) / normal_.norm();
      case SetKind::Intersection:
        return std::min(parts_[0]->inscribed_radius(a), parts_[1]->inscribed_radius(a));
    }
    return 0;
  }

  // A closed ball B(a, r0) inside the set, with r0 <= preferred.
  Ball interior_ball(double preferred = 1.0) const {
    switch (kind_) {
      case SetKind::Box: {
        double r = preferred;
        for (Eigen::Index i = 0; i < dim_; ++i)
          if (std::isfinite(lo_[i]) && std::isfinite(hi_[i])) r = std::min(r, 0.5 * (hi_[i] - lo_[i]));
        Vec a(dim_);
        for (Eigen::Index i = 0; i < dim_; ++i) {
          bool fl = std::isfinite(lo_[i]), fh = std::isfinite(hi_[i]);
          if (fl && fh) a[i] = 0.5 * (lo_[i] + hi_[i]);
          else if (fl) a[i] = lo_[i] + r;
          else if (fh) a[i] = hi_[i] - r;
          else a[i] = 0;
        }
        if (!(r > 0)) throw InvalidInput("domain has empty interior");
        return {a, r};
      }
      case SetKind::Ball:
        return {center_, std::min(preferred, radius_)};
      case SetKind::HalfSpace: {
        double r = preferred;
        return {project(Vec::Zero(dim_)) - (r / normal_.norm()) * normal_, r};
      }
      case SetKind::Intersection: {
        std::vector<Vec> cand;
        for (const auto& p : parts_) cand.push_back(p->interior_ball(preferred).a);
        cand.push_back(0.5 * (cand[0] + cand[1]));
        cand.push_back(project(cand[2]));
        Vec best = cand[0];
        double br = -kInf;
        for (const auto& c : cand) {
          double r = inscribed_radius(c);
          if (r > br) {
            br = r;
            best = c;
          }
        }
        if (!(br > 0)) throw InvalidInput("could not find an interior ball for the intersection");
        return {best, std::min(preferred, br)};
      }
    }
    return {Vec::Zero(dim_), 0};
  }

  std::string describe() const {
    switch (kind_) {
      case SetKind::Box:
        return is_whole() ? "R^" + std::to_string(dim_) : "box " + fmt_vec(lo_) + " .. " + fmt_vec(hi_);
      case SetKind::Ball:
        return "ball center " + fmt_vec(center_) + " radius " + fmt_short(radius_);
      case SetKind::HalfSpace:
        return "half-space <" + fmt_vec(normal_) + ", x> <= " + fmt_short(offset_);
      case SetKind::Intersection:
        return "(" + parts_[0]->describe() + ") & (" + parts_[1]->describe() + ")";
    }
    return "";
  }

 private:
  ConvexSet(SetKind k, int d) : kind_(k), dim_(d) {}

  void check_dim(const Vec& x) const {
    if (x.size() != dim_) throw InvalidInput("point of dimension " + std::to_string(x.size()) + " for a set in dimension " + std::to_string(dim_));
  }

  Vec dykstra(const Vec& x) const {
    Vec y = x, p = Vec::Zero(dim_), q = Vec::Zero(dim_);
    for (int it = 0; it < 100000; ++it) {
      Vec u = parts_[0]->project(y + p);
      p = y + p - u;
      Vec y_new = parts_[1]->project(u + q);
      q = u + q - y_new;
      double step = (y_new - y).norm();
      y = std::move(y_new);
      if (step < 1e-13 * std::max(1.0, x.norm()) && violation(y) <= 1e-12) return y;
    }
    if (violation(y) > kMembershipTol) throw NonConvergence("intersection projection did not converge");
    return y;
  }

  SetKind kind_;
  int dim_;
  Vec lo_, hi_;
  Vec center_;
  double radius_ = 0;
  Vec normal_;
  double offset_ = 0;
  std::vector<std::shared_ptr<const ConvexSet>> parts_;
};

}  // namespace mskp
