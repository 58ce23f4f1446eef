#pragma once

#include "mskp/core.hpp"

#include <algorithm>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace mskp {

// STEP: value constant on [t_i, t_{i+1}).
// SAMPLED: linear on (t_i, t_{i+1}) from right_i to left_{i+1}; left != right
// only at knots flagged as jumps.
enum class PathMode { Step, Sampled };

struct Knot {
  double t = 0;
  Vec left;
  Vec right;
  bool jump = false;
};

class Path {
 public:
  Path() = default;

  static Path step(double horizon, const std::vector<double>& times,
                   const std::vector<Vec>& values) {
    if (times.empty() || times.size() != values.size())
      throw InvalidInput("step path needs matching, non-empty times and values");
    std::vector<Knot> knots;
    knots.reserve(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
      Knot k;
      k.t = times[i];
      k.right = values[i];
      k.left = i ? values[i - 1] : values[i];
      knots.push_back(std::move(k));
    }
    Path p(horizon, PathMode::Step, std::move(knots));
    p.normalize_step();
    return p;
  }

  static Path sampled(double horizon, std::vector<Knot> knots) {
    for (std::size_t i = 0; i < knots.size(); ++i) {
      Knot& k = knots[i];
      if (k.left.size() == 0) k.left = k.right;
      if (i == 0 && (k.jump || k.left != k.right))
        throw InvalidInput("a path cannot jump at time 0");
      if (!k.jump && k.left != k.right)
        throw InvalidInput("knot at t=" + fmt_short(k.t) + " has left != right but is not flagged as a jump");
    }
    return Path(horizon, PathMode::Sampled, std::move(knots));
  }

  static Path constant(double horizon, const Vec& v) { return step(horizon, {0.0}, {v}); }

  double horizon() const { return horizon_; }
  int dim() const { return dim_; }
  PathMode mode() const { return mode_; }
  const std::vector<Knot>& knots() const { return knots_; }

  std::vector<double> knot_times() const {
    std::vector<double> ts;
    ts.reserve(knots_.size());
    for (const auto& k : knots_) ts.push_back(k.t);
    return ts;
  }

  // Index of the last knot with t_i <= t.
  std::size_t locate(double t) const {
    check_time(t);
    auto it = std::upper_bound(knots_.begin(), knots_.end(), t,
                               [](double v, const Knot& k) { return v < k.t; });
    return static_cast<std::size_t>(it - knots_.begin()) - 1;
  }

  Vec at(double t) const {
    std::size_t i = locate(t);
    const Knot& k = knots_[i];
    if (t == k.t || mode_ == PathMode::Step || i + 1 == knots_.size()) return k.right;
    const Knot& n = knots_[i + 1];
    double w = (t - k.t) / (n.t - k.t);
    return k.right + w * (n.left - k.right);
  }

  Vec left(double t) const {
    std::size_t i = locate(t);
    if (knots_[i].t == t) return knots_[i].left;
    return at(t);
  }

  Vec jump_at(double t) const { return at(t) - left(t); }

  bool has_knot(double t) const {
    if (t < 0 || t > horizon_) return false;
    return knots_[locate(t)].t == t;
  }

  // Nonzero jumps in time order.
  std::vector<std::pair<double, Vec>> jumps() const {
    std::vector<std::pair<double, Vec>> out;
    for (const auto& k : knots_)
      if (k.left != k.right) out.emplace_back(k.t, k.right - k.left);
    return out;
  }

  std::vector<double> jump_times() const {
    std::vector<double> out;
    for (const auto& k : knots_)
      if (k.left != k.right) out.push_back(k.t);
    return out;
  }

  // Same function written as a SAMPLED path (exact).
  Path as_sampled() const {
    if (mode_ == PathMode::Sampled) return *this;
    std::vector<Knot> ks = knots_;
    for (auto& k : ks) k.jump = k.left != k.right;
    return Path(horizon_, PathMode::Sampled, std::move(ks));
  }

 private:
  Path(double horizon, PathMode mode, std::vector<Knot> knots)
      : horizon_(horizon), mode_(mode), knots_(std::move(knots)) {
    validate();
  }

  void validate() {
    if (knots_.empty()) throw InvalidInput("path has no knots");
    if (!(horizon_ > 0) || !std::isfinite(horizon_)) throw InvalidInput("path horizon must be positive and finite");
    if (knots_.front().t != 0.0) throw InvalidInput("first knot must be at t=0");
    dim_ = static_cast<int>(knots_.front().right.size());
    if (dim_ <= 0) throw InvalidInput("path dimension must be positive");
    for (std::size_t i = 0; i < knots_.size(); ++i) {
      const Knot& k = knots_[i];
      if (k.right.size() != dim_ || k.left.size() != dim_)
        throw InvalidInput("inconsistent dimension at t=" + fmt_short(k.t));
      if (!k.right.allFinite() || !k.left.allFinite())
        throw InvalidInput("non-finite value at t=" + fmt_short(k.t));
      if (i && !(k.t > knots_[i - 1].t))
        throw InvalidInput("knot times must be strictly increasing (t=" + fmt_short(k.t) + ")");
      if (k.t > horizon_) throw InvalidInput("knot at t=" + fmt_short(k.t) + " beyond horizon");
    }
  }

  void normalize_step() {
    std::vector<Knot> out;
    out.reserve(knots_.size());
    for (auto& k : knots_) {
      if (!out.empty()) {
        k.left = out.back().right;
        if (k.right == k.left) continue;
      }
      k.jump = !out.empty();
      out.push_back(std::move(k));
    }
    knots_ = std::move(out);
  }

  void check_time(double t) const {
    if (!(t >= 0.0) || t > horizon_)
      throw InvalidInput("time " + fmt_double(t) + " outside [0, " + fmt_short(horizon_) + "]");
  }

  double horizon_ = 0;
  int dim_ = 0;
  PathMode mode_ = PathMode::Step;
  std::vector<Knot> knots_;
};

// ---------------------------------------------------------------------------
// Partitions

class Partition {
 public:
  Partition() = default;
  Partition(double horizon, std::vector<double> points) : horizon_(horizon), points_(std::move(points)) {
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    if (points_.empty() || points_.front() != 0.0) points_.insert(points_.begin(), 0.0);
    if (points_.front() < 0 || points_.back() > horizon_)
      throw InvalidInput("partition points must lie in [0, T]");
  }

  static Partition uniform(double horizon, std::size_t cells) {
    if (cells == 0) throw InvalidInput("uniform partition needs at least one cell");
    std::vector<double> pts(cells);
    for (std::size_t i = 0; i < cells; ++i) pts[i] = horizon * static_cast<double>(i) / static_cast<double>(cells);
    return Partition(horizon, std::move(pts));
  }

  Partition merged(const std::vector<double>& extra) const {
    std::vector<double> pts = points_;
    pts.insert(pts.end(), extra.begin(), extra.end());
    return Partition(horizon_, std::move(pts));
  }

  double horizon() const { return horizon_; }
  const std::vector<double>& points() const { return points_; }
  std::size_t cells() const { return points_.size(); }

  double mesh() const {
    double m = 0;
    for (std::size_t i = 0; i < points_.size(); ++i) {
      double next = i + 1 < points_.size() ? points_[i + 1] : horizon_;
      m = std::max(m, next - points_[i]);
    }
    return m;
  }

 private:
  double horizon_ = 0;
  std::vector<double> points_;
};

// Step path m^pi_t = m_r for t in [r, r'), r, r' consecutive points of pi.
inline Path discretize(const Path& m, const Partition& pi) {
  if (pi.horizon() != m.horizon()) throw InvalidInput("partition and path horizons differ");
  std::vector<Vec> vals;
  vals.reserve(pi.points().size());
  for (double r : pi.points()) vals.push_back(m.at(r));
  return Path::step(m.horizon(), pi.points(), vals);
}

// ---------------------------------------------------------------------------
// Arithmetic on paths (exact on the union of knots)

inline std::vector<double> union_times(const Path& a, const Path& b) {
  std::vector<double> ts = a.knot_times();
  auto tb = b.knot_times();
  ts.insert(ts.end(), tb.begin(), tb.end());
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  return ts;
}

inline Path lincomb(double ca, const Path& a, double cb, const Path& b) {
  if (a.dim() != b.dim()) throw InvalidInput("path dimensions differ");
  if (a.horizon() != b.horizon()) throw InvalidInput("path horizons differ");
  auto ts = union_times(a, b);
  if (a.mode() == PathMode::Step && b.mode() == PathMode::Step) {
    std::vector<Vec> vals;
    vals.reserve(ts.size());
    for (double t : ts) vals.push_back(ca * a.at(t) + cb * b.at(t));
    return Path::step(a.horizon(), ts, vals);
  }
  std::vector<Knot> ks;
  ks.reserve(ts.size());
  for (double t : ts) {
    Knot k;
    k.t = t;
    k.right = ca * a.at(t) + cb * b.at(t);
    k.left = ca * a.left(t) + cb * b.left(t);
    if (t == 0.0) k.left = k.right;
    k.jump = k.left != k.right;
    ks.push_back(std::move(k));
  }
  return Path::sampled(a.horizon(), std::move(ks));
}

inline Path operator+(const Path& a, const Path& b) { return lincomb(1.0, a, 1.0, b); }
inline Path operator-(const Path& a, const Path& b) { return lincomb(1.0, a, -1.0, b); }

inline Path scaled(const Path& a, double c) {
  return lincomb(c, a, 0.0, Path::constant(a.horizon(), Vec::Zero(a.dim())));
}

inline Path shifted(const Path& a, const Vec& v) {
  return lincomb(1.0, a, 1.0, Path::constant(a.horizon(), v));
}

// Coordinate projection.
inline Path coordinate(const Path& a, int i) {
  std::vector<Knot> ks;
  for (const auto& k : a.knots()) {
    Knot c;
    c.t = k.t;
    c.left = Vec::Constant(1, k.left[i]);
    c.right = Vec::Constant(1, k.right[i]);
    c.jump = c.left != c.right;
    ks.push_back(std::move(c));
  }
  if (a.mode() == PathMode::Step) {
    std::vector<double> ts;
    std::vector<Vec> vs;
    for (const auto& k : ks) {
      ts.push_back(k.t);
      vs.push_back(k.right);
    }
    return Path::step(a.horizon(), ts, vs);
  }
  return Path::sampled(a.horizon(), std::move(ks));
}

// Exact sup_{t<=T} |a_t - b_t| for the piecewise-linear representation.
inline double sup_distance(const Path& a, const Path& b) {
  double best = 0;
  for (double t : union_times(a, b)) {
    best = std::max(best, (a.at(t) - b.at(t)).norm());
    best = std::max(best, (a.left(t) - b.left(t)).norm());
  }
  double T = a.horizon();
  best = std::max(best, (a.at(T) - b.at(T)).norm());
  return best;
}

inline double sup_norm(const Path& a) {
  double best = 0;
  for (const auto& k : a.knots()) best = std::max({best, k.left.norm(), k.right.norm()});
  return best;
}

// sup over a grid of right values.
inline double grid_sup_distance(const Path& a, const Path& b, const std::vector<double>& grid) {
  double best = 0;
  for (double t : grid) best = std::max(best, (a.at(t) - b.at(t)).norm());
  return best;
}

struct Window {
  double s = 0;
  double t = 0;
};

// [j T / 2^l, (j + 1) T / 2^l] for l = 0..depth.
inline std::vector<Window> dyadic_windows(double horizon, int depth) {
  std::vector<Window> out;
  for (int l = 0; l <= depth; ++l) {
    long n = 1L << l;
    for (long j = 0; j < n; ++j)
      out.push_back({horizon * static_cast<double>(j) / static_cast<double>(n),
                     j + 1 == n ? horizon : horizon * static_cast<double>(j + 1) / static_cast<double>(n)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Variation, decomposition, integrals

namespace detail {

// Breakpoints of a and b strictly inside (s, t), with s and t at the ends.
inline std::vector<double> window_times(const Path& a, const Path& b, double s, double t) {
  std::vector<double> ts{s};
  for (const Path* p : {&a, &b})
    for (const auto& k : p->knots())
      if (k.t > s && k.t < t) ts.push_back(k.t);
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (t > s) ts.push_back(t);
  return ts;
}

inline void check_window(const Path& p, double s, double t) {
  if (!(s >= 0) || !(t <= p.horizon()) || !(s <= t))
    throw InvalidInput("window [" + fmt_short(s) + ", " + fmt_short(t) + "] is not inside [0, T]");
}

}  // namespace detail

// Total variation over [s, t]: jumps at r in (s, t] count, a jump at s does not.
inline double total_variation(const Path& k, double s, double t) {
  detail::check_window(k, s, t);
  auto ts = detail::window_times(k, k, s, t);
  double v = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    double a = ts[i], b = ts[i + 1];
    v += (k.left(b) - k.at(a)).norm();
    v += (k.at(b) - k.left(b)).norm();
  }
  return v;
}

// A path together with its cumulative variation V(t) = V_[0,t].
class BVPath {
 public:
  BVPath() = default;
  explicit BVPath(Path p) : path_(std::move(p)) {
    const auto& ks = path_.knots();
    cum_.resize(ks.size());
    cum_[0] = 0;
    for (std::size_t i = 1; i < ks.size(); ++i)
      cum_[i] = cum_[i - 1] + (ks[i].left - ks[i - 1].right).norm() + (ks[i].right - ks[i].left).norm();
  }

  const Path& path() const { return path_; }

  double variation_to(double t) const {
    std::size_t i = path_.locate(t);
    const auto& k = path_.knots()[i];
    if (k.t == t) return cum_[i];
    return cum_[i] + (path_.at(t) - k.right).norm();
  }

  double variation(double s, double t) const {
    detail::check_window(path_, s, t);
    return variation_to(t) - variation_to(s);
  }

  double total() const { return variation_to(path_.horizon()); }

 private:
  Path path_;
  std::vector<double> cum_;
};

struct JumpDecomposition {
  Path continuous;
  Path jumps;
};

// k = k^c + k^d with k^d_t = sum_{r<=t} Delta k_r (STEP) and k^c continuous.
inline JumpDecomposition jump_decompose(const Path& k) {
  const auto& ks = k.knots();
  double T = k.horizon();
  std::vector<double> jt{0.0};
  std::vector<Vec> jv{Vec::Zero(k.dim())};
  std::vector<Knot> cks;
  cks.reserve(ks.size());
  Vec acc = Vec::Zero(k.dim());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    Knot c;
    c.t = ks[i].t;
    c.left = ks[i].left - acc;
    if (ks[i].left != ks[i].right) {
      acc += ks[i].right - ks[i].left;
      jt.push_back(ks[i].t);
      jv.push_back(acc);
    }
    c.right = c.left;
    cks.push_back(std::move(c));
  }
  Path jumps = Path::step(T, jt, jv);
  if (k.mode() == PathMode::Step) return {Path::constant(T, ks.front().right), std::move(jumps)};
  return {Path::sampled(T, std::move(cks)), std::move(jumps)};
}

// Lebesgue-Stieltjes integral int_(s,t] <x_r, dk_r>; jump terms use the
// right value x_r. Exact when x and k are piecewise linear.
inline double stieltjes(const Path& x, const Path& k, double s, double t) {
  if (x.dim() != k.dim()) throw InvalidInput("integrand and integrator dimensions differ");
  detail::check_window(k, s, t);
  auto ts = detail::window_times(x, k, s, t);
  double acc = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    double a = ts[i], b = ts[i + 1];
    Vec dk = k.left(b) - k.at(a);
    if (dk.squaredNorm() > 0) acc += x.at(0.5 * (a + b)).dot(dk);
    Vec jk = k.at(b) - k.left(b);
    if (jk.squaredNorm() > 0) acc += x.at(b).dot(jk);
  }
  return acc;
}

// Quadratic covariation sum_{r in (s,t]} <Delta x_r, Delta k_r>.
inline double covariation(const Path& x, const Path& k, double s, double t) {
  detail::check_window(k, s, t);
  double acc = 0;
  for (double r : union_times(x, k))
    if (r > s && r <= t) acc += x.jump_at(r).dot(k.jump_at(r));
  return acc;
}

// sum_{r in (s,t]} |Delta k_r|^2
inline double jump_energy(const Path& k, double s, double t) { return covariation(k, k, s, t); }

// int_s^t f(x_r) dr, Simpson on each linear piece.
inline double time_integral(const Path& x, const std::function<double(const Vec&)>& f, double s, double t) {
  detail::check_window(x, s, t);
  auto ts = detail::window_times(x, x, s, t);
  double acc = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    double a = ts[i], b = ts[i + 1];
    acc += (b - a) / 6.0 * (f(x.at(a)) + 4.0 * f(x.at(0.5 * (a + b))) + f(x.left(b)));
  }
  return acc;
}

// int_(s,t] |x_r| dV(k)_r
inline double variation_integral(const Path& x, const Path& k, double s, double t) {
  detail::check_window(k, s, t);
  auto ts = detail::window_times(x, k, s, t);
  double acc = 0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
    double a = ts[i], b = ts[i + 1];
    double dv = (k.left(b) - k.at(a)).norm();
    if (dv > 0) acc += dv / 6.0 * (x.at(a).norm() + 4.0 * x.at(0.5 * (a + b)).norm() + x.left(b).norm());
    acc += x.at(b).norm() * (k.at(b) - k.left(b)).norm();
  }
  return acc;
}

// ---------------------------------------------------------------------------
// Oscillation-controlled cell walks

namespace detail {

// Walks the path and cuts a new cell as late as possible while the
// oscillation of the current cell stays <= theta. Returns the cut times,
// starting with 0.
inline std::vector<double> greedy_cells(const Path& x, double theta) {
  const auto& ks = x.knots();
  std::vector<double> cuts{0.0};
  std::vector<Vec> cell{ks[0].right};

  auto exceeds = [&](const Vec& q) {
    for (const auto& v : cell)
      if ((q - v).norm() > theta) return true;
    return false;
  };
  auto open_cell = [&](double t, const Vec& v) {
    cuts.push_back(t);
    cell.assign(1, v);
  };

  for (std::size_t i = 1; i <= ks.size(); ++i) {
    double ta = ks[i - 1].t;
    double tb = i < ks.size() ? ks[i].t : x.horizon();
    Vec p = ks[i - 1].right;
    Vec q = i < ks.size() ? ks[i].left : p;
    if (tb > ta && q != p) {
      // continuous piece from p to q, possibly split by several cuts
      Vec d = q - p;
      double s0 = 0.0;
      while (true) {
        // first parameter in (s0, 1) where some cell value is farther than theta
        double cross = kInf;
        for (const auto& v : cell) {
          Vec w = p - v;
          double A = d.squaredNorm(), B = 2.0 * w.dot(d), C = w.squaredNorm() - theta * theta;
          double disc = B * B - 4 * A * C;
          if (disc < 0) continue;
          double root = (-B + std::sqrt(disc)) / (2 * A);
          if (root < 1.0) cross = std::min(cross, std::max(root, s0));
        }
        if (cross == kInf) {
          cell.push_back(q);
          break;
        }
        open_cell(ta + cross * (tb - ta), p + cross * d);
        s0 = cross;
      }
    } else if (i < ks.size()) {
      cell.push_back(q);
    }
    if (i < ks.size() && ks[i].right != ks[i].left) {
      if (exceeds(ks[i].right)) {
        open_cell(ks[i].t, ks[i].right);
      } else {
        cell.push_back(ks[i].right);
      }
    }
  }
  return cuts;
}

inline double value_diameter(const std::vector<Vec>& vs) {
  double d = 0;
  for (std::size_t i = 0; i < vs.size(); ++i)
    for (std::size_t j = i + 1; j < vs.size(); ++j) d = std::max(d, (vs[i] - vs[j]).norm());
  return d;
}

}  // namespace detail

// Partition whose cells have oscillation <= theta, cutting greedily from the left.
inline Partition oscillation_partition(const Path& x, double theta) {
  if (!(theta > 0)) throw InvalidInput("oscillation target must be positive");
  return Partition(x.horizon(), detail::greedy_cells(x, theta));
}

namespace detail {

// STEP paths: a cut anywhere inside the gap [k_g, k_{g+1}) sees the same
// values, and an earlier cut in a gap leaves more room for the next one, so
// it is enough to track the earliest reachable cut per gap.
inline bool step_modulus_feasible(const Path& x, double delta, double th) {
  const auto& ks = x.knots();
  const std::size_t n = ks.size();
  std::vector<double> earliest(n, kInf);
  earliest[0] = 0.0;
  for (std::size_t g = 0; g < n; ++g) {
    double c = earliest[g];
    if (c == kInf) continue;
    std::size_t j = g + 1;
    for (; j < n; ++j) {
      bool bad = false;
      for (std::size_t i = g; i < j && !bad; ++i) bad = (ks[j].right - ks[i].right).norm() > th;
      if (bad) break;
    }
    if (j == n) return true;
    double first = c + delta;
    if (first > ks[j].t) continue;
    for (std::size_t h = g + 1; h <= j; ++h) {
      double end = h < j ? ks[h + 1].t : ks[j].t;
      double pos = std::max(ks[h].t, first);
      if (h == j ? pos <= end : pos < end) earliest[h] = std::min(earliest[h], pos);
    }
  }
  return false;
}

// SAMPLED paths: cuts restricted to the knots plus a uniform grid.
inline bool grid_modulus_feasible(const Path& x, double delta, double th, const std::vector<double>& cand) {
  const std::size_t n = cand.size();
  std::vector<char> reach(n, 0);
  reach[0] = 1;
  const double T = x.horizon();
  for (std::size_t i = 0; i < n; ++i) {
    if (!reach[i]) continue;
    std::vector<Vec> cell{x.at(cand[i])};
    auto fits = [&](const Vec& v) {
      for (const auto& w : cell)
        if ((v - w).norm() > th) return false;
      return true;
    };
    std::size_t j = i + 1;
    bool open = true;
    for (; j < n; ++j) {
      Vec l = x.left(cand[j]);
      if (!fits(l)) {
        open = false;
        break;
      }
      cell.push_back(l);
      if (cand[j] - cand[i] >= delta) reach[j] = 1;
      Vec r = x.at(cand[j]);
      if (!fits(r)) {
        open = false;
        break;
      }
      cell.push_back(r);
    }
    if (open && fits(x.at(T))) return true;
  }
  return false;
}

}  // namespace detail

// Cadlag modulus gamma(delta, T): infimum over partitions whose cells have
// length >= delta (the cell containing T excepted) of the largest cell
// oscillation. Exact for STEP paths; for SAMPLED paths the cuts are searched
// on the knots plus a grid of `grid` points, which gives an upper bound.
inline double cadlag_modulus(const Path& x, double delta, int grid = 400) {
  if (!(delta > 0)) throw InvalidInput("modulus needs delta > 0");
  const auto& ks = x.knots();
  if (x.mode() == PathMode::Step) {
    std::vector<double> cand{0.0};
    for (std::size_t i = 0; i < ks.size(); ++i)
      for (std::size_t j = i + 1; j < ks.size(); ++j) cand.push_back((ks[i].right - ks[j].right).norm());
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::size_t lo = 0, hi = cand.size() - 1;
    while (lo < hi) {
      std::size_t mid = (lo + hi) / 2;
      if (detail::step_modulus_feasible(x, delta, cand[mid])) hi = mid;
      else lo = mid + 1;
    }
    return cand[lo];
  }
  std::vector<double> cuts = x.knot_times();
  for (int i = 1; i < grid; ++i) cuts.push_back(x.horizon() * i / grid);
  cuts.push_back(x.horizon());
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Vec> vertices;
  for (const auto& k : ks) {
    vertices.push_back(k.left);
    vertices.push_back(k.right);
  }
  double lo = 0, hi = detail::value_diameter(vertices);
  if (detail::grid_modulus_feasible(x, delta, 0.0, cuts)) return 0.0;
  for (int it = 0; it < 60 && hi - lo > 1e-12 * std::max(1.0, hi); ++it) {
    double mid = 0.5 * (lo + hi);
    if (detail::grid_modulus_feasible(x, delta, mid, cuts)) hi = mid;
    else lo = mid;
  }
  return hi;
}

// ---------------------------------------------------------------------------
// Skorokhod distance

struct D0Result {
  double distance = 0;
  bool approximate = false;
};

namespace detail {

inline Path step_skeleton(const Path& p) {
  if (p.mode() == PathMode::Step) return p;
  std::vector<double> ts;
  std::vector<Vec> vs;
  for (const auto& k : p.knots()) {
    ts.push_back(k.t);
    vs.push_back(k.right);
  }
  return Path::step(p.horizon(), ts, vs);
}

// Is there a nondecreasing path from (0,0) to (T,T) in
// {(t,u): |t-u| <= th, |x(t) - y(u)| <= th}?
inline bool d0_feasible(const std::vector<double>& s, const std::vector<Vec>& xv,
                        const std::vector<double>& tau, const std::vector<Vec>& yv, double T, double th) {
  const std::size_t p = xv.size(), q = yv.size();
  auto S = [&](std::size_t i) { return i < p ? s[i] : T; };
  auto U = [&](std::size_t j) { return j < q ? tau[j] : T; };
  struct Iv {
    double lo = kInf, hi = -kInf;
    bool empty() const { return lo > hi; }
  };
  std::vector<Iv> L(p * q), B(p * q);
  std::vector<char> C(p * q, 0);
  auto id = [&](std::size_t i, std::size_t j) { return i * q + j; };
  if ((xv[0] - yv[0]).norm() > th) return false;
  C[id(0, 0)] = 1;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < q; ++j) {
      std::size_t c = id(i, j);
      if ((xv[i] - yv[j]).norm() > th) continue;
      bool any = C[c] || !L[c].empty() || !B[c].empty();
      if (!any) continue;
      double min_u = kInf, min_t = kInf;
      if (C[c]) {
        min_u = U(j);
        min_t = S(i);
      }
      if (!L[c].empty()) {
        min_u = std::min(min_u, L[c].lo);
        min_t = std::min(min_t, S(i));
      }
      if (!B[c].empty()) {
        min_u = std::min(min_u, U(j));
        min_t = std::min(min_t, B[c].lo);
      }
      if (i + 1 == p && j + 1 == q) return true;
      double s1 = S(i + 1), u1 = U(j + 1);
      if (i + 1 < p) {
        Iv r{std::max({min_u, U(j), s1 - th}), std::min(u1, s1 + th)};
        if (!r.empty()) L[id(i + 1, j)] = r;
      }
      if (j + 1 < q) {
        Iv r{std::max({min_t, S(i), u1 - th}), std::min(s1, u1 + th)};
        if (!r.empty()) B[id(i, j + 1)] = r;
      }
      if (i + 1 < p && j + 1 < q && std::abs(s1 - u1) <= th && min_u <= u1) C[id(i + 1, j + 1)] = 1;
    }
  }
  return false;
}

}  // namespace detail

// d0(x, y) = inf over time changes lambda of max(|x - y o lambda|_T, |lambda - id|).
// Exact for STEP paths; SAMPLED paths are reduced to their knot skeleton.
inline D0Result skorokhod_d0(const Path& x, const Path& y) {
  if (x.horizon() != y.horizon()) throw InvalidInput("paths have different horizons");
  if (x.dim() != y.dim()) throw InvalidInput("paths have different dimensions");
  D0Result res;
  res.approximate = x.mode() == PathMode::Sampled || y.mode() == PathMode::Sampled;
  Path xs = detail::step_skeleton(x), ys = detail::step_skeleton(y);
  std::vector<double> s, tau;
  std::vector<Vec> xv, yv;
  for (const auto& k : xs.knots()) {
    s.push_back(k.t);
    xv.push_back(k.right);
  }
  for (const auto& k : ys.knots()) {
    tau.push_back(k.t);
    yv.push_back(k.right);
  }
  const double T = x.horizon();
  std::vector<double> cand{0.0};
  for (const auto& a : xv)
    for (const auto& b : yv) cand.push_back((a - b).norm());
  auto sx = s, ty = tau;
  sx.push_back(T);
  ty.push_back(T);
  for (double a : sx)
    for (double b : ty) cand.push_back(std::abs(a - b));
  std::sort(cand.begin(), cand.end());
  cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
  std::size_t lo = 0, hi = cand.size() - 1;
  while (lo < hi) {
    std::size_t mid = (lo + hi) / 2;
    if (detail::d0_feasible(s, xv, tau, yv, T, cand[mid])) hi = mid;
    else lo = mid + 1;
  }
  res.distance = cand[lo];
  return res;
}

}  // namespace mskp
