#include "mskp/projections.hpp"
#include "mskp/rng.hpp"

#include <gtest/gtest.h>

using namespace mskp;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

struct Case {
  ConvexSet set;
  Projection proj;
};

std::vector<Case> admissible() {
  auto quad = ConvexSet::orthant(2, 2);
  auto ball = ConvexSet::ball(v2(0.5, -0.5), 1.0);
  auto slab = ConvexSet::intersection(ConvexSet::ball(Vec::Zero(2), 2.0), ConvexSet::half_space(v2(1, 1), 0.5));
  auto half = ConvexSet::orthant(2, 1);
  return {
      {quad, Projection::orthogonal(quad)},
      {ball, Projection::orthogonal(ball)},
      {slab, Projection::orthogonal(slab)},
      {ball, Projection::limit(ball, 0.5)},
      {ball, Projection::limit(ball, 1.0)},
      {quad, Projection::limit(quad, 0.7)},
      {quad, Projection::custom(quad, LinearG{1.0})},
      {half, Projection::custom(half, LinearG{0.5})},
      {quad, Projection::custom(quad, LinearG{-0.8})},
      {quad, Projection::custom(quad, CapG{0.3})},
  };
}

}  // namespace

TEST(Projection, ScalarExamples) {
  auto half = ConvexSet::half_line();
  Vec z = Vec::Constant(1, -3.0);
  EXPECT_EQ(Projection::orthogonal(half)(z)[0], 0.0);
  EXPECT_EQ(Projection::elastic(half, 1.0)(z)[0], 3.0);
  EXPECT_EQ(Projection::elastic(half, 0.25)(z)[0], 0.75);
  EXPECT_EQ(Projection::iterated(half, 0.5, 3)(z)[0], 1.5);
  EXPECT_EQ(Projection::custom(half, LinearG{0.5})(z)[0], 1.5);
  EXPECT_EQ(Projection::custom(half, CapG{2.0})(z)[0], 2.0);
  EXPECT_EQ(Projection::custom(half, LinearG{-1.0})(z)[0], 0.0);
}

TEST(Projection, ElasticZeroIsOrthogonal) {
  Rng rng(1);
  auto ball = ConvexSet::ball(Vec::Zero(2), 1.0);
  for (int i = 0; i < 100; ++i) {
    Vec z = rng.uniform_vec(2, -3, 3);
    EXPECT_EQ(Projection::elastic(ball, 0.0)(z), ball.project(z));
    auto r = limit_elastic(ball, 0.0, z);
    EXPECT_LE(r.iterations, 1);
    EXPECT_LE((r.point - ball.project(z)).norm(), 1e-15);
  }
}

TEST(Projection, LimitOnBallFollowsRadialRecursion) {
  auto ball = ConvexSet::ball(Vec::Zero(2), 1.0);
  auto r = limit_elastic(ball, 1.0, v2(3, 0));
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(r.point, v2(-1, 0));
  // radial oracle: rho -> 1 - delta (rho - 1) until |rho| <= 1
  for (double delta : {0.3, 0.9}) {
    for (double rho0 : {1.5, 4.0, 9.0}) {
      double rho = rho0;
      long n = 0;
      while (std::abs(rho) > 1.0) {
        rho = rho > 0 ? 1.0 - delta * (rho - 1.0) : -1.0 + delta * (-rho - 1.0);
        ++n;
      }
      auto lr = limit_elastic(ball, delta, v2(0, rho0));
      EXPECT_EQ(lr.iterations, n);
      EXPECT_NEAR(lr.point[1], rho, 1e-14);
      EXPECT_LE(lr.displacement, lr.bound + 1e-12);
    }
  }
}

TEST(Projection, LimitOnQuadrantIsReflection) {
  auto quad = ConvexSet::orthant(2, 2);
  auto r = limit_elastic(quad, 0.5, v2(-2, -4));
  EXPECT_EQ(r.point, v2(1, 2));
  EXPECT_EQ(r.iterations, 1);
  EXPECT_EQ(limit_elastic(quad, 0.5, v2(1, 1)).iterations, 0);
}

TEST(Projection, ElasticRejectedAsSolverProjection) {
  auto half = ConvexSet::half_line();
  EXPECT_FALSE(Projection::elastic(half, 0.5).is_admissible());
  EXPECT_FALSE(Projection::iterated(half, 0.5, 4).is_admissible());
  EXPECT_TRUE(Projection::iterated(half, 0.0, 4).is_admissible());
  EXPECT_THROW(Projection::elastic(half, 0.5).require_admissible(), InvalidInput);
  EXPECT_THROW(Projection::elastic(half, 1.5), InvalidInput);
  EXPECT_THROW(Projection::custom(ConvexSet::ball(Vec::Zero(1), 1.0), LinearG{0.5}), InvalidInput);
  EXPECT_THROW(Projection::custom(half, LinearG{1.5}), InvalidInput);
  EXPECT_THROW(Projection::custom(ConvexSet::box(Vec::Zero(1), Vec::Ones(1)), LinearG{0.5}), InvalidInput);
}

TEST(Projection, FixesDomainAndIsNonexpansive) {
  Rng rng(2);
  for (const auto& c : admissible()) {
    for (int i = 0; i < 300; ++i) {
      Vec x = rng.uniform_vec(2, -4, 4), y = rng.uniform_vec(2, -4, 4);
      Vec px = c.proj(x), py = c.proj(y);
      EXPECT_TRUE(c.set.contains(px, 1e-9)) << c.proj.describe();
      EXPECT_LE((px - py).norm(), (x - y).norm() + 1e-9) << c.proj.describe();
      Vec in = c.set.project(x);
      EXPECT_LE((c.proj(in) - in).norm(), 1e-9) << c.proj.describe();
    }
  }
}

TEST(Projection, PairAnchorAndInteriorBallInequalities) {
  Rng rng(3);
  for (const auto& c : admissible()) {
    auto ib = c.set.interior_ball(1.0);
    for (int i = 0; i < 300; ++i) {
      Vec x = rng.uniform_vec(2, -4, 4), y = rng.uniform_vec(2, -4, 4);
      Vec px = c.proj(x), py = c.proj(y);
      Vec w = (px - x) - (py - y);
      EXPECT_LE((px - py).dot(w), 0.5 * w.squaredNorm() + 1e-10) << c.proj.describe();
      Vec a = c.set.project(rng.uniform_vec(2, -4, 4));
      EXPECT_LE((px - a).dot(px - x), 0.5 * (px - x).squaredNorm() + 1e-10) << c.proj.describe();
      EXPECT_LE(ib.r0 * (px - x).norm(), (ib.a - px).dot(px - x) + 0.5 * (px - x).squaredNorm() + 1e-10)
          << c.proj.describe();
    }
  }
}

TEST(Projection, ElasticDescentInequality) {
  Rng rng(4);
  for (const auto& set : {ConvexSet::ball(v2(0.5, -0.5), 1.0), ConvexSet::orthant(2, 2)}) {
    auto ib = set.interior_ball(1.0);
    for (int i = 0; i < 300; ++i) {
      double delta = rng.uniform();
      Vec z = rng.uniform_vec(2, -4, 4);
      double gap = set.distance(z);
      double lhs = (Projection::elastic(set, delta)(z) - ib.a).squaredNorm() + (1 - delta * delta) * gap * gap +
                   2 * ib.r0 * (1 + delta) * gap;
      EXPECT_LE(lhs, (z - ib.a).squaredNorm() + 1e-8);
    }
  }
}

TEST(Projection, OrthogonalIsFirmlyNonexpansiveAndVariational) {
  Rng rng(5);
  for (const auto& c : admissible()) {
    if (c.proj.kind() != ProjectionKind::Orthogonal) continue;
    for (int i = 0; i < 300; ++i) {
      Vec x = rng.uniform_vec(2, -4, 4), y = rng.uniform_vec(2, -4, 4);
      Vec px = c.proj(x), py = c.proj(y);
      EXPECT_LE((px - py).squaredNorm(), (px - py).dot(x - y) + 1e-9);
      Vec a = c.set.project(rng.uniform_vec(2, -4, 4));
      EXPECT_LE((px - x).dot(px - a), 1e-7);
    }
  }
}
