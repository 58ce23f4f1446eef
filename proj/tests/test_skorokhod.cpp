#include "mskp/skorokhod.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mskp;
using mskp::testing::random_step;

namespace {

// Reflection at 0 of a scalar path started at m_0 >= 0:
// x_t = m_t + max(0, sup_{s <= t} -m_s).
std::vector<double> running_reflection(const std::vector<double>& m) {
  std::vector<double> x;
  double run = 0;
  for (double v : m) {
    run = std::max(run, -v);
    x.push_back(v + run);
  }
  return x;
}

Path nonnegative_start(const Path& m) {
  Vec shift = (-m.at(0)).cwiseMax(0.0);
  return shifted(m, shift);
}

Path sinusoid(int samples, double T = 2.0) {
  std::vector<Knot> ks;
  for (int i = 0; i <= samples; ++i) {
    double t = T * i / samples;
    Vec v = Vec::Constant(1, std::sin(4 * t) - 0.5 * t + 0.2);
    ks.push_back({t, v, v, false});
  }
  return Path::sampled(T, std::move(ks));
}

}  // namespace

TEST(StepInput, OrthantReflectionMatchesRunningSupremum) {
  Rng rng(7);
  auto C = ConvexSet::orthant(3, 3);
  auto A = Operator::indicator(C);
  auto P = Projection::orthogonal(C);
  for (int rep = 0; rep < 5; ++rep) {
    Path m = nonnegative_start(random_step(rng, 3, 50, 1.0, 2.0));
    auto sol = solve_step_input(A, P, m);
    const auto ts = m.knot_times();
    for (int i = 0; i < 3; ++i) {
      std::vector<double> mi;
      for (double t : ts) mi.push_back(m.at(t)[i]);
      auto xi = running_reflection(mi);
      for (std::size_t j = 0; j < ts.size(); ++j) EXPECT_NEAR(sol.x.at(ts[j])[i], xi[j], 1e-12);
    }
    EXPECT_LE(sup_distance(sol.x + sol.k, m), 1e-12);
  }
}

TEST(StepInput, JumpsBoundedByInputJumps) {
  Rng rng(8);
  Mat L = Mat::Identity(2, 2);
  L(0, 1) = 1.0;
  auto C = ConvexSet::orthant(2, 2);
  std::vector<std::pair<Operator, Projection>> cases = {
      {Operator::sum(L, C), Projection::orthogonal(C)},
      {Operator::indicator(C), Projection::custom(C, LinearG{1.0})},
      {Operator::indicator(C), Projection::limit(C, 0.6)},
  };
  for (const auto& [A, P] : cases) {
    Path m = nonnegative_start(random_step(rng, 2, 30, 1.0, 2.0));
    auto sol = solve_step_input(A, P, m, SolverConfig{.n_sub = 20, .fixed_level = {}});
    ASSERT_FALSE(sol.jumps.empty());
    for (const auto& j : sol.jumps) {
      EXPECT_LE((j.x_right - j.x_left).norm(), j.dm.norm() + 1e-12) << P.describe();
      EXPECT_LE(j.dk.norm(), 2 * j.dm.norm() + 1e-12) << P.describe();
      EXPECT_TRUE(C.contains(j.x_right, 1e-12));
    }
  }
}

TEST(StepInput, CustomProjectionMatchesScalarRecursion) {
  Rng rng(9);
  auto C = ConvexSet::half_line();
  auto P = Projection::custom(C, LinearG{0.5});
  Path m = nonnegative_start(random_step(rng, 1, 40));
  auto sol = solve_step_input(Operator::indicator(C), P, m);
  double x = m.at(0)[0];
  for (const auto& kn : m.knots()) {
    if (kn.t == 0) continue;
    double z = x + (kn.right - kn.left)[0];
    x = z >= 0 ? z : 0.5 * -z;
    EXPECT_NEAR(sol.x.at(kn.t)[0], x, 1e-14);
  }
}

TEST(StepInput, ExponentialDecayBetweenJumps) {
  auto A = Operator::scaled_identity(1, 2.0);
  auto P = Projection::orthogonal(ConvexSet::whole(1));
  Path m = Path::constant(1.0, Vec::Ones(1));
  auto sol = solve_step_input(A, P, m, SolverConfig{.n_sub = 1000, .fixed_level = {}});
  for (double t : sol.grid) EXPECT_NEAR(sol.x.at(t)[0], std::exp(-2 * t), 2.0 * t / 1000);
  EXPECT_TRUE(sol.jumps.empty());
}

TEST(StepInput, RejectsBadProblems) {
  auto C = ConvexSet::half_line();
  Path outside = Path::constant(1.0, Vec::Constant(1, -1.0));
  EXPECT_THROW(solve_step_input(Operator::indicator(C), Projection::orthogonal(C), outside), DomainError);
  Path inside = Path::constant(1.0, Vec::Ones(1));
  EXPECT_THROW(solve_step_input(Operator::indicator(C), Projection::elastic(C, 0.5), inside), InvalidInput);
  EXPECT_THROW(solve_step_input(Operator::indicator(ConvexSet::orthant(2, 2)), Projection::orthogonal(C), inside),
               InvalidInput);
}

TEST(Solve, SinusoidReflection) {
  auto C = ConvexSet::half_line();
  Path m = sinusoid(2000);
  SolverConfig cfg;
  cfg.tol_conv = 2e-3;
  auto sol = solve(Operator::indicator(C), Projection::orthogonal(C), m, cfg);
  std::vector<double> mv, ts;
  for (int i = 0; i <= 4000; ++i) {
    ts.push_back(2.0 * i / 4000);
    mv.push_back(m.at(ts.back())[0]);
  }
  auto xv = running_reflection(mv);
  double err = 0;
  for (std::size_t i = 0; i < ts.size(); ++i) err = std::max(err, std::abs(sol.x.at(ts[i])[0] - xv[i]));
  EXPECT_LE(err, 1e-2);
}

TEST(Solve, HistoryAndFixedLevel) {
  auto C = ConvexSet::half_line();
  Path m = sinusoid(500);
  SolverConfig cfg;
  cfg.fixed_level = 3;
  auto hist = solve_with_history(Operator::indicator(C), Projection::orthogonal(C), m, cfg);
  EXPECT_TRUE(hist.converged);
  ASSERT_EQ(hist.levels.size(), 4u);
  EXPECT_EQ(hist.levels.back().level, 3);
  for (std::size_t i = 1; i < hist.levels.size(); ++i) EXPECT_GT(hist.levels[i].cells, hist.levels[i - 1].cells);
  EXPECT_LT(hist.level_diffs.back(), hist.level_diffs.front());
}

TEST(Solve, ReportsNonConvergence) {
  auto C = ConvexSet::half_line();
  SolverConfig cfg;
  cfg.max_levels = 1;
  cfg.tol_conv = 1e-12;
  try {
    solve(Operator::indicator(C), Projection::orthogonal(C), sinusoid(500), cfg);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("level differences"), std::string::npos);
  }
}

TEST(Residual, NonnegativeOnSolutionNegativeWhenForceFlipped) {
  Rng rng(10);
  auto C = ConvexSet::orthant(2, 2);
  auto A = Operator::indicator(C);
  Path m = nonnegative_start(random_step(rng, 2, 20, 1.0, 2.0));
  auto sol = solve_step_input(A, Projection::orthogonal(C), m);
  auto samples = graph_samples(A, 1, 50);
  auto windows = dyadic_windows(1.0, 3);
  EXPECT_GE(vi_residual(sol, samples, windows).value, -1e-9);

  Mat L = Mat::Identity(2, 2);
  auto B = Operator::sum(L, C);
  auto sol2 = solve_step_input(B, Projection::orthogonal(C), nonnegative_start(random_step(rng, 2, 20, 1.0, 2.0)));
  EXPECT_GE(vi_residual(sol2, graph_samples(B, 2, 50), windows).value, -1e-6);

  // flipping the constraint force breaks the inequality
  sol.kc = scaled(sol.kc, -1.0);
  sol.kd = scaled(sol.kd, -1.0);
  sol.x = m - scaled(m - sol.x, -1.0);
  EXPECT_LT(vi_residual(sol, samples, windows).value, -1e-3);
}

TEST(Apriori, BoundHoldsOnRandomProblems) {
  Rng rng(11);
  Mat L = Mat::Identity(2, 2);
  L(0, 1) = 1.0;
  auto C = ConvexSet::orthant(2, 1);
  auto A = Operator::sum(L, C);
  for (int rep = 0; rep < 5; ++rep) {
    Path m = nonnegative_start(random_step(rng, 2, 20, 1.0, 3.0));
    auto sol = solve_step_input(A, Projection::orthogonal(C), m, SolverConfig{.n_sub = 20, .fixed_level = {}});
    EXPECT_GE(apriori_margin(A.certificate(), m, sol.x, sol.k), 0.0);
  }
}

TEST(GraphSamples, LieInGraph) {
  Mat L = Mat::Identity(2, 2);
  auto C = ConvexSet::orthant(2, 2);
  auto A = Operator::sum(L, C);
  for (const auto& g : graph_samples(A, 5, 100)) {
    EXPECT_TRUE(C.contains(g.alpha, 1e-12));
    Vec n = g.beta - L * g.alpha;
    auto proj = C.normal_cone_project(g.alpha, n);
    EXPECT_LE((*proj - n).norm(), 1e-12);
  }
}
