#include "mskp/penalized.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mskp;
using mskp::testing::random_step;

namespace {

Path nonnegative_start(const Path& m) { return shifted(m, (-m.at(0)).cwiseMax(0.0)); }

}  // namespace

TEST(Penalized, ConstantNegativeInputDecaysExponentially) {
  auto A = Operator::indicator(ConvexSet::half_line());
  for (double eps : {0.1, 0.01}) {
    double h = eps / 20;
    auto sol = solve_yosida_free(A, eps, Path::constant(1.0, Vec::Constant(1, -1.0)), h);
    for (std::size_t i = 0; i < sol.grid.size(); ++i) {
      double t = sol.grid[i];
      double euler = -std::pow(1.0 + sol.h / eps, -static_cast<double>(i));
      EXPECT_NEAR(sol.x.at(t)[0], euler, 1e-12);
      EXPECT_NEAR(sol.x.at(t)[0], -std::exp(-t / eps), 0.02);
    }
  }
}

TEST(Penalized, FreeSchemeKeepsInputJumps) {
  Rng rng(3);
  Mat L = Mat::Identity(2, 2);
  L(0, 1) = 1.0;
  auto A = Operator::sum(L, ConvexSet::orthant(2, 2));
  Path m = nonnegative_start(random_step(rng, 2, 15, 1.0, 2.0));
  auto sol = solve_yosida_free(A, 0.05, m, 0.005);
  for (const auto& j : sol.jumps) {
    EXPECT_LE((j.x_right - j.x_left - j.dm).norm(), 1e-14);
    EXPECT_EQ(j.dk, Vec::Zero(2));
  }
  EXPECT_EQ(sol.kd.jumps().size(), 0u);
  for (double t : sol.grid) EXPECT_LE((sol.x.at(t) + sol.k.at(t) - m.at(t)).norm(), 1e-12);
  EXPECT_LE((sol.x.left(0.5) + sol.k.left(0.5) - m.left(0.5)).norm(), 1e-12);
}

TEST(Penalized, AmortizedProjectsOnlyLargeJumps) {
  Rng rng(4);
  auto C = ConvexSet::orthant(2, 2);
  auto A = Operator::indicator(C);
  auto P = Projection::orthogonal(C);
  Path m = nonnegative_start(random_step(rng, 2, 20, 1.0, 1.0));
  double eps = 0.6;
  auto sol = solve_amortized(A, P, eps, m, 0.01);
  std::size_t big = 0;
  for (const auto& j : sol.jumps) {
    Vec z = j.x_left + j.dm;
    if (j.dm.norm() > eps) {
      ++big;
      EXPECT_EQ(j.x_right, P(z));
      EXPECT_EQ(j.dk, z - P(z));
    } else {
      EXPECT_EQ(j.x_right, z);
    }
  }
  EXPECT_GT(big, 0u);
  EXPECT_LT(big, sol.jumps.size());
  for (double t : sol.grid) EXPECT_LE((sol.x.at(t) + sol.k.at(t) - m.at(t)).norm(), 1e-12);
}

TEST(Penalized, AmortizedEqualsFreeWhenJumpsAreSmall) {
  Rng rng(5);
  auto C = ConvexSet::orthant(2, 2);
  auto A = Operator::indicator(C);
  Path m = nonnegative_start(random_step(rng, 2, 20, 1.0, 0.1));
  auto a = solve_amortized(A, Projection::orthogonal(C), 0.5, m, 0.01);
  auto f = solve_yosida_free(A, 0.5, m, 0.01);
  EXPECT_EQ(sup_distance(a.x, f.x), 0.0);
  EXPECT_EQ(sup_distance(a.k, f.k), 0.0);
}

TEST(Penalized, ConvergesToSkorokhodSolution) {
  Rng rng(6);
  auto C = ConvexSet::half_line();
  auto A = Operator::sum(Mat::Constant(1, 1, 1.0), C);
  auto P = Projection::orthogonal(C);
  Path m = nonnegative_start(random_step(rng, 1, 10, 1.0, 2.0));
  SolverConfig cfg;
  cfg.samples_per_interval = 2;
  auto rows = convergence_study(A, P, m, {0.1, 0.01, 0.001}, 0.1, cfg, 200);
  ASSERT_EQ(rows.size(), 3u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].err_jeps_x, rows[i - 1].err_jeps_x);
    EXPECT_LT(rows[i].err_amortized, rows[i - 1].err_amortized + 1e-12);
    EXPECT_LT(rows[i].int_aeps, rows[i - 1].int_aeps);
  }
  for (const auto& r : rows) EXPECT_GE(r.bound_margin, 0.0);
}

TEST(Penalized, ConstantInputStudyShrinks) {
  auto A = Operator::indicator(ConvexSet::half_line());
  auto rows = constant_input_study(A, Vec::Constant(1, -1.0), 1.0, {0.1, 0.01, 0.001}, 0.05, 0.05);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i].sup_after, rows[i - 1].sup_after);
    EXPECT_LT(rows[i].l2, rows[i - 1].l2);
  }
  // closed form: int_0^1 e^{-2t/eps} dt = eps / 2 (1 - e^{-2/eps})
  EXPECT_NEAR(rows[1].l2, std::sqrt(0.005), 2e-3);
}

TEST(Penalized, RejectsBadParameters) {
  auto C = ConvexSet::half_line();
  auto A = Operator::indicator(C);
  Path m = Path::constant(1.0, Vec::Ones(1));
  EXPECT_THROW(solve_yosida_free(A, 0.0, m, 0.1), InvalidInput);
  EXPECT_THROW(solve_yosida_free(A, 0.1, m, -1.0), InvalidInput);
  EXPECT_THROW(solve_amortized(A, Projection::elastic(C, 0.5), 0.1, m, 0.01), InvalidInput);
}
