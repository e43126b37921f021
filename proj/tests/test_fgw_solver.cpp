#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "vaot/ot/fgw_solver.hpp"

using namespace vaot;
using namespace vaot::ot;

namespace {

CostBundle random_bundle(std::mt19937_64& rng, Index n, Index m) {
  return CostBundle{oracle::random_matrix(rng, n, m),
                    StructuralPrior::banded(n, n, std::max<Index>(n / 10, 1), 0.0, 10.0, 0.0),
                    StructuralPrior::banded(m, m, std::max<Index>(m / 10, 1), 1.0, 0.0, 1.0)};
}

}  // namespace

TEST(SolveFgw, KotLimitMatchesReferenceSinkhorn) {
  std::mt19937_64 rng(31);
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.tol = 1e-10;
  cfg.outer_iters = 80;
  for (int trial = 0; trial < 5; ++trial) {
    const Index n = 3 + trial * 7;
    const Index m = 5 + trial * 5;
    const CostBundle b = random_bundle(rng, n, m);
    const Vector p = oracle::random_histogram(rng, n);
    const Vector q = oracle::random_histogram(rng, m);
    const auto sol = solve_fgw(b, Histogram(p), Histogram(q), cfg);
    EXPECT_LT((sol.plan - oracle::sinkhorn(b.kot_cost, p, q, cfg.epsilon)).cwiseAbs().sum(), 1e-6);
    EXPECT_TRUE(sol.report.converged);
  }
}

TEST(SolveFgw, FullStepReachesKotInTwoIterations) {
  std::mt19937_64 rng(32);
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.step_size = 1.0;
  cfg.inner_sinkhorn_iters = 2000;
  cfg.sinkhorn_tol = 1e-13;
  const CostBundle b = random_bundle(rng, 6, 4);
  const auto sol = solve_fgw(b, Histogram::uniform(6), Histogram::uniform(4), cfg);
  EXPECT_LE(sol.report.iterations, 2);
  EXPECT_LT((sol.plan - oracle::sinkhorn(b.kot_cost, Vector::Constant(6, 1.0 / 6), Vector::Constant(4, 0.25),
                                         cfg.epsilon))
                .cwiseAbs()
                .sum(),
            1e-9);
}

TEST(SolveFgw, SmallEpsilonApproachesLinearProgram) {
  std::mt19937_64 rng(33);
  SolverConfig cfg;
  cfg.alpha = 0.0;
  cfg.epsilon = 1e-3;
  cfg.outer_iters = 60;
  cfg.inner_sinkhorn_iters = 500;
  for (int trial = 0; trial < 4; ++trial) {
    const Index n = 2 + trial % 3;
    const Index m = 5 - trial % 2;
    const CostBundle b = random_bundle(rng, n, m);
    const Vector p = oracle::random_histogram(rng, n);
    const Vector q = oracle::random_histogram(rng, m);
    const auto sol = solve_fgw(b, Histogram(p), Histogram(q), cfg);
    EXPECT_NEAR(kot_objective(b.kot_cost, sol.plan), oracle::transport_lp(b.kot_cost, p, q), 1e-2);
  }
}

TEST(SolveFgw, BalancedMarginalsObjectiveDescentAndDeterminism) {
  std::mt19937_64 rng(34);
  for (int trial = 0; trial < 5; ++trial) {
    const CostBundle b = random_bundle(rng, 30, 25);
    const Histogram p = Histogram::uniform(30), q = Histogram::uniform(25);
    SolverConfig cfg;
    const auto sol = solve_fgw(b, p, q, cfg);
    const double err = (sol.plan.rowwise().sum() - p.weights()).cwiseAbs().sum() +
                       (sol.plan.colwise().sum().transpose() - q.weights()).cwiseAbs().sum();
    EXPECT_LT(err, 1e-5);
    EXPECT_TRUE((sol.plan.array() >= 0.0).all());
    const auto& obj = sol.report.objectives;
    for (std::size_t k = 1; k < obj.size(); ++k) EXPECT_LE(obj[k], obj[k - 1] + 1e-7) << "iteration " << k;
    const auto again = solve_fgw(b, p, q, cfg);
    EXPECT_TRUE(again.plan == sol.plan);
  }
}

TEST(SolveFgw, UnbalancedRelaxesMarginals) {
  std::mt19937_64 rng(35);
  const CostBundle b = random_bundle(rng, 12, 9);
  SolverConfig cfg;
  cfg.marginal_mode = MarginalMode::FullUnbalanced;
  const auto sol = solve_fgw(b, Histogram::uniform(12), Histogram::uniform(9), cfg);
  EXPECT_TRUE(sol.plan.allFinite());
  EXPECT_GT((sol.plan.rowwise().sum().array() - 1.0 / 12).abs().maxCoeff(), 1e-6);

  const auto partial = solve_fgw(b, Histogram::uniform(12), Histogram::uniform(9), SolverConfig{},
                                 MarginalPenalty{MarginalPenalty::kHard, 0.05});
  EXPECT_LT((partial.plan.rowwise().sum().array() - 1.0 / 12).abs().maxCoeff(), 1e-5);
}

TEST(SolveFgw, RejectsMismatchedInputs) {
  std::mt19937_64 rng(36);
  const CostBundle b = random_bundle(rng, 4, 3);
  EXPECT_THROW(solve_fgw(b, Histogram::uniform(3), Histogram::uniform(3), SolverConfig{}), DimensionError);
  SolverConfig bad;
  bad.epsilon = 0.0;
  EXPECT_THROW(solve_fgw(b, Histogram::uniform(4), Histogram::uniform(3), bad), ConfigError);
}
