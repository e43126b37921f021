#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "vaot/align.hpp"

using namespace vaot;

namespace {

// Smooth trajectory on the unit circle in the first two coordinates plus a
// fixed offset, so consecutive frames are close and distant frames differ.
FeatureSequence monotonic_sequence(Index n, Index d) {
  FeatureSequence x = Matrix::Zero(n, d);
  for (Index i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(n - 1) * 3.0;
    x(i, 0) = std::cos(t);
    x(i, 1) = std::sin(t);
    x(i, 2) = 0.2;
  }
  return x;
}

}  // namespace

TEST(AugmentedKotCost, RhoZeroIsVisualCost) {
  std::mt19937_64 rng(41);
  const Matrix x = oracle::random_matrix(rng, 4, 3, -1, 1), y = oracle::random_matrix(rng, 5, 3, -1, 1);
  EXPECT_EQ(augmented_kot_cost(x, y, 0.0), visual_cost(x, y));
  const Matrix big = augmented_kot_cost(x, x, 1e3);
  for (Index i = 0; i < 4; ++i) {
    Index arg;
    big.row(i).minCoeff(&arg);
    EXPECT_EQ(arg, i);
  }
}

TEST(PseudoLabels, IdenticalSequencesGiveIdentity) {
  AlignProblem prob;
  prob.x = monotonic_sequence(40, 4);
  prob.y = prob.x;
  prob.prior.radius = 0.1;
  const AlignTargets t = compute_pseudo_labels(prob);
  ASSERT_EQ(t.plan.rows(), 41);
  for (Index i = 0; i < 40; ++i) EXPECT_EQ(t.matches.rows[static_cast<std::size_t>(i)], std::optional<Index>(i));
  EXPECT_EQ(t.real_block, strip_virtual(t.plan));
}

TEST(PseudoLabels, OutlierGoesToVirtualFrame) {
  AlignProblem prob;
  prob.x = monotonic_sequence(30, 4);
  prob.y = prob.x;
  prob.x.row(12) << 0.0, 0.0, 0.0, 1.0;  // orthogonal to every frame of Y
  const AlignTargets t = compute_pseudo_labels(prob);
  EXPECT_FALSE(t.matches.rows[12].has_value());
  EXPECT_FALSE(t.row_keep[12]);
}

TEST(PseudoLabels, ReversedCopyGivesAntiDiagonal) {
  AlignProblem prob;
  prob.x = monotonic_sequence(20, 4);
  prob.y = prob.x.colwise().reverse();
  prob.solver.alpha = 0.0;
  prob.prior.rho = 0.0;
  prob.solver.epsilon = 0.005;
  prob.align.use_virtual = false;
  const AlignTargets t = compute_pseudo_labels(prob);
  ASSERT_EQ(t.plan.rows(), 20);
  for (Index i = 0; i < 20; ++i) EXPECT_EQ(t.matches.rows[static_cast<std::size_t>(i)], std::optional<Index>(19 - i));
}

TEST(Similarities, SoftmaxValuesAndLimits) {
  const Matrix x = Matrix::Identity(2, 2);
  const Matrix p = normalized_similarities(x, x, 1.0);
  EXPECT_NEAR(p(0, 0), 0.7310585786, 1e-9);
  EXPECT_NEAR(p(0, 1), 0.2689414214, 1e-9);
  std::mt19937_64 rng(42);
  const Matrix a = oracle::random_matrix(rng, 5, 3, -1, 1), b = oracle::random_matrix(rng, 6, 3, -1, 1);
  const Matrix flat = normalized_similarities(a, b, 1e6);
  EXPECT_LT((flat.array() - 1.0 / 6).abs().maxCoeff(), 1e-5);
  const Matrix sharp = normalized_similarities(a, b, 1e-4);
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(sharp.row(i).sum(), 1.0, 1e-9);
    Index arg;
    (a.row(i) * b.transpose()).maxCoeff(&arg);
    EXPECT_NEAR(sharp(i, arg), 1.0, 1e-6);
  }
  EXPECT_THROW(normalized_similarities(a, b, 0.0), ConfigError);
}

TEST(AlignmentLoss, HandValues) {
  const Matrix t = Matrix::Identity(2, 2);
  const Matrix p = normalized_similarities(t, t, 1.0);
  EXPECT_NEAR(alignment_loss(p, t), -2.0 * std::log(0.7310585786300049), 1e-12);
  EXPECT_EQ(alignment_loss(Matrix::Identity(2, 2), t), 0.0);
  EXPECT_NEAR(alignment_loss(Matrix::Constant(3, 4, 0.25), Matrix::Constant(3, 4, 1.0 / 12)), std::log(4.0), 1e-12);
  // Floor guard: a zero probability under positive target mass stays finite.
  Matrix z = Matrix::Identity(2, 2);
  EXPECT_NEAR(alignment_loss(Matrix::Zero(2, 2), z), -2.0 * std::log(kProbabilityFloor), 1e-9);
}

TEST(AlignmentLoss, VirtualExclusionDropsExactlyTheMaskedTerms) {
  std::mt19937_64 rng(43);
  const Matrix p = normalized_similarities(oracle::random_matrix(rng, 4, 3), oracle::random_matrix(rng, 5, 3), 0.5);
  const Matrix t = oracle::random_matrix(rng, 4, 5) / 20.0;
  const std::vector<bool> rows{true, false, true, true};
  const std::vector<bool> cols{true, true, true, false, true};
  double excluded = 0.0;
  for (Index i = 0; i < 4; ++i)
    for (Index j = 0; j < 5; ++j)
      if (!rows[static_cast<std::size_t>(i)] || !cols[static_cast<std::size_t>(j)])
        excluded -= t(i, j) * std::log(p(i, j));
  EXPECT_NEAR(alignment_loss(p, t) - alignment_loss(p, t, &rows, &cols), excluded, 1e-12);
}

TEST(AlignmentLossGrad, MatchesFiniteDifferences) {
  std::mt19937_64 rng(44);
  for (double tau : {0.1, 2.0}) {
    for (int trial = 0; trial < 3; ++trial) {
      const Matrix x = oracle::random_matrix(rng, 5, 4, -1, 1);
      const Matrix y = oracle::random_matrix(rng, 6, 4, -1, 1);
      const Matrix t = oracle::random_matrix(rng, 5, 6) / 30.0;
      const std::vector<bool> rows{true, true, false, true, true};
      auto loss_x = [&](const Matrix& xx) { return alignment_loss(normalized_similarities(xx, y, tau), t, &rows); };
      auto loss_y = [&](const Matrix& yy) { return alignment_loss(normalized_similarities(x, yy, tau), t, &rows); };
      const auto [gx, gy] = alignment_loss_grad(normalized_similarities(x, y, tau), t, x, y, tau, &rows);
      EXPECT_LT(oracle::relative_error(gx, oracle::numeric_gradient(loss_x, x)), 1e-4);
      EXPECT_LT(oracle::relative_error(gy, oracle::numeric_gradient(loss_y, y)), 1e-4);
    }
  }
}

TEST(AlignmentLossGrad, VanishesWhenPredictionMatchesRowNormalizedTargets) {
  std::mt19937_64 rng(45);
  const Matrix x = oracle::random_matrix(rng, 4, 3, -1, 1), y = oracle::random_matrix(rng, 5, 3, -1, 1);
  const Matrix p = normalized_similarities(x, y, 0.1);
  const Matrix t = p / 4.0;  // every row carries mass 1/4 distributed as P
  const auto [gx, gy] = alignment_loss_grad(p, t, x, y, 0.1);
  EXPECT_LT(gx.norm() + gy.norm(), 1e-8);
}

TEST(AlignPair, LossIsNonNegativeAndSimilaritiesStochastic) {
  AlignProblem prob;
  prob.x = monotonic_sequence(25, 4);
  prob.y = monotonic_sequence(31, 4);
  const AlignResult r = align_pair(prob);
  EXPECT_GE(r.loss, 0.0);
  EXPECT_LT((r.similarities.rowwise().sum().array() - 1.0).abs().maxCoeff(), 1e-9);
}
