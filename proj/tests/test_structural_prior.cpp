#include <gtest/gtest.h>

#include <random>

#include "oracles/oracles.hpp"
#include "vaot/ot/structural_prior.hpp"

using vaot::Index;
using vaot::Matrix;
using vaot::ot::StructuralPrior;

namespace {

Matrix dense_band(Index size, Index active, Index width, double diag, double band, double outside) {
  Matrix m = Matrix::Zero(size, size);
  for (Index i = 0; i < active; ++i) {
    for (Index k = 0; k < active; ++k) {
      const Index d = std::abs(i - k);
      m(i, k) = d == 0 ? diag : (d <= width ? band : outside);
    }
  }
  return m;
}

}  // namespace

TEST(StructuralPrior, BandedMatchesDenseLayout) {
  const auto p = StructuralPrior::banded(7, 6, 2, 0.5, 3.0, 1.0);
  EXPECT_TRUE(p.to_dense().isApprox(dense_band(7, 6, 2, 0.5, 3.0, 1.0), 0.0));
  EXPECT_EQ(p(6, 6), 0.0);
  EXPECT_EQ(p(0, 5), 1.0);
}

TEST(StructuralPrior, ProductsMatchDenseForAllWidths) {
  std::mt19937_64 rng(11);
  for (Index size : {1, 2, 5, 9}) {
    for (Index width = 0; width <= size; ++width) {
      for (Index active : {size, std::max<Index>(size - 1, 0)}) {
        const auto p = StructuralPrior::banded(size, active, width, 0.3, 2.0, 0.7);
        const Matrix d = p.to_dense();
        const Matrix t = oracle::random_matrix(rng, size, 4);
        const Matrix u = oracle::random_matrix(rng, 3, size);
        EXPECT_LT((p.left_apply(t) - d * t).cwiseAbs().maxCoeff(), 1e-12);
        EXPECT_LT((p.right_apply(u) - u * d).cwiseAbs().maxCoeff(), 1e-12);
      }
    }
  }
}

TEST(StructuralPrior, WidthClampedToActiveSize) {
  const auto p = StructuralPrior::banded(4, 4, 10, 0.0, 1.0, 5.0);
  EXPECT_EQ(p.band().width, 3);
}

TEST(StructuralPrior, DenseRejectsAsymmetricOrNegative) {
  Matrix a(2, 2);
  a << 0, 1, 2, 0;
  EXPECT_THROW(StructuralPrior::dense(a), vaot::DomainError);
  a << 0, -1, -1, 0;
  EXPECT_THROW(StructuralPrior::dense(a), vaot::DomainError);
  EXPECT_THROW(StructuralPrior::dense(Matrix::Zero(2, 3)), vaot::DimensionError);
}

TEST(StructuralPrior, WithVirtualAddsZeroRowAndColumn) {
  const auto p = StructuralPrior::banded(3, 3, 1, 0.0, 2.0, 1.0).with_virtual();
  ASSERT_EQ(p.size(), 4);
  const Matrix d = p.to_dense();
  EXPECT_EQ(d.row(3).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(d.col(3).cwiseAbs().sum(), 0.0);
  EXPECT_EQ(d(0, 2), 1.0);

  Matrix m(2, 2);
  m << 1, 2, 2, 1;
  const Matrix dv = StructuralPrior::dense(m).with_virtual().to_dense();
  EXPECT_EQ(dv.topLeftCorner(2, 2), m);
  EXPECT_EQ(dv(2, 2), 0.0);
}

TEST(StructuralPrior, ZeroDetection) {
  EXPECT_TRUE(StructuralPrior::zeros(5).is_zero());
  EXPECT_TRUE(StructuralPrior::banded(5, 5, 0, 0.0, 3.0, 0.0).is_zero());
  EXPECT_FALSE(StructuralPrior::banded(5, 5, 1, 0.0, 3.0, 0.0).is_zero());
  EXPECT_TRUE(StructuralPrior::banded(3, 3, 2, 0.0, 1.0, 0.0).is_zero() == false);
  EXPECT_TRUE(StructuralPrior::banded(3, 3, 2, 0.0, 0.0, 4.0).is_zero());
}
