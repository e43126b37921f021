#pragma once

#include <algorithm>
#include <variant>

#include "vaot/types.hpp"

namespace vaot::ot {

/// Symmetric, nonnegative intra-sequence cost matrix used by the GW term.
///
/// Two representations are supported. A dense matrix covers arbitrary priors.
/// The banded form covers every prior built from a radius rule: for indices
/// i, k below `active`, with d = |i - k|, the entry is `diagonal` when d == 0,
/// `band` when 1 <= d <= width and `outside` otherwise; rows and columns at
/// or above `active` (virtual frames) are zero. Products against a coupling
/// use prefix sums, so applying a banded prior costs O(size * other) whatever
/// the width.
class StructuralPrior {
 public:
  struct Band {
    Index size = 0;
    Index active = 0;
    Index width = 0;
    double diagonal = 0.0;
    double band = 0.0;
    double outside = 0.0;
  };

  StructuralPrior() = default;

  static StructuralPrior banded(Index size, Index active, Index width, double diagonal, double band,
                                double outside) {
    if (size < 0 || active < 0 || active > size || width < 0) {
      throw DimensionError("banded prior: inconsistent size/active/width");
    }
    for (double v : {diagonal, band, outside}) {
      if (!std::isfinite(v) || v < 0.0) throw DomainError("banded prior: entries must be finite and >= 0");
    }
    StructuralPrior p;
    p.repr_ = Band{size, active, std::min(width, std::max<Index>(active - 1, 0)), diagonal, band, outside};
    return p;
  }

  static StructuralPrior dense(Matrix m) {
    if (m.rows() != m.cols()) throw DimensionError("structural prior must be square, got " + shape_string(m));
    if (!all_finite(m) || (m.array() < 0.0).any()) {
      throw DomainError("structural prior entries must be finite and >= 0");
    }
    if (m.size() > 0 && (m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
      throw DomainError("structural prior must be symmetric");
    }
    StructuralPrior p;
    p.repr_ = std::move(m);
    return p;
  }

  static StructuralPrior zeros(Index size) { return banded(size, size, 0, 0.0, 0.0, 0.0); }

  bool is_banded() const noexcept { return std::holds_alternative<Band>(repr_); }
  const Band& band() const { return std::get<Band>(repr_); }

  Index size() const noexcept {
    if (const auto* b = std::get_if<Band>(&repr_)) return b->size;
    return std::get<Matrix>(repr_).rows();
  }

  double operator()(Index i, Index k) const {
    if (const auto* b = std::get_if<Band>(&repr_)) {
      if (i >= b->active || k >= b->active) return 0.0;
      const Index d = i > k ? i - k : k - i;
      if (d == 0) return b->diagonal;
      return d <= b->width ? b->band : b->outside;
    }
    return std::get<Matrix>(repr_)(i, k);
  }

  Matrix to_dense() const {
    if (const auto* m = std::get_if<Matrix>(&repr_)) return *m;
    const Index n = size();
    Matrix out(n, n);
    for (Index k = 0; k < n; ++k)
      for (Index i = 0; i < n; ++i) out(i, k) = (*this)(i, k);
    return out;
  }

  bool is_zero() const {
    if (const auto* b = std::get_if<Band>(&repr_)) {
      if (b->active == 0) return true;
      const bool has_band = b->width > 0 && b->band != 0.0;
      const bool has_outside = b->outside != 0.0 && b->active > b->width + 1;
      return b->diagonal == 0.0 && !has_band && !has_outside;
    }
    return std::get<Matrix>(repr_).isZero(0.0);
  }

  /// Same prior with one extra trailing index whose row and column are zero.
  StructuralPrior with_virtual() const {
    if (const auto* b = std::get_if<Band>(&repr_)) {
      StructuralPrior p = *this;
      std::get<Band>(p.repr_).size = b->size + 1;
      return p;
    }
    const Matrix& m = std::get<Matrix>(repr_);
    Matrix out = Matrix::Zero(m.rows() + 1, m.cols() + 1);
    out.topLeftCorner(m.rows(), m.cols()) = m;
    return dense(std::move(out));
  }

  /// this * t, with t of shape size() x m.
  Matrix left_apply(const Matrix& t) const {
    if (t.rows() != size()) {
      throw DimensionError("structural prior (" + std::to_string(size()) + ") * coupling " + shape_string(t));
    }
    if (const auto* m = std::get_if<Matrix>(&repr_)) return (*m) * t;
    const Band& b = std::get<Band>(repr_);
    Matrix out = Matrix::Zero(t.rows(), t.cols());
    if (b.active == 0) return out;
    Vector prefix(b.active + 1);
    for (Index j = 0; j < t.cols(); ++j) {
      prefix[0] = 0.0;
      for (Index k = 0; k < b.active; ++k) prefix[k + 1] = prefix[k] + t(k, j);
      const double total = prefix[b.active];
      for (Index i = 0; i < b.active; ++i) {
        const Index lo = std::max<Index>(i - b.width, 0);
        const Index hi = std::min<Index>(i + b.width, b.active - 1);
        const double self = t(i, j);
        const double window = prefix[hi + 1] - prefix[lo] - self;
        out(i, j) = b.outside * total + (b.band - b.outside) * window + (b.diagonal - b.outside) * self;
      }
    }
    return out;
  }

  /// t * this, with t of shape n x size(). Relies on symmetry.
  Matrix right_apply(const Matrix& t) const {
    if (t.cols() != size()) {
      throw DimensionError("coupling " + shape_string(t) + " * structural prior (" + std::to_string(size()) + ")");
    }
    if (const auto* m = std::get_if<Matrix>(&repr_)) return t * (*m);
    const Band& b = std::get<Band>(repr_);
    Matrix out = Matrix::Zero(t.rows(), t.cols());
    if (b.active == 0) return out;
    // Column-wise prefix sums over the active columns of t.
    Matrix prefix(t.rows(), b.active + 1);
    prefix.col(0).setZero();
    for (Index l = 0; l < b.active; ++l) prefix.col(l + 1) = prefix.col(l) + t.col(l);
    const Vector total = prefix.col(b.active);
    for (Index j = 0; j < b.active; ++j) {
      const Index lo = std::max<Index>(j - b.width, 0);
      const Index hi = std::min<Index>(j + b.width, b.active - 1);
      out.col(j) = b.outside * total + (b.band - b.outside) * (prefix.col(hi + 1) - prefix.col(lo) - t.col(j)) +
                   (b.diagonal - b.outside) * t.col(j);
    }
    return out;
  }

 private:
  std::variant<Band, Matrix> repr_ = Band{};
};

}  // namespace vaot::ot
