#pragma once

#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "vaot/error.hpp"

namespace vaot {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Soft assignment between two index sets; entry (i, j) is the mass moved from i to j.
using Coupling = Matrix;

/// One sequence of frame embeddings, one frame per row (N x D).
using FeatureSequence = Matrix;

inline std::string shape_string(const Matrix& m) {
  return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(what) + ": shape mismatch " + shape_string(a) + " vs " +
                         shape_string(b));
  }
}

inline bool all_finite(const Matrix& m) { return m.array().isFinite().all(); }

/// Probability mass over a finite support.
class Histogram {
 public:
  Histogram() = default;

  explicit Histogram(Vector weights) : weights_(std::move(weights)) {
    for (Index i = 0; i < weights_.size(); ++i) {
      if (!(weights_[i] >= 0.0) || !std::isfinite(weights_[i])) {
        throw DomainError("histogram entry " + std::to_string(i) + " is negative or not finite");
      }
    }
  }

  static Histogram uniform(Index n) {
    if (n < 1) throw DimensionError("histogram needs at least one support element");
    return Histogram(Vector::Constant(n, 1.0 / static_cast<double>(n)));
  }

  const Vector& weights() const noexcept { return weights_; }
  Index size() const noexcept { return weights_.size(); }
  double operator[](Index i) const { return weights_[i]; }
  double mass() const { return weights_.sum(); }

  bool is_normalized(double tol = 1e-9) const { return std::abs(mass() - 1.0) <= tol; }

 private:
  Vector weights_;
};

/// Validates a feature sequence: at least one frame, finite entries.
inline void validate_sequence(const FeatureSequence& x, const char* name) {
  if (x.rows() < 1 || x.cols() < 1) {
    throw DimensionError(std::string(name) + ": sequence must have at least one frame and one dimension");
  }
  if (!all_finite(x)) throw DomainError(std::string(name) + ": non-finite feature value");
}

}  // namespace vaot
