#pragma once

#include "vaot/ot/problem.hpp"

namespace vaot::ot {

/// <C, T>.
inline double kot_objective(const Matrix& cost, const Coupling& plan) {
  require_same_shape(cost, plan, "kot_objective");
  return cost.cwiseProduct(plan).sum();
}

/// <Cx T Cy, T>, the factorized GW objective for L(a, b) = ab.
inline double gw_objective(const StructuralPrior& cx, const StructuralPrior& cy, const Coupling& plan) {
  if (cx.size() != plan.rows() || cy.size() != plan.cols()) {
    throw DimensionError("gw_objective: priors " + std::to_string(cx.size()) + "/" + std::to_string(cy.size()) +
                         " vs coupling " + shape_string(plan));
  }
  return cx.left_apply(cy.right_apply(plan)).cwiseProduct(plan).sum();
}

inline double gw_objective(const Matrix& cx, const Matrix& cy, const Coupling& plan) {
  if (cx.rows() != plan.rows() || cx.cols() != plan.rows() || cy.rows() != plan.cols() ||
      cy.cols() != plan.cols()) {
    throw DimensionError("gw_objective: priors " + shape_string(cx) + "/" + shape_string(cy) + " vs coupling " +
                         shape_string(plan));
  }
  return (cx * plan * cy).cwiseProduct(plan).sum();
}

inline void check_alpha(double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
}

/// (1 - alpha) <C, T> + alpha <Cx T Cy, T>.
inline double fgw_objective(const CostBundle& bundle, const Coupling& plan, double alpha) {
  check_alpha(alpha);
  const double kot = kot_objective(bundle.kot_cost, plan);
  if (alpha == 0.0) return kot;
  const double gw = gw_objective(bundle.struct_x, bundle.struct_y, plan);
  if (alpha == 1.0) return gw;
  return (1.0 - alpha) * kot + alpha * gw;
}

/// H(T) = -sum T log T with 0 log 0 = 0.
inline double entropy(const Coupling& plan) {
  double h = 0.0;
  for (Index j = 0; j < plan.cols(); ++j) {
    for (Index i = 0; i < plan.rows(); ++i) {
      const double t = plan(i, j);
      if (t < 0.0 || std::isnan(t)) {
        throw DomainError("entropy: negative entry at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
      if (t > 0.0) h -= t * std::log(t);
    }
  }
  return h;
}

/// Generalized KL divergence sum a log(a / b) - a + b.
inline double generalized_kl(const Vector& a, const Vector& b) {
  double kl = 0.0;
  for (Index i = 0; i < a.size(); ++i) {
    if (a[i] > 0.0) kl += a[i] * std::log(a[i] / b[i]);
    kl += b[i] - a[i];
  }
  return kl;
}

/// Gradient of the FGW objective: (1 - alpha) C + 2 alpha Cx T Cy (priors symmetric).
inline Matrix gw_gradient(const CostBundle& bundle, const Coupling& plan, double alpha) {
  check_alpha(alpha);
  require_same_shape(bundle.kot_cost, plan, "gw_gradient");
  if (alpha == 0.0) return bundle.kot_cost;
  Matrix grad = bundle.struct_x.left_apply(bundle.struct_y.right_apply(plan));
  grad *= 2.0 * alpha;
  grad += (1.0 - alpha) * bundle.kot_cost;
  return grad;
}

}  // namespace vaot::ot
