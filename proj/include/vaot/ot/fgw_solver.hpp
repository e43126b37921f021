#pragma once

#include <vector>

#include "vaot/ot/objectives.hpp"
#include "vaot/ot/sinkhorn.hpp"

namespace vaot::ot {

struct SolveReport {
  std::vector<double> objectives;  // entropic FGW objective after each outer iteration
  int iterations = 0;
  bool converged = false;
  double final_change = 0.0;    // L1 change of the coupling in the last iteration
  double marginal_error = 0.0;  // over the exactly enforced marginals
  int sinkhorn_iterations = 0;  // summed over outer iterations
};

struct FgwSolution {
  Coupling plan;
  SolveReport report;
};

/// Entropic FGW objective with optional KL marginal penalties:
/// FGW(T) - eps H(T) + lambda_p KL(T1 | p) + lambda_q KL(T'1 | q).
inline double entropic_fgw_objective(const CostBundle& bundle, const Coupling& plan, double alpha, double epsilon,
                                     const Histogram& p, const Histogram& q, const MarginalPenalty& penalty) {
  double value = fgw_objective(bundle, plan, alpha) - epsilon * entropy(plan);
  if (penalty.rows != MarginalPenalty::kHard) {
    value += penalty.rows * generalized_kl(plan.rowwise().sum(), p.weights());
  }
  if (penalty.cols != MarginalPenalty::kHard) {
    value += penalty.cols * generalized_kl(plan.colwise().sum().transpose(), q.weights());
  }
  return value;
}

/// Projected mirror descent in KL geometry on the entropic FGW objective.
///
/// Each outer step forms the kernel
///   log K = (1 - s) log T^k - s G(T^k) / eps,   G = (1 - alpha) C + 2 alpha Cx T^k Cy,
/// and projects it with a warm-started log-domain Sinkhorn whose marginal
/// damping uses the effective entropic weight eps / s. With s = 1 this is the
/// classical entropic GW fixed point iteration; s < 1 adds a KL proximal term
/// towards the previous iterate. Starts from p q' and stops once the L1 change
/// of T drops below cfg.tol.
inline FgwSolution solve_fgw(const CostBundle& bundle, const Histogram& p, const Histogram& q,
                             const SolverConfig& cfg, const MarginalPenalty& penalty) {
  cfg.validate();
  bundle.validate();
  if (p.size() != bundle.rows() || q.size() != bundle.cols()) {
    throw DimensionError("solve_fgw: cost " + shape_string(bundle.kot_cost) + " vs marginals " +
                         std::to_string(p.size()) + "/" + std::to_string(q.size()));
  }
  const double s = cfg.step_size;
  const double eps_eff = cfg.epsilon / s;
  const SinkhornOptions sk{cfg.inner_sinkhorn_iters, cfg.sinkhorn_tol, detail::damping_exponent(penalty.rows, eps_eff),
                           detail::damping_exponent(penalty.cols, eps_eff)};

  FgwSolution out;
  Coupling plan = p.weights() * q.weights().transpose();
  Matrix log_plan = plan.array().log().matrix();
  LogPotentials warm;
  bool have_warm = false;
  Matrix last_kernel;
  bool last_converged = true;

  for (int k = 1; k <= cfg.outer_iters; ++k) {
    const Matrix grad = gw_gradient(bundle, plan, cfg.alpha);
    Matrix log_k = (-s / cfg.epsilon) * grad;
    if (s < 1.0) log_k += (1.0 - s) * log_plan;

    SinkhornResult sr = sinkhorn_log(log_k, p, q, sk, have_warm ? &warm : nullptr);
    if (!all_finite(sr.plan)) {
      throw NumericalError("solve_fgw: non-finite coupling", k);
    }
    out.report.sinkhorn_iterations += sr.iterations;
    last_converged = sr.converged;
    const double change = (sr.plan - plan).cwiseAbs().sum();

    plan = std::move(sr.plan);
    for (Index j = 0; j < log_k.cols(); ++j) {
      log_plan.col(j) = (log_k.col(j) + sr.potentials.f).array() + sr.potentials.g[j];
    }
    warm = std::move(sr.potentials);
    have_warm = true;
    last_kernel = std::move(log_k);

    const double obj = entropic_fgw_objective(bundle, plan, cfg.alpha, cfg.epsilon, p, q, penalty);
    if (!std::isfinite(obj)) throw NumericalError("solve_fgw: non-finite objective", k);
    out.report.objectives.push_back(obj);
    out.report.iterations = k;
    out.report.final_change = change;
    out.report.marginal_error = sr.marginal_error;
    if (change < cfg.tol) {
      out.report.converged = true;
      break;
    }
  }
  if (!last_converged && cfg.final_sinkhorn_iters > 0) {
    // Finish the projection of the last kernel so hard marginals hold.
    SinkhornOptions finish = sk;
    finish.max_iters = cfg.final_sinkhorn_iters;
    SinkhornResult sr = sinkhorn_log(last_kernel, p, q, finish, &warm);
    out.report.sinkhorn_iterations += sr.iterations;
    out.report.marginal_error = sr.marginal_error;
    plan = std::move(sr.plan);
  }
  out.plan = std::move(plan);
  return out;
}

/// Marginal handling taken from cfg.marginal_mode.
inline FgwSolution solve_fgw(const CostBundle& bundle, const Histogram& p, const Histogram& q,
                             const SolverConfig& cfg) {
  return solve_fgw(bundle, p, q, cfg, cfg.penalty());
}

}  // namespace vaot::ot
