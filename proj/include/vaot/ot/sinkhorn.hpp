#pragma once

#include <limits>
#include <optional>

#include "vaot/ot/problem.hpp"

namespace vaot::ot {

struct SinkhornOptions {
  int max_iters = 50;
  double tol = 1e-9;
  // Damping exponents lambda / (lambda + eps) of the row and column updates;
  // 1 enforces the marginal exactly, 0 leaves it free.
  double row_exponent = 1.0;
  double col_exponent = 1.0;
};

/// Dual potentials in log space: log T = f 1' + log K + 1 g'.
struct LogPotentials {
  Vector f;
  Vector g;
};

struct SinkhornResult {
  Coupling plan;
  LogPotentials potentials;
  int iterations = 0;
  bool converged = false;
  double marginal_error = 0.0;  // |T1 - p|_1 + |T'1 - q|_1 over the enforced marginals
};

namespace detail {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// out_i = log sum_j exp(log_k(i, j) + g_j)
inline void row_logsumexp(const Matrix& log_k, const Vector& g, Vector& out) {
  const Index n = log_k.rows();
  const Index m = log_k.cols();
  Vector mx = Vector::Constant(n, kNegInf);
  for (Index j = 0; j < m; ++j) mx = mx.cwiseMax((log_k.col(j).array() + g[j]).matrix());
  Vector acc = Vector::Zero(n);
  const Vector shift = mx.unaryExpr([](double v) { return std::isfinite(v) ? v : 0.0; });
  for (Index j = 0; j < m; ++j) acc.array() += (log_k.col(j).array() + g[j] - shift.array()).exp();
  out = shift.array() + acc.array().log();
}

// out_j = log sum_i exp(log_k(i, j) + f_i)
inline void col_logsumexp(const Matrix& log_k, const Vector& f, Vector& out) {
  const Index m = log_k.cols();
  out.resize(m);
  for (Index j = 0; j < m; ++j) {
    const auto z = (log_k.col(j) + f).array();
    const double mx = z.maxCoeff();
    if (!std::isfinite(mx)) {
      out[j] = mx;
      continue;
    }
    out[j] = mx + std::log((z - mx).exp().sum());
  }
}

inline Vector safe_log(const Vector& v) {
  return v.unaryExpr([](double x) { return x > 0.0 ? std::log(x) : kNegInf; });
}

inline Coupling plan_from(const Matrix& log_k, const LogPotentials& pot) {
  Coupling t(log_k.rows(), log_k.cols());
  for (Index j = 0; j < log_k.cols(); ++j) t.col(j) = (log_k.col(j) + pot.f).array() + pot.g[j];
  // The vectorized exp does not map -inf to an exact zero.
  return (t.array() == kNegInf).select(0.0, t.array().exp()).matrix();
}

inline double damping_exponent(double lambda, double epsilon) {
  if (lambda == MarginalPenalty::kHard) return 1.0;
  return lambda / (lambda + epsilon);
}

}  // namespace detail

/// Log-domain Sinkhorn scaling of exp(log_k) towards marginals p and q.
///
/// With both exponents equal to 1 the iteration stops once the row marginal
/// error drops below tol (columns are exact after each sweep). Otherwise it
/// stops once the sup-norm change of the potentials drops below tol.
inline SinkhornResult sinkhorn_log(const Matrix& log_k, const Histogram& p, const Histogram& q,
                                   const SinkhornOptions& opts, const LogPotentials* warm = nullptr) {
  const Index n = log_k.rows();
  const Index m = log_k.cols();
  if (p.size() != n || q.size() != m) {
    throw DimensionError("sinkhorn: kernel " + shape_string(log_k) + " vs marginals " + std::to_string(p.size()) +
                         "/" + std::to_string(q.size()));
  }
  if (log_k.array().isNaN().any() || (log_k.array() == std::numeric_limits<double>::infinity()).any()) {
    throw DomainError("sinkhorn: log kernel has NaN or +inf entries");
  }
  const Vector log_p = detail::safe_log(p.weights());
  const Vector log_q = detail::safe_log(q.weights());
  const bool exact = opts.row_exponent == 1.0 && opts.col_exponent == 1.0;

  SinkhornResult res;
  LogPotentials& pot = res.potentials;
  if (warm != nullptr && warm->f.size() == n && warm->g.size() == m) {
    pot = *warm;
  } else {
    pot.f = Vector::Zero(n);
    pot.g = Vector::Zero(m);
  }

  Vector row_lse(n), col_lse(m);
  for (int it = 0; it < opts.max_iters; ++it) {
    detail::row_logsumexp(log_k, pot.g, row_lse);
    if (exact) {
      const double err = ((pot.f + row_lse).array().exp() - p.weights().array()).abs().sum();
      if (err < opts.tol) {
        res.converged = true;
        break;
      }
    }
    const Vector f_new = opts.row_exponent == 0.0 ? Vector::Zero(n) : Vector(opts.row_exponent * (log_p - row_lse));
    detail::col_logsumexp(log_k, f_new, col_lse);
    const Vector g_new = opts.col_exponent == 0.0 ? Vector::Zero(m) : Vector(opts.col_exponent * (log_q - col_lse));
    ++res.iterations;
    double delta = 0.0;
    if (!exact) {
      auto finite_gap = [](const Vector& a, const Vector& b) {
        double d = 0.0;
        for (Index i = 0; i < a.size(); ++i)
          if (std::isfinite(a[i]) || std::isfinite(b[i])) d = std::max(d, std::abs(a[i] - b[i]));
        return d;
      };
      delta = std::max(finite_gap(f_new, pot.f), finite_gap(g_new, pot.g));
    }
    pot.f = f_new;
    pot.g = g_new;
    if (!exact && delta < opts.tol) {
      res.converged = true;
      break;
    }
  }

  res.plan = detail::plan_from(log_k, pot);
  if (opts.row_exponent == 1.0) res.marginal_error += (res.plan.rowwise().sum() - p.weights()).cwiseAbs().sum();
  if (opts.col_exponent == 1.0) {
    res.marginal_error += (res.plan.colwise().sum().transpose() - q.weights()).cwiseAbs().sum();
  }
  return res;
}

inline Matrix checked_log_kernel(const Matrix& kernel) {
  for (Index j = 0; j < kernel.cols(); ++j) {
    for (Index i = 0; i < kernel.rows(); ++i) {
      if (!(kernel(i, j) > 0.0) || !std::isfinite(kernel(i, j))) {
        throw DomainError("kernel entry (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") must be finite and > 0");
      }
    }
  }
  return kernel.array().log().matrix();
}

/// KL projection of a positive kernel onto the transport polytope of (p, q).
inline SinkhornResult sinkhorn_project(const Matrix& kernel, const Histogram& p, const Histogram& q, int iters,
                                       double tol) {
  return sinkhorn_log(checked_log_kernel(kernel), p, q, SinkhornOptions{iters, tol, 1.0, 1.0});
}

/// Unbalanced scaling: each update is damped by lambda / (lambda + epsilon).
/// lambda = 0 leaves the kernel untouched; lambda -> infinity recovers sinkhorn_project.
inline SinkhornResult unbalanced_scale(const Matrix& kernel, const Histogram& p, const Histogram& q,
                                       double lambda_p, double lambda_q, double epsilon, int iters,
                                       double tol = 1e-12) {
  if (!(lambda_p >= 0.0) || !(lambda_q >= 0.0)) throw ConfigError("unbalanced_scale: lambda must be >= 0");
  if (!(epsilon > 0.0)) throw ConfigError("unbalanced_scale: epsilon must be > 0");
  const SinkhornOptions opts{iters, tol, detail::damping_exponent(lambda_p, epsilon),
                             detail::damping_exponent(lambda_q, epsilon)};
  return sinkhorn_log(checked_log_kernel(kernel), p, q, opts);
}

}  // namespace vaot::ot
