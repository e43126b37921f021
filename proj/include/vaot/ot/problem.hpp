#pragma once

#include <limits>
#include <string>

#include "vaot/ot/structural_prior.hpp"
#include "vaot/types.hpp"

namespace vaot::ot {

/// Linear (KOT) cost plus the two structural priors of one transport instance.
struct CostBundle {
  Matrix kot_cost;           // n x m
  StructuralPrior struct_x;  // n x n
  StructuralPrior struct_y;  // m x m

  Index rows() const noexcept { return kot_cost.rows(); }
  Index cols() const noexcept { return kot_cost.cols(); }

  void validate() const {
    if (struct_x.size() != kot_cost.rows() || struct_y.size() != kot_cost.cols()) {
      throw DimensionError("cost bundle: kot cost " + shape_string(kot_cost) + " vs priors " +
                           std::to_string(struct_x.size()) + "/" + std::to_string(struct_y.size()));
    }
    if (!all_finite(kot_cost)) throw DomainError("cost bundle: kot cost has non-finite entries");
  }
};

enum class MarginalMode { Balanced, FullUnbalanced };

inline const char* to_string(MarginalMode m) {
  return m == MarginalMode::Balanced ? "balanced" : "full-unbalanced";
}

inline MarginalMode parse_marginal_mode(const std::string& s) {
  if (s == "balanced" || s == "Balanced") return MarginalMode::Balanced;
  if (s == "full-unbalanced" || s == "FullUnbalanced" || s == "full_unbalanced") return MarginalMode::FullUnbalanced;
  throw ConfigError("unknown marginal mode '" + s + "' (expected balanced|full-unbalanced)");
}

/// KL penalty weights on the row and column marginals; infinity means the
/// marginal is enforced exactly.
struct MarginalPenalty {
  static constexpr double kHard = std::numeric_limits<double>::infinity();
  double rows = kHard;
  double cols = kHard;

  bool balanced() const noexcept { return rows == kHard && cols == kHard; }
};

struct SolverConfig {
  double alpha = 0.3;
  double epsilon = 0.07;
  double step_size = 0.5;
  int outer_iters = 25;
  int inner_sinkhorn_iters = 50;
  double tol = 1e-6;
  double sinkhorn_tol = 1e-9;
  int final_sinkhorn_iters = 1000;  // extra scaling of the last kernel when the inner loop stopped early
  MarginalMode marginal_mode = MarginalMode::Balanced;
  double lambda_p = 0.05;
  double lambda_q = 0.05;

  void validate() const {
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("solver.alpha must lie in [0, 1]");
    if (!(epsilon > 0.0)) throw ConfigError("solver.epsilon must be > 0");
    if (!(step_size > 0.0 && step_size <= 1.0)) throw ConfigError("solver.step_size must lie in (0, 1]");
    if (outer_iters < 1) throw ConfigError("solver.outer_iters must be >= 1");
    if (inner_sinkhorn_iters < 1) throw ConfigError("solver.inner_iters must be >= 1");
    if (!(tol >= 0.0)) throw ConfigError("solver.tol must be >= 0");
    if (final_sinkhorn_iters < 0) throw ConfigError("solver.final_sinkhorn_iters must be >= 0");
    if (!(sinkhorn_tol >= 0.0)) throw ConfigError("solver.sinkhorn_tol must be >= 0");
    if (!(lambda_p >= 0.0) || !(lambda_q >= 0.0)) throw ConfigError("solver.lambda_p/lambda_q must be >= 0");
  }

  MarginalPenalty penalty() const {
    if (marginal_mode == MarginalMode::Balanced) return {};
    return {lambda_p, lambda_q};
  }
};

}  // namespace vaot::ot
