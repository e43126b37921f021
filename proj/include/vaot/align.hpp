#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "vaot/ot/fgw_solver.hpp"
#include "vaot/priors.hpp"

namespace vaot {

/// Floor applied inside log P.
inline constexpr double kProbabilityFloor = 1e-12;

struct AlignConfig {
  double tau = 0.1;
  bool use_virtual = true;
  std::optional<double> virtual_cost;  // defaults to the mean visual cost
  bool row_normalize_targets = false;

  void validate() const {
    if (!(tau > 0.0)) throw ConfigError("align.tau must be > 0");
  }
};

struct AlignProblem {
  FeatureSequence x;
  FeatureSequence y;
  PriorConfig prior;
  ot::SolverConfig solver;
  AlignConfig align;
};

/// Pseudo-labels for one pair: the (possibly augmented) coupling, the
/// frame matches it implies, and the loss masks derived from them.
struct AlignTargets {
  Coupling plan;              // (N+1) x (M+1) with a virtual frame, N x M otherwise
  Coupling real_block;        // N x M
  Correspondences matches;
  std::vector<bool> row_keep;  // false for frames of X matched to the virtual frame
  std::vector<bool> col_keep;
  ot::SolveReport report;
};

struct AlignResult {
  AlignTargets targets;
  Matrix similarities;  // row-stochastic N x M
  double loss = 0.0;
};

/// C + rho R.
inline Matrix augmented_kot_cost(const FeatureSequence& x, const FeatureSequence& y, double rho) {
  if (!(rho >= 0.0)) throw ConfigError("augmented_kot_cost: rho must be >= 0");
  Matrix c = visual_cost(x, y);
  if (rho > 0.0) c += rho * temporal_prior(x.rows(), y.rows());
  return c;
}

/// Solves the balanced FGW problem on the augmented costs. The result is a
/// constant target: nothing downstream differentiates through it.
inline AlignTargets compute_pseudo_labels(const AlignProblem& prob) {
  prob.prior.validate();
  prob.solver.validate();
  prob.align.validate();
  const Index n = prob.x.rows();
  const Index m = prob.y.rows();
  auto [cx, cy] = structural_priors(n, m, prob.prior.radius);
  ot::CostBundle real{augmented_kot_cost(prob.x, prob.y, prob.prior.rho), std::move(cx), std::move(cy)};

  AlignTargets out;
  if (prob.align.use_virtual) {
    VirtualProblem vp = augment_virtual(real, prob.align.virtual_cost);
    ot::FgwSolution sol = ot::solve_fgw(vp.bundle, vp.p, vp.q, prob.solver);
    out.matches = assign_with_virtual(sol.plan, prob.prior.zeta);
    out.real_block = strip_virtual(sol.plan);
    out.plan = std::move(sol.plan);
    out.report = std::move(sol.report);
  } else {
    ot::FgwSolution sol = ot::solve_fgw(real, Histogram::uniform(n), Histogram::uniform(m), prob.solver);
    // Argmax matches only; no frame can fall below the threshold.
    Matrix padded = Matrix::Zero(n + 1, m + 1);
    padded.topLeftCorner(n, m) = sol.plan;
    out.matches = assign_with_virtual(padded, 0.0);
    out.real_block = sol.plan;
    out.plan = std::move(sol.plan);
    out.report = std::move(sol.report);
  }
  out.row_keep.resize(static_cast<std::size_t>(n));
  out.col_keep.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) out.row_keep[static_cast<std::size_t>(i)] = out.matches.rows[static_cast<std::size_t>(i)].has_value();
  for (Index j = 0; j < m; ++j) out.col_keep[static_cast<std::size_t>(j)] = out.matches.cols[static_cast<std::size_t>(j)].has_value();
  return out;
}

/// Row-wise softmax of X Y' / tau.
inline Matrix normalized_similarities(const FeatureSequence& x, const FeatureSequence& y, double tau) {
  if (!(tau > 0.0)) throw ConfigError("normalized_similarities: tau must be > 0");
  if (x.cols() != y.cols()) throw DimensionError("normalized_similarities: feature dimensions differ");
  Matrix logits = (x * y.transpose()) / tau;
  for (Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - mx).exp().matrix();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

namespace detail {

// Effective cross-entropy weights: masked targets, optionally row-normalized.
inline Matrix loss_weights(const Matrix& targets, const std::vector<bool>* row_keep, const std::vector<bool>* col_keep,
                           bool row_normalize) {
  Matrix w = targets;
  if (row_keep != nullptr) {
    if (static_cast<Index>(row_keep->size()) != w.rows()) throw DimensionError("loss: row mask size mismatch");
    for (Index i = 0; i < w.rows(); ++i)
      if (!(*row_keep)[static_cast<std::size_t>(i)]) w.row(i).setZero();
  }
  if (col_keep != nullptr) {
    if (static_cast<Index>(col_keep->size()) != w.cols()) throw DimensionError("loss: column mask size mismatch");
    for (Index j = 0; j < w.cols(); ++j)
      if (!(*col_keep)[static_cast<std::size_t>(j)]) w.col(j).setZero();
  }
  if (row_normalize) {
    for (Index i = 0; i < w.rows(); ++i) {
      const double s = w.row(i).sum();
      if (s > 0.0) w.row(i) /= s;
    }
  }
  return w;
}

}  // namespace detail

/// L = -sum_ij T*_ij log max(P_ij, floor) over the kept real-frame block.
inline double alignment_loss(const Matrix& similarities, const Matrix& targets,
                             const std::vector<bool>* row_keep = nullptr, const std::vector<bool>* col_keep = nullptr,
                             bool row_normalize = false) {
  require_same_shape(similarities, targets, "alignment_loss");
  const Matrix w = detail::loss_weights(targets, row_keep, col_keep, row_normalize);
  double loss = 0.0;
  for (Index j = 0; j < w.cols(); ++j)
    for (Index i = 0; i < w.rows(); ++i)
      if (w(i, j) != 0.0) loss -= w(i, j) * std::log(std::max(similarities(i, j), kProbabilityFloor));
  return loss;
}

/// Gradient of alignment_loss with respect to the logits X Y' / tau,
/// holding the targets fixed. Terms clipped by the floor are constant.
inline Matrix alignment_logit_grad(const Matrix& similarities, const Matrix& targets,
                                   const std::vector<bool>* row_keep = nullptr,
                                   const std::vector<bool>* col_keep = nullptr, bool row_normalize = false) {
  require_same_shape(similarities, targets, "alignment_logit_grad");
  Matrix w = detail::loss_weights(targets, row_keep, col_keep, row_normalize);
  w = (similarities.array() >= kProbabilityFloor).select(w, 0.0);
  const Vector row_mass = w.rowwise().sum();
  return similarities.array().colwise() * row_mass.array() - w.array();
}

/// dL/dX and dL/dY for P = softmax(X Y' / tau).
inline std::pair<Matrix, Matrix> alignment_loss_grad(const Matrix& similarities, const Matrix& targets,
                                                     const FeatureSequence& x, const FeatureSequence& y, double tau,
                                                     const std::vector<bool>* row_keep = nullptr,
                                                     const std::vector<bool>* col_keep = nullptr,
                                                     bool row_normalize = false) {
  if (similarities.rows() != x.rows() || similarities.cols() != y.rows()) {
    throw DimensionError("alignment_loss_grad: similarities " + shape_string(similarities) + " vs sequences " +
                         std::to_string(x.rows()) + "/" + std::to_string(y.rows()));
  }
  const Matrix ds = alignment_logit_grad(similarities, targets, row_keep, col_keep, row_normalize) / tau;
  return {ds * y, ds.transpose() * x};
}

/// Full alignment step for one pair: pseudo-labels, similarities and loss.
inline AlignResult align_pair(const AlignProblem& prob) {
  AlignResult out;
  out.targets = compute_pseudo_labels(prob);
  out.similarities = normalized_similarities(prob.x, prob.y, prob.align.tau);
  out.loss = alignment_loss(out.similarities, out.targets.real_block, &out.targets.row_keep, &out.targets.col_keep,
                            prob.align.row_normalize_targets);
  return out;
}

}  // namespace vaot
