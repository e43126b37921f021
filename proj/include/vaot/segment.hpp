#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "vaot/align.hpp"

namespace vaot {

/// K action embeddings, one per column (D x K).
struct ActionCentroids {
  Matrix vectors;

  Index dim() const noexcept { return vectors.rows(); }
  Index count() const noexcept { return vectors.cols(); }

  void validate() const {
    if (vectors.cols() < 2) throw ConfigError("action centroids: need K >= 2");
    if (!all_finite(vectors)) throw DomainError("action centroids: non-finite entry");
    for (Index k = 0; k < vectors.cols(); ++k) {
      if (!(vectors.col(k).norm() > 0.0)) throw DomainError("action centroid " + std::to_string(k) + " has zero norm");
    }
  }
};

struct JointWeights {
  double w_align = 1.0;
  double w_seg = 1.0;

  void validate() const {
    if (!(w_align >= 0.0) || !(w_seg >= 0.0)) throw ConfigError("joint weights must be >= 0");
    if (w_align == 0.0 && w_seg == 0.0) throw ConfigError("joint weights must not both be zero");
  }
};

/// How the structural prior over action indices is built.
enum class ActionPriorRule {
  OffDiagonal,  // C^a = 1 - I: nearby frames are pushed towards the same action
  TargetRule,   // the frame-to-frame target rule applied over K indices with radius r
};

inline ActionPriorRule parse_action_prior_rule(const std::string& s) {
  if (s == "off-diagonal") return ActionPriorRule::OffDiagonal;
  if (s == "target-rule") return ActionPriorRule::TargetRule;
  throw ConfigError("unknown action prior rule '" + s + "' (expected off-diagonal|target-rule)");
}

inline const char* to_string(ActionPriorRule r) {
  return r == ActionPriorRule::OffDiagonal ? "off-diagonal" : "target-rule";
}

struct SegConfig {
  double radius = 0.02;
  double lambda_act = 0.05;
  double tau = 0.1;
  ActionPriorRule action_prior = ActionPriorRule::OffDiagonal;
  ot::SolverConfig solver;

  void validate() const {
    if (!(radius > 0.0 && radius <= 1.0)) throw ConfigError("seg radius must lie in (0, 1]");
    if (!(lambda_act >= 0.0)) throw ConfigError("seg.lambda_act must be >= 0");
    if (!(tau > 0.0)) throw ConfigError("seg tau must be > 0");
    solver.validate();
  }
};

/// K-Means over all frames of all sequences: k-means++ (D^2) seeding from a
/// fixed seed, then Lloyd iterations until the assignment is stable.
inline ActionCentroids init_centroids_kmeans(const std::vector<FeatureSequence>& sequences, Index k,
                                             std::uint64_t seed, int max_iters = 100) {
  if (k < 2) throw ConfigError("init_centroids_kmeans: K must be >= 2");
  if (sequences.empty()) throw ConfigError("init_centroids_kmeans: no sequences");
  const Index dim = sequences.front().cols();
  Index total = 0;
  for (const auto& s : sequences) {
    if (s.cols() != dim) throw DimensionError("init_centroids_kmeans: inconsistent feature dimension");
    total += s.rows();
  }
  if (total < k) {
    throw ConfigError("init_centroids_kmeans: K = " + std::to_string(k) + " exceeds frame count " +
                      std::to_string(total));
  }
  Matrix points(total, dim);
  Index offset = 0;
  for (const auto& s : sequences) {
    points.middleRows(offset, s.rows()) = s;
    offset += s.rows();
  }

  std::mt19937_64 rng(seed);
  Matrix centers(k, dim);
  std::uniform_int_distribution<Index> pick(0, total - 1);
  centers.row(0) = points.row(pick(rng));
  Vector d2 = (points.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (Index c = 1; c < k; ++c) {
    const double sum = d2.sum();
    Index chosen = 0;
    if (sum > 0.0) {
      const double u = std::uniform_real_distribution<double>(0.0, sum)(rng);
      double acc = 0.0;
      chosen = total - 1;
      for (Index i = 0; i < total; ++i) {
        acc += d2[i];
        if (acc > u && d2[i] > 0.0) {
          chosen = i;
          break;
        }
      }
    }
    centers.row(c) = points.row(chosen);
    d2 = d2.cwiseMin((points.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  std::vector<Index> assign(static_cast<std::size_t>(total), -1);
  for (int it = 0; it < max_iters; ++it) {
    bool changed = false;
    for (Index i = 0; i < total; ++i) {
      Index best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (Index c = 0; c < k; ++c) {
        const double d = (points.row(i) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      if (assign[static_cast<std::size_t>(i)] != best) {
        assign[static_cast<std::size_t>(i)] = best;
        changed = true;
      }
    }
    if (!changed) break;
    Matrix sums = Matrix::Zero(k, dim);
    Vector counts = Vector::Zero(k);
    for (Index i = 0; i < total; ++i) {
      sums.row(assign[static_cast<std::size_t>(i)]) += points.row(i);
      counts[assign[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Index c = 0; c < k; ++c)
      if (counts[c] > 0.0) centers.row(c) = sums.row(c) / counts[c];  // empty clusters keep their center
  }
  return ActionCentroids{centers.transpose()};
}

/// Structural prior over K action indices.
inline ot::StructuralPrior action_prior(Index k, double radius, ActionPriorRule rule) {
  if (rule == ActionPriorRule::TargetRule) return target_prior(k, radius);
  return ot::StructuralPrior::banded(k, k, 0, 0.0, 0.0, 1.0);
}

/// Frame-to-action transport: FGW between the frames of X and the K actions
/// with the frame marginal enforced exactly and the action marginal relaxed
/// into a KL penalty of weight lambda_act.
inline ot::FgwSolution seg_pseudo_labels(const FeatureSequence& x, const ActionCentroids& centroids,
                                         const SegConfig& cfg) {
  cfg.validate();
  centroids.validate();
  if (x.cols() != centroids.dim()) throw DimensionError("seg_pseudo_labels: embedding and centroid dimensions differ");
  const Index n = x.rows();
  const Index k = centroids.count();
  ot::CostBundle bundle{visual_cost(x, centroids.vectors.transpose()),
                        ot::StructuralPrior::banded(n, n, band_width(n, cfg.radius), 0.0, 1.0 / cfg.radius, 0.0),
                        action_prior(k, cfg.radius, cfg.action_prior)};
  return ot::solve_fgw(bundle, Histogram::uniform(n), Histogram::uniform(k), cfg.solver,
                       ot::MarginalPenalty{ot::MarginalPenalty::kHard, cfg.lambda_act});
}

/// Cross-entropy between frame-to-action similarities and their pseudo-labels.
inline double seg_loss(const Matrix& similarities, const Matrix& targets) {
  return alignment_loss(similarities, targets);
}

inline double joint_loss(double l_xy, double l_xa, double l_ya, const JointWeights& w) {
  return w.w_align * l_xy + w.w_seg * (l_xa + l_ya);
}

/// Per-frame argmax over actions; ties go to the smallest action index.
inline std::vector<int> decode_segmentation(const Coupling& plan) {
  if ((plan.array() < 0.0).any()) throw DomainError("decode_segmentation: negative coupling entry");
  std::vector<int> labels(static_cast<std::size_t>(plan.rows()), 0);
  for (Index i = 0; i < plan.rows(); ++i) {
    Index best = 0;
    for (Index k = 1; k < plan.cols(); ++k)
      if (plan(i, k) > plan(i, best)) best = k;
    labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return labels;
}

/// Segments one embedded sequence against the centroids.
inline std::vector<int> segment_sequence(const FeatureSequence& x, const ActionCentroids& centroids,
                                         const SegConfig& cfg) {
  return decode_segmentation(seg_pseudo_labels(x, centroids, cfg).plan);
}

}  // namespace vaot
