#pragma once

#include <algorithm>
#include <optional>
#include <utility>
#include <vector>

#include "vaot/ot/problem.hpp"

namespace vaot {

struct PriorConfig {
  double radius = 0.02;  // r in (0, 1]
  double rho = 0.35;     // temporal prior weight
  double zeta = 0.5;     // virtual-frame threshold

  void validate() const {
    if (!(radius > 0.0 && radius <= 1.0)) throw ConfigError("prior.radius must lie in (0, 1]");
    if (!(rho >= 0.0)) throw ConfigError("prior.rho must be >= 0");
    if (!(zeta >= 0.0 && zeta <= 1.0)) throw ConfigError("prior.zeta must lie in [0, 1]");
  }
};

/// Number of off-diagonals per side inside the radius band, min(floor(n r), n - 1).
inline Index band_width(Index n, double radius) {
  if (!(radius > 0.0 && radius <= 1.0)) throw ConfigError("radius must lie in (0, 1]");
  const auto w = static_cast<Index>(std::floor(static_cast<double>(n) * radius + 1e-9));
  return std::min(w, std::max<Index>(n - 1, 0));
}

/// C_ij = 1 - cos(x_i, y_j).
inline Matrix visual_cost(const FeatureSequence& x, const FeatureSequence& y) {
  validate_sequence(x, "X");
  validate_sequence(y, "Y");
  if (x.cols() != y.cols()) {
    throw DimensionError("visual_cost: feature dimensions differ (" + std::to_string(x.cols()) + " vs " +
                         std::to_string(y.cols()) + ")");
  }
  auto normalized = [](const FeatureSequence& s, const char* name) {
    Matrix out = s;
    for (Index i = 0; i < s.rows(); ++i) {
      const double norm = s.row(i).norm();
      if (!(norm > 0.0)) {
        throw DomainError(std::string("visual_cost: frame ") + std::to_string(i) + " of " + name + " has zero norm");
      }
      out.row(i) /= norm;
    }
    return out;
  };
  const Matrix xn = normalized(x, "X");
  const Matrix yn = normalized(y, "Y");
  Matrix c = (-(xn * yn.transpose())).array() + 1.0;
  return c.cwiseMax(0.0).cwiseMin(2.0);
}

/// The Cy rule on its own (also used over action indices).
inline ot::StructuralPrior target_prior(Index m, double radius) {
  return ot::StructuralPrior::banded(m, m, band_width(m, radius), 1.0, 0.0, 1.0);
}

/// Radius-rule structural priors over two index sets of sizes n and m:
/// Cx_ik = 1/r inside the band 1 <= |i-k| <= n r (else 0), and
/// Cy_jl = 0 inside the band 1 <= |j-l| <= m r (else 1, diagonal included).
inline std::pair<ot::StructuralPrior, ot::StructuralPrior> structural_priors(Index n, Index m, double radius) {
  if (n < 1 || m < 1) throw DimensionError("structural_priors: sizes must be >= 1");
  if (!(radius > 0.0 && radius <= 1.0)) throw ConfigError("structural_priors: radius must lie in (0, 1]");
  auto cx = ot::StructuralPrior::banded(n, n, band_width(n, radius), 0.0, 1.0 / radius, 0.0);
  auto cy = target_prior(m, radius);
  return {std::move(cx), std::move(cy)};
}

/// R_ij = |i/N - j/M| with one-based i and j.
inline Matrix temporal_prior(Index n, Index m) {
  if (n < 1 || m < 1) throw DimensionError("temporal_prior: sizes must be >= 1");
  Matrix r(n, m);
  for (Index j = 0; j < m; ++j) {
    const double tj = static_cast<double>(j + 1) / static_cast<double>(m);
    for (Index i = 0; i < n; ++i) r(i, j) = std::abs(static_cast<double>(i + 1) / static_cast<double>(n) - tj);
  }
  return r;
}

/// An FGW instance augmented with one virtual frame on each side.
struct VirtualProblem {
  ot::CostBundle bundle;  // (N+1) x (M+1)
  Histogram p;            // uniform over N+1
  Histogram q;            // uniform over M+1
  Index real_rows = 0;
  Index real_cols = 0;
};

/// Appends a virtual row and column. Their KOT cost is `virtual_cost`
/// (the mean of the real cost when not given); their structural-prior rows
/// and columns are zero.
inline VirtualProblem augment_virtual(const ot::CostBundle& real, std::optional<double> virtual_cost = std::nullopt) {
  real.validate();
  const Index n = real.rows();
  const Index m = real.cols();
  const double vc = virtual_cost.value_or(real.kot_cost.mean());
  if (!std::isfinite(vc)) throw DomainError("augment_virtual: virtual cost must be finite");
  VirtualProblem out;
  out.bundle.kot_cost = Matrix::Constant(n + 1, m + 1, vc);
  out.bundle.kot_cost.topLeftCorner(n, m) = real.kot_cost;
  out.bundle.struct_x = real.struct_x.with_virtual();
  out.bundle.struct_y = real.struct_y.with_virtual();
  out.p = Histogram::uniform(n + 1);
  out.q = Histogram::uniform(m + 1);
  out.real_rows = n;
  out.real_cols = m;
  return out;
}

/// Drops the trailing virtual row and column.
inline Matrix strip_virtual(const Matrix& augmented) {
  if (augmented.rows() < 2 || augmented.cols() < 2) throw DimensionError("strip_virtual: matrix too small");
  return augmented.topLeftCorner(augmented.rows() - 1, augmented.cols() - 1);
}

/// Frame-level matches derived from an augmented coupling; std::nullopt marks the virtual frame.
struct Correspondences {
  std::vector<std::optional<Index>> rows;  // for each real frame of X
  std::vector<std::optional<Index>> cols;  // for each real frame of Y

  Index virtual_rows() const {
    return static_cast<Index>(std::count(rows.begin(), rows.end(), std::nullopt));
  }
  Index virtual_cols() const {
    return static_cast<Index>(std::count(cols.begin(), cols.end(), std::nullopt));
  }
};

/// Reads matches off an (N+1) x (M+1) coupling. A real frame goes to the
/// virtual frame when its largest normalized assignment probability over
/// real partners is below zeta; otherwise to its argmax (first index on ties).
inline Correspondences assign_with_virtual(const Coupling& plan, double zeta) {
  if (plan.rows() < 2 || plan.cols() < 2) throw DimensionError("assign_with_virtual: coupling too small");
  if ((plan.array() < 0.0).any()) throw DomainError("assign_with_virtual: negative coupling entry");
  const Index n = plan.rows() - 1;
  const Index m = plan.cols() - 1;
  Correspondences out;
  out.rows.resize(static_cast<std::size_t>(n));
  out.cols.resize(static_cast<std::size_t>(m));
  for (Index i = 0; i < n; ++i) {
    const double total = plan.row(i).sum();
    Index best = 0;
    double best_val = plan(i, 0);
    for (Index j = 1; j < m; ++j) {
      if (plan(i, j) > best_val) {
        best_val = plan(i, j);
        best = j;
      }
    }
    const double prob = total > 0.0 ? best_val / total : 0.0;
    if (!(prob < zeta)) out.rows[static_cast<std::size_t>(i)] = best;
  }
  for (Index j = 0; j < m; ++j) {
    const double total = plan.col(j).sum();
    Index best = 0;
    double best_val = plan(0, j);
    for (Index i = 1; i < n; ++i) {
      if (plan(i, j) > best_val) {
        best_val = plan(i, j);
        best = i;
      }
    }
    const double prob = total > 0.0 ? best_val / total : 0.0;
    if (!(prob < zeta)) out.cols[static_cast<std::size_t>(j)] = best;
  }
  return out;
}

}  // namespace vaot
