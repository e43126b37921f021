#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "vaot/types.hpp"

namespace vaot {

// ---------------------------------------------------------------- Kendall tau

namespace detail {

// Counts inversions of v while merge-sorting it.
inline long long count_inversions(std::vector<double>& v, std::vector<double>& buf, std::size_t lo, std::size_t hi) {
  if (hi - lo < 2) return 0;
  const std::size_t mid = lo + (hi - lo) / 2;
  long long inv = count_inversions(v, buf, lo, mid) + count_inversions(v, buf, mid, hi);
  std::size_t i = lo, j = mid, k = lo;
  while (i < mid && j < hi) {
    if (v[j] < v[i]) {
      inv += static_cast<long long>(mid - i);
      buf[k++] = v[j++];
    } else {
      buf[k++] = v[i++];
    }
  }
  while (i < mid) buf[k++] = v[i++];
  while (j < hi) buf[k++] = v[j++];
  std::copy(buf.begin() + static_cast<std::ptrdiff_t>(lo), buf.begin() + static_cast<std::ptrdiff_t>(hi),
            v.begin() + static_cast<std::ptrdiff_t>(lo));
  return inv;
}

// Sum over runs of equal values of len * (len - 1) / 2; v must be sorted.
inline long long tied_pairs(const std::vector<double>& v) {
  long long total = 0, run = 1;
  for (std::size_t i = 1; i <= v.size(); ++i) {
    if (i < v.size() && v[i] == v[i - 1]) {
      ++run;
    } else {
      total += run * (run - 1) / 2;
      run = 1;
    }
  }
  return total;
}

}  // namespace detail

/// Kendall tau-b between two paired samples, O(n log n).
inline double kendall_tau(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw DimensionError("kendall_tau: samples differ in length");
  const std::size_t n = x.size();
  if (n < 2) throw DomainError("kendall_tau: undefined for fewer than 2 pairs");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return x[a] < x[b] || (x[a] == x[b] && y[a] < y[b]);
  });
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = x[order[i]];
    ys[i] = y[order[i]];
  }
  const long long n0 = static_cast<long long>(n) * static_cast<long long>(n - 1) / 2;
  const long long n1 = detail::tied_pairs(xs);
  long long n3 = 0;  // pairs tied in both
  {
    long long run = 1;
    for (std::size_t i = 1; i <= n; ++i) {
      if (i < n && xs[i] == xs[i - 1] && ys[i] == ys[i - 1]) {
        ++run;
      } else {
        n3 += run * (run - 1) / 2;
        run = 1;
      }
    }
  }
  std::vector<double> buf(n);
  const long long swaps = detail::count_inversions(ys, buf, 0, n);  // ys is now sorted
  const long long n2 = detail::tied_pairs(ys);
  const long long numerator = n0 - n1 - n2 + n3 - 2 * swaps;
  const double denom = std::sqrt(static_cast<double>(n0 - n1) * static_cast<double>(n0 - n2));
  if (denom == 0.0) return 0.0;
  return static_cast<double>(numerator) / denom;
}

/// Kendall tau-b of an alignment given as (i, j) pairs.
inline double kendall_tau(const std::vector<std::pair<Index, Index>>& alignment) {
  std::vector<double> x, y;
  for (const auto& [i, j] : alignment) {
    x.push_back(static_cast<double>(i));
    y.push_back(static_cast<double>(j));
  }
  return kendall_tau(x, y);
}

// ------------------------------------------------------------ phase metrics

/// Nearest-class-centroid accuracy. The classifier sees the first
/// ceil(fraction * n_train) training frames after a seeded shuffle; classes
/// left without examples are skipped (`skipped` reports how many).
inline double phase_classification(const Matrix& train_emb, const std::vector<int>& train_labels,
                                   const Matrix& test_emb, const std::vector<int>& test_labels, double fraction,
                                   std::uint64_t seed = 0, int* skipped = nullptr) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw ConfigError("phase_classification: fraction must lie in (0, 1]");
  if (static_cast<Index>(train_labels.size()) != train_emb.rows() ||
      static_cast<Index>(test_labels.size()) != test_emb.rows()) {
    throw DimensionError("phase_classification: label count differs from embedding count");
  }
  if (train_emb.cols() != test_emb.cols()) throw DimensionError("phase_classification: embedding dimensions differ");
  if (train_emb.rows() == 0 || test_emb.rows() == 0) throw DimensionError("phase_classification: empty split");
  std::vector<Index> order(static_cast<std::size_t>(train_emb.rows()));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto used = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size())));
  std::map<int, std::pair<Vector, int>> sums;
  for (std::size_t k = 0; k < used; ++k) {
    const Index i = order[k];
    auto& entry = sums[train_labels[static_cast<std::size_t>(i)]];
    if (entry.second == 0) entry.first = Vector::Zero(train_emb.cols());
    entry.first += train_emb.row(i).transpose();
    entry.second += 1;
  }
  if (skipped != nullptr) {
    std::map<int, int> all;
    for (int l : train_labels) all[l] = 1;
    *skipped = static_cast<int>(all.size() - sums.size());
  }
  std::vector<int> classes;
  Matrix centers(static_cast<Index>(sums.size()), train_emb.cols());
  for (const auto& [label, entry] : sums) {
    centers.row(static_cast<Index>(classes.size())) = entry.first.transpose() / entry.second;
    classes.push_back(label);
  }
  Index correct = 0;
  for (Index i = 0; i < test_emb.rows(); ++i) {
    Index best;
    (centers.rowwise() - test_emb.row(i)).rowwise().squaredNorm().minCoeff(&best);
    if (classes[static_cast<std::size_t>(best)] == test_labels[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(test_emb.rows());
}

/// Ordinary least squares with intercept, embeddings -> progress. Falls back
/// to ridge (lambda = 1e-6) when the normal equations are rank deficient.
struct ProgressRegressor {
  Vector weights;  // D
  double intercept = 0.0;
  bool used_ridge = false;

  static ProgressRegressor fit(const Matrix& emb, const std::vector<double>& targets) {
    if (static_cast<Index>(targets.size()) != emb.rows()) throw DimensionError("phase_progress: target count mismatch");
    for (double t : targets)
      if (!(t >= 0.0 && t <= 1.0)) throw DomainError("phase_progress: targets must lie in [0, 1]");
    Matrix design(emb.rows(), emb.cols() + 1);
    design.leftCols(emb.cols()) = emb;
    design.col(emb.cols()).setOnes();
    const Vector y = Eigen::Map<const Vector>(targets.data(), static_cast<Index>(targets.size()));
    Matrix gram = design.transpose() * design;
    const Vector rhs = design.transpose() * y;
    ProgressRegressor r;
    Eigen::LDLT<Matrix> ldlt(gram);
    Eigen::FullPivLU<Matrix> lu(gram);
    Vector beta;
    if (lu.rank() == gram.rows() && ldlt.info() == Eigen::Success) {
      beta = ldlt.solve(rhs);
    } else {
      r.used_ridge = true;
      gram.diagonal().array() += 1e-6;
      beta = gram.ldlt().solve(rhs);
    }
    r.weights = beta.head(emb.cols());
    r.intercept = beta[emb.cols()];
    return r;
  }

  Vector predict(const Matrix& emb) const { return (emb * weights).array() + intercept; }
};

/// Coefficient of determination; 0 when the targets are constant.
inline double r_squared(const Vector& pred, const Vector& target) {
  const double mean = target.mean();
  const double ss_tot = (target.array() - mean).square().sum();
  if (ss_tot == 0.0) return 0.0;
  return 1.0 - (pred - target).squaredNorm() / ss_tot;
}

/// Fits on the training frames, reports r2 averaged over the test videos.
inline double phase_progress(const Matrix& train_emb, const std::vector<double>& train_targets,
                             const std::vector<Matrix>& test_emb, const std::vector<std::vector<double>>& test_targets,
                             bool* used_ridge = nullptr) {
  if (test_emb.size() != test_targets.size() || test_emb.empty()) {
    throw DimensionError("phase_progress: need matching, nonempty test videos");
  }
  const ProgressRegressor reg = ProgressRegressor::fit(train_emb, train_targets);
  if (used_ridge != nullptr) *used_ridge = reg.used_ridge;
  double total = 0.0;
  for (std::size_t v = 0; v < test_emb.size(); ++v) {
    if (static_cast<Index>(test_targets[v].size()) != test_emb[v].rows()) {
      throw DimensionError("phase_progress: test target count mismatch");
    }
    const Vector t = Eigen::Map<const Vector>(test_targets[v].data(), static_cast<Index>(test_targets[v].size()));
    total += r_squared(reg.predict(test_emb[v]), t);
  }
  return total / static_cast<double>(test_emb.size());
}

/// Mean over queries of (same-label frames among the K nearest gallery frames
/// by cosine distance) / K. Ties go to the lower gallery index.
inline double frame_retrieval_ap(const Matrix& queries, const std::vector<int>& query_labels, const Matrix& gallery,
                                 const std::vector<int>& gallery_labels, int k) {
  if (k < 1 || gallery.rows() < k) throw ConfigError("frame_retrieval_ap: need 1 <= K <= gallery size");
  if (static_cast<Index>(query_labels.size()) != queries.rows() ||
      static_cast<Index>(gallery_labels.size()) != gallery.rows()) {
    throw DimensionError("frame_retrieval_ap: label count mismatch");
  }
  if (queries.cols() != gallery.cols()) throw DimensionError("frame_retrieval_ap: embedding dimensions differ");
  auto normalize = [](const Matrix& m) {
    Matrix out = m;
    for (Index i = 0; i < m.rows(); ++i) {
      const double nrm = m.row(i).norm();
      if (nrm > 0.0) out.row(i) /= nrm;
    }
    return out;
  };
  const Matrix sim = normalize(queries) * normalize(gallery).transpose();
  double total = 0.0;
  std::vector<Index> idx(static_cast<std::size_t>(gallery.rows()));
  for (Index q = 0; q < queries.rows(); ++q) {
    std::iota(idx.begin(), idx.end(), 0);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Index a, Index b) {
      return sim(q, a) > sim(q, b) || (sim(q, a) == sim(q, b) && a < b);
    });
    int hits = 0;
    for (int r = 0; r < k; ++r)
      if (gallery_labels[static_cast<std::size_t>(idx[static_cast<std::size_t>(r)])] ==
          query_labels[static_cast<std::size_t>(q)])
        ++hits;
    total += static_cast<double>(hits) / k;
  }
  return queries.rows() > 0 ? total / static_cast<double>(queries.rows()) : 0.0;
}

// --------------------------------------------------------- Hungarian matching

namespace detail {

// Minimum-cost assignment of a square matrix (shortest augmenting paths with
// potentials), O(n^3).
inline std::vector<int> hungarian_core(const Matrix& cost) {
  const int n = static_cast<int>(cost.rows());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> assign(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) assign[static_cast<std::size_t>(p[j] - 1)] = j - 1;
  return assign;
}

inline double assignment_cost(const Matrix& cost, const std::vector<int>& a) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += cost(static_cast<Index>(i), a[i]);
  return s;
}

}  // namespace detail

/// Minimum-cost perfect matching of a square cost matrix; result[i] is the
/// column assigned to row i. Among optimal matchings the lexicographically
/// smallest assignment vector is returned.
inline std::vector<int> hungarian_match(const Matrix& cost) {
  if (cost.rows() != cost.cols()) throw DimensionError("hungarian_match: cost must be square, got " + shape_string(cost));
  if (!all_finite(cost)) throw DomainError("hungarian_match: non-finite cost");
  const Index n = cost.rows();
  if (n == 0) return {};
  const double best = detail::assignment_cost(cost, detail::hungarian_core(cost));
  const double tol = 1e-9 * std::max(1.0, cost.cwiseAbs().maxCoeff() * static_cast<double>(n));

  // Fix rows one at a time to the smallest column that still admits an optimum.
  std::vector<int> result(static_cast<std::size_t>(n), -1);
  std::vector<char> col_used(static_cast<std::size_t>(n), 0);
  double fixed_cost = 0.0;
  for (Index r = 0; r < n; ++r) {
    const Index rest = n - r - 1;
    for (Index c = 0; c < n; ++c) {
      if (col_used[static_cast<std::size_t>(c)]) continue;
      double sub = 0.0;
      if (rest > 0) {
        Matrix m(rest, rest);
        std::vector<Index> cols;
        for (Index k = 0; k < n; ++k)
          if (!col_used[static_cast<std::size_t>(k)] && k != c) cols.push_back(k);
        for (Index i = 0; i < rest; ++i)
          for (Index cc = 0; cc < rest; ++cc) m(i, cc) = cost(r + 1 + i, cols[static_cast<std::size_t>(cc)]);
        sub = detail::assignment_cost(m, detail::hungarian_core(m));
      }
      if (fixed_cost + cost(r, c) + sub <= best + tol) {
        result[static_cast<std::size_t>(r)] = static_cast<int>(c);
        col_used[static_cast<std::size_t>(c)] = 1;
        fixed_cost += cost(r, c);
        break;
      }
    }
  }
  return result;
}

// ------------------------------------------------------ segmentation metrics

enum class MatchingScope { FullDataset, PerVideo };

inline MatchingScope parse_matching_scope(const std::string& s) {
  if (s == "per-video" || s == "PerVideo") return MatchingScope::PerVideo;
  if (s == "full-dataset" || s == "FullDataset") return MatchingScope::FullDataset;
  throw ConfigError("unknown matching scope '" + s + "' (expected per-video|full-dataset)");
}

inline const char* to_string(MatchingScope s) {
  return s == MatchingScope::PerVideo ? "per-video" : "full-dataset";
}

struct SegmentationScores {
  double mof = 0.0;
  double f1 = 0.0;
  double miou = 0.0;
};

namespace detail {

struct Run {
  int label;
  Index start;
  Index end;  // exclusive
};

inline std::vector<Run> runs_of(const std::vector<int>& labels) {
  std::vector<Run> out;
  for (Index i = 0; i < static_cast<Index>(labels.size()); ++i) {
    if (out.empty() || out.back().label != labels[static_cast<std::size_t>(i)]) {
      out.push_back({labels[static_cast<std::size_t>(i)], i, i + 1});
    } else {
      out.back().end = i + 1;
    }
  }
  return out;
}

// Predicted-cluster -> ground-truth-class map maximizing matched frames.
// Ties between optimal maps are broken with clusters ordered by first
// appearance, and clusters matched to a class they never overlap map to -1,
// so renaming the predicted clusters never changes the result.
inline std::vector<int> match_clusters(const std::vector<const std::vector<int>*>& pred,
                                       const std::vector<const std::vector<int>*>& gt, int k) {
  Matrix overlap = Matrix::Zero(k, k);
  std::vector<int> order;
  std::vector<char> seen(static_cast<std::size_t>(k), 0);
  for (std::size_t v = 0; v < pred.size(); ++v) {
    for (std::size_t i = 0; i < pred[v]->size(); ++i) {
      const int c = (*pred[v])[i];
      overlap(c, (*gt[v])[i]) += 1.0;
      if (!seen[static_cast<std::size_t>(c)]) {
        seen[static_cast<std::size_t>(c)] = 1;
        order.push_back(c);
      }
    }
  }
  for (int c = 0; c < k; ++c)
    if (!seen[static_cast<std::size_t>(c)]) order.push_back(c);
  Matrix ordered(k, k);
  for (int r = 0; r < k; ++r) ordered.row(r) = overlap.row(order[static_cast<std::size_t>(r)]);
  const auto a = hungarian_match(-ordered);
  std::vector<int> m(static_cast<std::size_t>(k), -1);
  for (int r = 0; r < k; ++r) {
    const int c = order[static_cast<std::size_t>(r)];
    if (overlap(c, a[static_cast<std::size_t>(r)]) > 0.0) m[static_cast<std::size_t>(c)] = a[static_cast<std::size_t>(r)];
  }
  return m;
}

}  // namespace detail

/// MoF, F1@IoU0.5 and mIoU after Hungarian matching of predicted clusters to
/// ground-truth classes, either once over all videos or per video. Labels
/// are 0-based and must lie in [0, num_classes). Frame and segment counts are
/// pooled over all videos; F1 and IoU are averaged over classes occurring in
/// the ground truth or the matched prediction. Frames of clusters left
/// without an overlapping class count as errors against their true class.
inline SegmentationScores segmentation_metrics(const std::vector<std::vector<int>>& pred,
                                               const std::vector<std::vector<int>>& gt, int num_classes,
                                               MatchingScope scope) {
  if (pred.size() != gt.size() || pred.empty()) throw DimensionError("segmentation_metrics: video count mismatch");
  if (num_classes < 1) throw ConfigError("segmentation_metrics: num_classes must be >= 1");
  for (std::size_t v = 0; v < pred.size(); ++v) {
    if (pred[v].size() != gt[v].size()) {
      throw DimensionError("segmentation_metrics: video " + std::to_string(v) + " has " +
                           std::to_string(pred[v].size()) + " predictions for " + std::to_string(gt[v].size()) +
                           " frames");
    }
    for (std::size_t i = 0; i < pred[v].size(); ++i) {
      for (int l : {pred[v][i], gt[v][i]}) {
        if (l < 0 || l >= num_classes) {
          throw DomainError("segmentation_metrics: label " + std::to_string(l) + " outside [0, " +
                            std::to_string(num_classes) + ") in video " + std::to_string(v) + " frame " +
                            std::to_string(i));
        }
      }
    }
  }
  // Relabel predictions through the matching.
  std::vector<std::vector<int>> mapped(pred.size());
  if (scope == MatchingScope::FullDataset) {
    std::vector<const std::vector<int>*> ps, gs;
    for (std::size_t v = 0; v < pred.size(); ++v) {
      ps.push_back(&pred[v]);
      gs.push_back(&gt[v]);
    }
    const auto m = detail::match_clusters(ps, gs, num_classes);
    for (std::size_t v = 0; v < pred.size(); ++v)
      for (int l : pred[v]) mapped[v].push_back(m[static_cast<std::size_t>(l)]);
  } else {
    for (std::size_t v = 0; v < pred.size(); ++v) {
      const auto m = detail::match_clusters({&pred[v]}, {&gt[v]}, num_classes);
      for (int l : pred[v]) mapped[v].push_back(m[static_cast<std::size_t>(l)]);
    }
  }

  const auto k = static_cast<std::size_t>(num_classes);
  std::vector<double> inter(k, 0.0), uni(k, 0.0), tp(k, 0.0), n_pred(k, 0.0), n_gt(k, 0.0);
  std::vector<char> present(k, 0);
  double correct = 0.0, total = 0.0;
  for (std::size_t v = 0; v < pred.size(); ++v) {
    for (std::size_t i = 0; i < gt[v].size(); ++i) {
      const auto b = static_cast<std::size_t>(gt[v][i]);
      present[b] = 1;
      total += 1.0;
      if (mapped[v][i] < 0) {
        uni[b] += 1.0;
        continue;
      }
      const auto a = static_cast<std::size_t>(mapped[v][i]);
      present[a] = 1;
      if (a == b) {
        correct += 1.0;
        inter[a] += 1.0;
        uni[a] += 1.0;
      } else {
        uni[a] += 1.0;
        uni[b] += 1.0;
      }
    }
    const auto pr = detail::runs_of(mapped[v]);
    const auto gr = detail::runs_of(gt[v]);
    std::vector<char> taken(gr.size(), 0);
    for (const auto& r : gr) n_gt[static_cast<std::size_t>(r.label)] += 1.0;
    for (const auto& s : pr) {
      if (s.label < 0) continue;
      n_pred[static_cast<std::size_t>(s.label)] += 1.0;
      double best_iou = 0.0;
      std::size_t best = gr.size();
      for (std::size_t g = 0; g < gr.size(); ++g) {
        if (taken[g] || gr[g].label != s.label) continue;
        const double in = static_cast<double>(std::max<Index>(0, std::min(s.end, gr[g].end) - std::max(s.start, gr[g].start)));
        const double un = static_cast<double>(std::max(s.end, gr[g].end) - std::min(s.start, gr[g].start));
        const double iou = in / un;
        if (iou > best_iou) {
          best_iou = iou;
          best = g;
        }
      }
      if (best < gr.size() && best_iou >= 0.5) {
        taken[best] = 1;
        tp[static_cast<std::size_t>(s.label)] += 1.0;
      }
    }
  }
  SegmentationScores out;
  out.mof = total > 0.0 ? correct / total : 0.0;
  double f1_sum = 0.0, iou_sum = 0.0, classes = 0.0;
  for (std::size_t c = 0; c < k; ++c) {
    if (!present[c]) continue;
    classes += 1.0;
    iou_sum += uni[c] > 0.0 ? inter[c] / uni[c] : 0.0;
    const double precision = n_pred[c] > 0.0 ? tp[c] / n_pred[c] : 0.0;
    const double recall = n_gt[c] > 0.0 ? tp[c] / n_gt[c] : 0.0;
    f1_sum += precision + recall > 0.0 ? 2.0 * precision * recall / (precision + recall) : 0.0;
  }
  if (classes > 0.0) {
    out.f1 = f1_sum / classes;
    out.miou = iou_sum / classes;
  }
  return out;
}

}  // namespace vaot
