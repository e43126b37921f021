#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "vaot/types.hpp"

namespace vaot {

/// Knobs of the synthetic benchmark. Every video renders the same latent
/// activity (actions 0..K-1 in order) with per-video timing, optional order
/// swaps, repeated actions and background segments.
struct SynthParams {
  std::uint64_t seed = 7;
  int num_videos = 16;
  int num_actions = 5;
  int feature_dim = 32;
  int min_length = 90;
  int max_length = 110;
  double noise = 0.05;            // per-coordinate Gaussian noise
  double motion = 1.0;            // scale of the within-action trajectory
  int walk_steps = 20;            // knots of each action trajectory
  double walk_scale = 0.3;        // per-knot step of the trajectory random walk
  double warp = 0.1;              // amplitude a of t -> t + a sin(pi t); |a| < 1/pi
  double duration_jitter = 0.3;   // relative spread of segment durations
  double background_rate = 0.0;   // probability of a background segment in each gap
  double background_weight = 0.4; // duration of a background segment relative to an action
  double permute_prob = 0.0;      // probability that two adjacent actions swap
  double repeat_prob = 0.0;       // probability that one action occurs twice
  int num_pairs = 10;             // evaluation pairs with ground-truth correspondences
  double val_fraction = 0.25;

  void validate() const {
    if (num_videos < 1) throw ConfigError("synth.num_videos must be >= 1");
    if (num_actions < 2) throw ConfigError("synth.num_actions must be >= 2");
    if (feature_dim <= num_actions) throw ConfigError("synth.feature_dim must exceed synth.num_actions");
    if (min_length < 2 || max_length < min_length) throw ConfigError("synth lengths need 2 <= min_length <= max_length");
    if (!(noise >= 0.0)) throw ConfigError("synth.noise must be >= 0");
    if (!(motion >= 0.0) || !(walk_scale >= 0.0) || walk_steps < 1) throw ConfigError("synth trajectory parameters");
    if (!(warp >= 0.0 && warp * M_PI < 1.0)) throw ConfigError("synth.warp must lie in [0, 1/pi) to stay monotone");
    if (!(duration_jitter >= 0.0 && duration_jitter < 1.0)) throw ConfigError("synth.duration_jitter must lie in [0, 1)");
    for (double pr : {background_rate, permute_prob, repeat_prob}) {
      if (!(pr >= 0.0 && pr <= 1.0)) throw ConfigError("synth probabilities must lie in [0, 1]");
    }
    if (!(background_weight > 0.0)) throw ConfigError("synth.background_weight must be > 0");
    if (num_pairs < 0) throw ConfigError("synth.num_pairs must be >= 0");
    if (!(val_fraction >= 0.0 && val_fraction < 1.0)) throw ConfigError("synth.val_fraction must lie in [0, 1)");
  }
};

struct SynthVideo {
  std::string name;
  FeatureSequence features;      // N x D_in
  std::vector<int> labels;       // action id per frame; background is num_actions
  std::vector<double> progress;  // position in the activity, in [0, 1]
  std::vector<int> program;      // segment labels in temporal order
  double warp = 0.0;             // drawn warp coefficient
};

/// Ground-truth frame correspondence from video a to video b (-1: none).
struct GroundTruthPair {
  Index a = 0;
  Index b = 0;
  std::vector<Index> map;
};

struct SynthDataset {
  SynthParams params;
  Matrix prototypes;             // K x D_in
  std::vector<Matrix> walks;     // per action, (walk_steps + 1) x D_in
  std::vector<SynthVideo> videos;
  std::vector<GroundTruthPair> pairs;
  std::vector<Index> train;
  std::vector<Index> val;

  int background_label() const noexcept { return params.num_actions; }
  bool has_background() const {
    for (const auto& v : videos)
      if (std::find(v.labels.begin(), v.labels.end(), background_label()) != v.labels.end()) return true;
    return false;
  }
  /// Cluster count for segmentation: actions plus background when present.
  int num_classes() const { return params.num_actions + (has_background() ? 1 : 0); }

  std::vector<FeatureSequence> features_of(const std::vector<Index>& ids) const {
    std::vector<FeatureSequence> out;
    for (Index i : ids) out.push_back(videos[static_cast<std::size_t>(i)].features);
    return out;
  }

  void validate() const {
    for (const auto& v : videos) {
      if (static_cast<Index>(v.labels.size()) != v.features.rows() ||
          static_cast<Index>(v.progress.size()) != v.features.rows()) {
        throw DimensionError("dataset: labels/progress length differ from frame count in " + v.name);
      }
    }
    for (const auto& p : pairs) {
      const auto n = static_cast<Index>(videos.size());
      if (p.a < 0 || p.a >= n || p.b < 0 || p.b >= n) throw DimensionError("dataset: pair references unknown video");
      const Index na = videos[static_cast<std::size_t>(p.a)].features.rows();
      const Index nb = videos[static_cast<std::size_t>(p.b)].features.rows();
      if (static_cast<Index>(p.map.size()) != na) throw DimensionError("dataset: pair map length mismatch");
      for (Index j : p.map)
        if (j < -1 || j >= nb) throw DimensionError("dataset: pair map index out of range");
    }
  }
};

namespace detail {

inline Vector gaussian_vector(std::mt19937_64& rng, Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * n(rng);
  return v;
}

// Orthonormal basis (D x K) of the span of the prototypes.
inline Matrix prototype_basis(const Matrix& prototypes) {
  Eigen::HouseholderQR<Matrix> qr(prototypes.transpose());
  return qr.householderQ() * Matrix::Identity(prototypes.cols(), prototypes.rows());
}

struct Segment {
  int label;
  int occurrence;  // how many earlier segments share the label
  double start;    // in activity time [0, 1]
  double end;
};

inline std::vector<int> draw_program(const SynthParams& p, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<int> order(static_cast<std::size_t>(p.num_actions));
  std::iota(order.begin(), order.end(), 0);
  if (u(rng) < p.permute_prob) {
    std::uniform_int_distribution<int> pos(0, p.num_actions - 2);
    const int k = pos(rng);
    std::swap(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k + 1)]);
  }
  if (u(rng) < p.repeat_prob) {
    // Repeat the action at position k after the action that follows it.
    std::uniform_int_distribution<int> pos(0, p.num_actions - 2);
    const int k = pos(rng);
    order.insert(order.begin() + k + 2, order[static_cast<std::size_t>(k)]);
  }
  std::vector<int> program;
  const int bg = p.num_actions;
  for (std::size_t s = 0; s <= order.size(); ++s) {
    if (p.background_rate > 0.0 && u(rng) < p.background_rate) program.push_back(bg);
    if (s < order.size()) program.push_back(order[s]);
  }
  return program;
}

inline std::vector<Segment> lay_out(const SynthParams& p, const std::vector<int>& program, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> w;
  for (int label : program) {
    const double base = label == p.num_actions ? p.background_weight : 1.0;
    w.push_back(base * (1.0 + p.duration_jitter * u(rng)));
  }
  const double total = std::accumulate(w.begin(), w.end(), 0.0);
  std::vector<Segment> segs;
  std::vector<int> seen(static_cast<std::size_t>(p.num_actions + 1), 0);
  double t = 0.0;
  for (std::size_t s = 0; s < program.size(); ++s) {
    const double end = s + 1 == program.size() ? 1.0 : t + w[s] / total;
    segs.push_back({program[s], seen[static_cast<std::size_t>(program[s])]++, t, end});
    t = end;
  }
  return segs;
}

}  // namespace detail

/// Replaces a fraction of frames with noise orthogonal to every prototype,
/// scaled to the mean frame norm. Returns the replaced frame indices.
inline std::vector<Index> inject_outliers(FeatureSequence& x, const Matrix& prototypes, double rate,
                                          std::mt19937_64& rng) {
  if (!(rate >= 0.0 && rate <= 1.0)) throw ConfigError("inject_outliers: rate must lie in [0, 1]");
  if (prototypes.cols() != x.cols()) throw DimensionError("inject_outliers: prototype dimension mismatch");
  const Matrix q = detail::prototype_basis(prototypes);
  const double scale = x.rowwise().norm().mean();
  std::vector<Index> idx(static_cast<std::size_t>(x.rows()));
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto count = static_cast<std::size_t>(std::llround(rate * static_cast<double>(x.rows())));
  idx.resize(count);
  std::sort(idx.begin(), idx.end());
  for (Index i : idx) {
    Vector g = detail::gaussian_vector(rng, x.cols());
    g -= q * (q.transpose() * g);
    x.row(i) = (scale / g.norm()) * g.transpose();
  }
  return idx;
}

/// Frame of b matching each frame of a: same action occurrence, closest phase.
inline std::vector<Index> ground_truth_map(const SynthVideo& a, const SynthVideo& b,
                                           const std::vector<detail::Segment>& sa,
                                           const std::vector<detail::Segment>& sb, int background) {
  auto locate = [](const std::vector<detail::Segment>& segs, double t) {
    for (std::size_t s = 0; s < segs.size(); ++s)
      if (t < segs[s].end || s + 1 == segs.size()) return s;
    return segs.size() - 1;
  };
  const Index nb = b.features.rows();
  std::vector<Index> map(static_cast<std::size_t>(a.features.rows()), -1);
  for (Index i = 0; i < a.features.rows(); ++i) {
    const double t = a.progress[static_cast<std::size_t>(i)];
    const auto& seg = sa[locate(sa, t)];
    if (seg.label == background) continue;
    const double phase = (t - seg.start) / std::max(seg.end - seg.start, 1e-12);
    for (const auto& other : sb) {
      if (other.label != seg.label || other.occurrence != seg.occurrence) continue;
      const double target = other.start + phase * (other.end - other.start);
      Index best = -1;
      double best_d = 0.0;
      for (Index j = 0; j < nb; ++j) {
        const double tj = b.progress[static_cast<std::size_t>(j)];
        if (b.labels[static_cast<std::size_t>(j)] != seg.label) continue;
        if (tj < other.start || tj > other.end) continue;
        const double d = std::abs(tj - target);
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
      map[static_cast<std::size_t>(i)] = best;
      break;
    }
  }
  return map;
}

/// Renders a dataset from params. Deterministic in params.seed.
inline SynthDataset generate(const SynthParams& params) {
  params.validate();
  std::mt19937_64 rng(params.seed);
  SynthDataset ds;
  ds.params = params;
  const Index d = params.feature_dim;
  const int k = params.num_actions;
  ds.prototypes.resize(k, d);
  for (int a = 0; a < k; ++a) ds.prototypes.row(a) = detail::gaussian_vector(rng, d).transpose();
  for (int a = 0; a < k; ++a) {
    Matrix w = Matrix::Zero(params.walk_steps + 1, d);
    for (int s = 1; s <= params.walk_steps; ++s)
      w.row(s) = w.row(s - 1) + detail::gaussian_vector(rng, d, params.walk_scale).transpose();
    ds.walks.push_back(std::move(w));
  }
  const Matrix q = detail::prototype_basis(ds.prototypes);
  const double proto_norm = ds.prototypes.rowwise().norm().mean();

  std::vector<std::vector<detail::Segment>> layouts;
  std::uniform_int_distribution<int> length(params.min_length, params.max_length);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (int v = 0; v < params.num_videos; ++v) {
    SynthVideo video;
    char name[32];
    std::snprintf(name, sizeof(name), "video_%03d", v);
    video.name = name;
    video.program = detail::draw_program(params, rng);
    auto segs = detail::lay_out(params, video.program, rng);
    video.warp = params.warp * u(rng);
    const int n = length(rng);
    video.features.resize(n, d);
    video.labels.resize(static_cast<std::size_t>(n));
    video.progress.resize(static_cast<std::size_t>(n));
    std::size_t s = 0;
    for (int i = 0; i < n; ++i) {
      const double t0 = static_cast<double>(i) / static_cast<double>(n - 1);
      const double t = std::clamp(t0 + video.warp * std::sin(M_PI * t0), 0.0, 1.0);
      while (s + 1 < segs.size() && t >= segs[s].end) ++s;
      const auto& seg = segs[s];
      video.labels[static_cast<std::size_t>(i)] = seg.label;
      video.progress[static_cast<std::size_t>(i)] = t;
      Vector x;
      if (seg.label == k) {
        x = detail::gaussian_vector(rng, d);
        x -= q * (q.transpose() * x);
        x *= proto_norm / x.norm();
      } else {
        const double phase = std::clamp((t - seg.start) / std::max(seg.end - seg.start, 1e-12), 0.0, 1.0);
        const double pos = phase * params.walk_steps;
        const int lo = std::min(static_cast<int>(std::floor(pos)), params.walk_steps);
        const int hi = std::min(lo + 1, params.walk_steps);
        const double frac = pos - lo;
        const Matrix& w = ds.walks[static_cast<std::size_t>(seg.label)];
        x = ds.prototypes.row(seg.label).transpose() +
            params.motion * ((1.0 - frac) * w.row(lo) + frac * w.row(hi)).transpose();
      }
      for (Index c = 0; c < d; ++c) x[c] += params.noise * normal(rng);
      video.features.row(i) = x.transpose();
    }
    ds.videos.push_back(std::move(video));
    layouts.push_back(std::move(segs));
  }

  std::vector<Index> order(static_cast<std::size_t>(params.num_videos));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_val = static_cast<std::size_t>(std::ceil(params.val_fraction * params.num_videos));
  if (n_val >= order.size()) n_val = order.size() - 1;
  ds.train.assign(order.begin(), order.end() - static_cast<std::ptrdiff_t>(n_val));
  ds.val.assign(order.end() - static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(ds.train.begin(), ds.train.end());
  std::sort(ds.val.begin(), ds.val.end());

  // Evaluation pairs among held-out videos (all videos when fewer than two).
  const std::vector<Index>& pool = ds.val.size() >= 2 ? ds.val : order;
  std::vector<std::pair<Index, Index>> candidates;
  for (std::size_t i = 0; i < pool.size(); ++i)
    for (std::size_t j = i + 1; j < pool.size(); ++j) candidates.emplace_back(pool[i], pool[j]);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  if (candidates.size() > static_cast<std::size_t>(params.num_pairs)) candidates.resize(static_cast<std::size_t>(params.num_pairs));
  std::sort(candidates.begin(), candidates.end());
  for (const auto& [a, b] : candidates) {
    GroundTruthPair gt{a, b,
                       ground_truth_map(ds.videos[static_cast<std::size_t>(a)], ds.videos[static_cast<std::size_t>(b)],
                                        layouts[static_cast<std::size_t>(a)], layouts[static_cast<std::size_t>(b)], k)};
    ds.pairs.push_back(std::move(gt));
  }
  ds.validate();
  return ds;
}

}  // namespace vaot
