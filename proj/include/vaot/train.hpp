#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "vaot/encoder.hpp"
#include "vaot/synth.hpp"

namespace vaot {

enum class TrainMode { AlignOnly, SegOnly, Joint };

inline TrainMode parse_train_mode(const std::string& s) {
  if (s == "AlignOnly" || s == "align-only") return TrainMode::AlignOnly;
  if (s == "SegOnly" || s == "seg-only") return TrainMode::SegOnly;
  if (s == "Joint" || s == "joint") return TrainMode::Joint;
  throw ConfigError("unknown train mode '" + s + "' (expected AlignOnly|SegOnly|Joint)");
}

inline const char* to_string(TrainMode m) {
  switch (m) {
    case TrainMode::AlignOnly: return "AlignOnly";
    case TrainMode::SegOnly: return "SegOnly";
    case TrainMode::Joint: return "Joint";
  }
  return "?";
}

struct TrainConfig {
  AdamConfig adam;
  int batch_pairs = 1;
  int epochs = 30;
  int frames_per_clip = 40;
  std::uint64_t seed = 0;
  TrainMode mode = TrainMode::AlignOnly;
  JointWeights weights;
  int hidden_dim = 128;
  int embed_dim = 32;
  Activation activation = Activation::Tanh;
  // Pseudo-label settings.
  PriorConfig prior;
  ot::SolverConfig solver;
  AlignConfig align;
  double lambda_act = 0.05;
  ActionPriorRule action_prior = ActionPriorRule::OffDiagonal;

  SegConfig seg_config() const {
    SegConfig s;
    s.radius = prior.radius;
    s.lambda_act = lambda_act;
    s.tau = align.tau;
    s.action_prior = action_prior;
    s.solver = solver;
    return s;
  }

  void validate() const {
    adam.validate();
    if (batch_pairs < 1) throw ConfigError("train.batch_pairs must be >= 1");
    if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
    if (frames_per_clip < 2) throw ConfigError("train.frames_per_clip must be >= 2");
    if (hidden_dim < 1 || embed_dim < 1) throw ConfigError("train.hidden_dim and train.embed_dim must be >= 1");
    weights.validate();
    prior.validate();
    solver.validate();
    align.validate();
    seg_config().validate();
  }
};

struct TrainLogRow {
  long long step = 0;
  int epoch = 0;
  double loss_total = 0.0;
  double loss_align = 0.0;
  double loss_seg = 0.0;
};

struct TrainResult {
  EncoderModel model;
  std::vector<TrainLogRow> log;
};

/// Jittered uniform subsampling: one frame drawn from each of `count` equal
/// slices of [0, n). Returns every frame when n <= count.
inline std::vector<Index> subsample_frames(Index n, int count, std::mt19937_64& rng) {
  std::vector<Index> idx;
  if (n <= count) {
    for (Index i = 0; i < n; ++i) idx.push_back(i);
    return idx;
  }
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < count; ++k) {
    const double pos = (static_cast<double>(k) + u(rng)) * static_cast<double>(n) / static_cast<double>(count);
    idx.push_back(std::min<Index>(static_cast<Index>(pos), n - 1));
  }
  return idx;
}

inline Matrix gather_rows(const Matrix& m, const std::vector<Index>& rows) {
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

/// Uniform random pairing of the given videos for one epoch: shuffle and pair
/// neighbours; an odd one out is paired with a random partner.
inline std::vector<std::pair<Index, Index>> draw_pairs(std::vector<Index> ids, std::mt19937_64& rng) {
  std::vector<std::pair<Index, Index>> pairs;
  if (ids.size() < 2) return pairs;
  std::shuffle(ids.begin(), ids.end(), rng);
  for (std::size_t i = 0; i + 1 < ids.size(); i += 2) pairs.emplace_back(ids[i], ids[i + 1]);
  if (ids.size() % 2 == 1) {
    std::uniform_int_distribution<std::size_t> pick(0, ids.size() - 2);
    pairs.emplace_back(ids.back(), ids[pick(rng)]);
  }
  return pairs;
}

/// Losses and embedding gradients of one video pair under the configured mode.
struct PairLoss {
  double align = 0.0;
  double seg = 0.0;
  double total = 0.0;
  Matrix grad_x;          // dL/dZx
  Matrix grad_y;          // dL/dZy
  Matrix grad_centroids;  // dL/dA (D x K), empty when segmentation is off
};

inline PairLoss pair_loss(const FeatureSequence& zx, const FeatureSequence& zy, const ActionCentroids* centroids,
                          const TrainConfig& cfg) {
  PairLoss out;
  out.grad_x = Matrix::Zero(zx.rows(), zx.cols());
  out.grad_y = Matrix::Zero(zy.rows(), zy.cols());
  const bool joint = cfg.mode == TrainMode::Joint;
  const double w_align = joint ? cfg.weights.w_align : 1.0;
  const double w_seg = joint ? cfg.weights.w_seg : 1.0;
  const bool use_align = cfg.mode != TrainMode::SegOnly && w_align > 0.0;
  const bool use_seg = cfg.mode != TrainMode::AlignOnly && w_seg > 0.0;

  if (use_align) {
    AlignProblem prob{zx, zy, cfg.prior, cfg.solver, cfg.align};
    const AlignTargets t = compute_pseudo_labels(prob);  // constant targets
    const Matrix p = normalized_similarities(zx, zy, cfg.align.tau);
    out.align = alignment_loss(p, t.real_block, &t.row_keep, &t.col_keep, cfg.align.row_normalize_targets);
    auto [gx, gy] = alignment_loss_grad(p, t.real_block, zx, zy, cfg.align.tau, &t.row_keep, &t.col_keep,
                                        cfg.align.row_normalize_targets);
    out.grad_x += w_align * gx;
    out.grad_y += w_align * gy;
  }
  if (use_seg) {
    if (centroids == nullptr) throw ConfigError("segmentation loss needs action centroids");
    const SegConfig scfg = cfg.seg_config();
    const Matrix a = centroids->vectors.transpose();  // actions as a K x D sequence
    out.grad_centroids = Matrix::Zero(centroids->dim(), centroids->count());
    for (int side = 0; side < 2; ++side) {
      const FeatureSequence& z = side == 0 ? zx : zy;
      const Matrix t = seg_pseudo_labels(z, *centroids, scfg).plan;
      const Matrix p = normalized_similarities(z, a, scfg.tau);
      out.seg += seg_loss(p, t);
      auto [gz, ga] = alignment_loss_grad(p, t, z, a, scfg.tau);
      (side == 0 ? out.grad_x : out.grad_y) += w_seg * gz;
      out.grad_centroids += w_seg * ga.transpose();
    }
  }
  out.total = w_align * out.align + w_seg * out.seg;
  return out;
}

/// Self-supervised training: every step draws `batch_pairs` video pairs,
/// subsamples frames, recomputes pseudo-labels on the current embeddings and
/// takes one optimizer step on the averaged gradients.
inline TrainResult train(const SynthDataset& data, const TrainConfig& cfg,
                         const std::function<void(const TrainLogRow&)>& on_step = {}) {
  cfg.validate();
  std::vector<Index> ids = data.train.empty() ? data.val : data.train;
  if (ids.size() < 2) throw ConfigError("train: need at least two training videos");
  const Index d_in = data.videos.front().features.cols();

  TrainResult res;
  EncoderModel& model = res.model;
  model = init_encoder(d_in, cfg.hidden_dim, cfg.embed_dim, cfg.activation, cfg.seed);
  const bool seg = cfg.mode != TrainMode::AlignOnly;
  if (seg) {
    std::vector<FeatureSequence> emb;
    for (Index v : ids) emb.push_back(encode(model, data.videos[static_cast<std::size_t>(v)].features));
    model.centroids = init_centroids_kmeans(emb, data.num_classes(), cfg.seed);
  }
  AdamState state = AdamState::for_model(model);
  std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ULL);

  long long step = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto pairs = draw_pairs(ids, rng);
    for (std::size_t start = 0; start < pairs.size(); start += static_cast<std::size_t>(cfg.batch_pairs)) {
      const std::size_t stop = std::min(pairs.size(), start + static_cast<std::size_t>(cfg.batch_pairs));
      const double scale = 1.0 / static_cast<double>(stop - start);
      EncoderGrads grads = EncoderGrads::zeros_like(model);
      TrainLogRow row;
      row.step = ++step;
      row.epoch = epoch;
      for (std::size_t b = start; b < stop; ++b) {
        const auto& vx = data.videos[static_cast<std::size_t>(pairs[b].first)];
        const auto& vy = data.videos[static_cast<std::size_t>(pairs[b].second)];
        const Matrix rx = gather_rows(vx.features, subsample_frames(vx.features.rows(), cfg.frames_per_clip, rng));
        const Matrix ry = gather_rows(vy.features, subsample_frames(vy.features.rows(), cfg.frames_per_clip, rng));
        const Matrix zx = encode(model, rx);
        const Matrix zy = encode(model, ry);
        PairLoss pl;
        try {
          pl = pair_loss(zx, zy, seg ? &model.centroids : nullptr, cfg);
        } catch (const NumericalError& e) {
          throw NumericalError(std::string("pseudo-labels failed: ") + e.what(), static_cast<int>(step), "step");
        }
        grads += backward(model, rx, scale * pl.grad_x);
        grads += backward(model, ry, scale * pl.grad_y);
        if (seg && pl.grad_centroids.size() > 0) grads.centroids += scale * pl.grad_centroids;
        row.loss_total += scale * pl.total;
        row.loss_align += scale * pl.align;
        row.loss_seg += scale * pl.seg;
      }
      if (!std::isfinite(row.loss_total)) throw NumericalError("non-finite loss", static_cast<int>(step), "step");
      optimizer_step(model, grads, state, cfg.adam, step);
      res.log.push_back(row);
      if (on_step) on_step(row);
    }
  }
  return res;
}

}  // namespace vaot
