#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "vaot/metrics.hpp"
#include "vaot/train.hpp"

namespace vaot {

struct MetricReport {
  std::map<double, double> acc_at;  // train fraction -> phase accuracy
  double progress_r2 = 0.0;
  double kendall_tau = 0.0;
  std::map<int, double> ap_at;      // K -> retrieval precision
  double mof = 0.0;
  double f1 = 0.0;
  double miou = 0.0;
  MatchingScope matching = MatchingScope::PerVideo;
  int num_pairs = 0;
  int skipped_classes = 0;   // classes absent from the smallest training subset
  bool progress_ridge = false;
};

struct EvalConfig {
  std::vector<double> fractions{0.1, 0.5, 1.0};
  std::vector<int> ap_ks{5, 10, 15};
  MatchingScope matching = MatchingScope::PerVideo;
  std::uint64_t seed = 0;
  SegConfig seg;
};

/// Nearest-neighbour alignment of a onto b in embedding space.
inline std::vector<std::pair<Index, Index>> nearest_neighbour_alignment(const Matrix& za, const Matrix& zb) {
  std::vector<std::pair<Index, Index>> out;
  for (Index i = 0; i < za.rows(); ++i) {
    Index j;
    (zb.rowwise() - za.row(i)).rowwise().squaredNorm().minCoeff(&j);
    out.emplace_back(i, j);
  }
  return out;
}

/// Per-video embeddings.
inline std::vector<Matrix> embed_all(const EncoderModel& model, const SynthDataset& data) {
  std::vector<Matrix> out;
  for (const auto& v : data.videos) out.push_back(encode(model, v.features));
  return out;
}

/// Segmentation labels for the given videos. Uses the model's centroids when
/// it has them, otherwise K-Means centroids fitted on the training embeddings.
inline std::vector<std::vector<int>> segment_videos(const EncoderModel& model, const SynthDataset& data,
                                                    const std::vector<Matrix>& emb, const std::vector<Index>& videos,
                                                    const EvalConfig& cfg) {
  ActionCentroids centroids = model.centroids;
  if (!model.has_centroids() || centroids.count() != data.num_classes()) {
    std::vector<FeatureSequence> pool;
    for (Index v : data.train.empty() ? data.val : data.train) pool.push_back(emb[static_cast<std::size_t>(v)]);
    centroids = init_centroids_kmeans(pool, data.num_classes(), cfg.seed);
  }
  std::vector<std::vector<int>> out;
  for (Index v : videos) out.push_back(segment_sequence(emb[static_cast<std::size_t>(v)], centroids, cfg.seg));
  return out;
}

/// Full metric suite. Phase classification and progress are fitted on the
/// training videos and scored on the held-out ones; alignment tau averages
/// the ground-truth pairs; retrieval queries held-out frames against the
/// training gallery; segmentation covers the held-out videos.
inline MetricReport evaluate(const EncoderModel& model, const SynthDataset& data, const EvalConfig& cfg) {
  const std::vector<Index>& train_ids = data.train.empty() ? data.val : data.train;
  const std::vector<Index>& test_ids = data.val.empty() ? data.train : data.val;
  if (train_ids.empty() || test_ids.empty()) throw ConfigError("evaluate: dataset has no videos");
  const auto emb = embed_all(model, data);

  auto stack = [&](const std::vector<Index>& ids, Matrix& m, std::vector<int>& labels, std::vector<double>& prog) {
    Index rows = 0;
    for (Index v : ids) rows += emb[static_cast<std::size_t>(v)].rows();
    m.resize(rows, model.output_dim());
    Index off = 0;
    for (Index v : ids) {
      const auto& e = emb[static_cast<std::size_t>(v)];
      m.middleRows(off, e.rows()) = e;
      off += e.rows();
      const auto& video = data.videos[static_cast<std::size_t>(v)];
      labels.insert(labels.end(), video.labels.begin(), video.labels.end());
      prog.insert(prog.end(), video.progress.begin(), video.progress.end());
    }
  };
  Matrix train_m, test_m;
  std::vector<int> train_l, test_l;
  std::vector<double> train_p, test_p;
  stack(train_ids, train_m, train_l, train_p);
  stack(test_ids, test_m, test_l, test_p);

  MetricReport r;
  r.matching = cfg.matching;
  for (double f : cfg.fractions) {
    int skipped = 0;
    r.acc_at[f] = phase_classification(train_m, train_l, test_m, test_l, f, cfg.seed, &skipped);
    r.skipped_classes = std::max(r.skipped_classes, skipped);
  }
  std::vector<Matrix> test_videos;
  std::vector<std::vector<double>> test_targets;
  for (Index v : test_ids) {
    test_videos.push_back(emb[static_cast<std::size_t>(v)]);
    test_targets.push_back(data.videos[static_cast<std::size_t>(v)].progress);
  }
  r.progress_r2 = phase_progress(train_m, train_p, test_videos, test_targets, &r.progress_ridge);

  double tau = 0.0;
  for (const auto& p : data.pairs) {
    tau += kendall_tau(nearest_neighbour_alignment(emb[static_cast<std::size_t>(p.a)], emb[static_cast<std::size_t>(p.b)]));
  }
  r.num_pairs = static_cast<int>(data.pairs.size());
  r.kendall_tau = data.pairs.empty() ? 0.0 : tau / static_cast<double>(data.pairs.size());

  for (int k : cfg.ap_ks) r.ap_at[k] = frame_retrieval_ap(test_m, test_l, train_m, train_l, k);

  const auto pred = segment_videos(model, data, emb, test_ids, cfg);
  std::vector<std::vector<int>> gt;
  for (Index v : test_ids) gt.push_back(data.videos[static_cast<std::size_t>(v)].labels);
  const SegmentationScores s = segmentation_metrics(pred, gt, data.num_classes(), cfg.matching);
  r.mof = s.mof;
  r.f1 = s.f1;
  r.miou = s.miou;
  return r;
}

}  // namespace vaot
