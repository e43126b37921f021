#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "vaot/segment.hpp"

namespace vaot {

enum class Activation { Tanh, Softsign, Identity };

inline Activation parse_activation(const std::string& s) {
  if (s == "tanh") return Activation::Tanh;
  if (s == "softsign") return Activation::Softsign;
  if (s == "identity") return Activation::Identity;
  throw ConfigError("unknown activation '" + s + "' (expected tanh|softsign|identity)");
}

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::Tanh: return "tanh";
    case Activation::Softsign: return "softsign";
    case Activation::Identity: return "identity";
  }
  return "?";
}

/// Two-layer map x -> act(x W1 + b1) W2 + b2 applied to every frame, plus
/// the action centroids trained alongside it (empty when unused).
struct EncoderModel {
  Matrix w1;  // D_in x H
  Vector b1;  // H
  Matrix w2;  // H x D
  Vector b2;  // D
  Activation activation = Activation::Tanh;
  ActionCentroids centroids;

  Index input_dim() const noexcept { return w1.rows(); }
  Index hidden_dim() const noexcept { return w1.cols(); }
  Index output_dim() const noexcept { return w2.cols(); }
  bool has_centroids() const noexcept { return centroids.vectors.size() > 0; }

  void validate() const {
    if (b1.size() != w1.cols() || w2.rows() != w1.cols() || b2.size() != w2.cols()) {
      throw DimensionError("encoder: inconsistent layer shapes w1 " + shape_string(w1) + ", w2 " + shape_string(w2));
    }
    if (has_centroids() && centroids.dim() != output_dim()) {
      throw DimensionError("encoder: centroid dimension " + std::to_string(centroids.dim()) + " vs embedding " +
                           std::to_string(output_dim()));
    }
  }

  bool all_parameters_finite() const {
    return all_finite(w1) && all_finite(b1) && all_finite(w2) && all_finite(b2) && all_finite(centroids.vectors);
  }
};

/// Gradients (or Adam moments) laid out like the model parameters.
struct EncoderGrads {
  Matrix w1;
  Vector b1;
  Matrix w2;
  Vector b2;
  Matrix centroids;  // D x K, empty when the model has none

  static EncoderGrads zeros_like(const EncoderModel& m) {
    return {Matrix::Zero(m.w1.rows(), m.w1.cols()), Vector::Zero(m.b1.size()), Matrix::Zero(m.w2.rows(), m.w2.cols()),
            Vector::Zero(m.b2.size()), Matrix::Zero(m.centroids.vectors.rows(), m.centroids.vectors.cols())};
  }

  EncoderGrads& operator+=(const EncoderGrads& o) {
    w1 += o.w1;
    b1 += o.b1;
    w2 += o.w2;
    b2 += o.b2;
    if (o.centroids.size() > 0) centroids += o.centroids;
    return *this;
  }
};

/// Xavier-uniform weights from a seed, zero biases.
inline EncoderModel init_encoder(Index input_dim, Index hidden_dim, Index output_dim, Activation act,
                                 std::uint64_t seed) {
  if (input_dim < 1 || hidden_dim < 1 || output_dim < 1) throw ConfigError("init_encoder: dimensions must be >= 1");
  std::mt19937_64 rng(seed);
  auto xavier = [&rng](Index r, Index c) {
    const double a = std::sqrt(6.0 / static_cast<double>(r + c));
    std::uniform_real_distribution<double> u(-a, a);
    Matrix w(r, c);
    for (Index i = 0; i < r; ++i)
      for (Index j = 0; j < c; ++j) w(i, j) = u(rng);
    return w;
  };
  EncoderModel m;
  m.w1 = xavier(input_dim, hidden_dim);
  m.b1 = Vector::Zero(hidden_dim);
  m.w2 = xavier(hidden_dim, output_dim);
  m.b2 = Vector::Zero(output_dim);
  m.activation = act;
  return m;
}

namespace detail {

inline Matrix activate(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Softsign: return (z.array() / (1.0 + z.array().abs())).matrix();
    case Activation::Identity: return z;
  }
  return z;
}

inline Matrix activate_derivative(const Matrix& z, Activation a) {
  switch (a) {
    case Activation::Tanh: return (1.0 - z.array().tanh().square()).matrix();
    case Activation::Softsign: return (1.0 + z.array().abs()).square().inverse().matrix();
    case Activation::Identity: return Matrix::Ones(z.rows(), z.cols());
  }
  return z;
}

inline void check_input(const EncoderModel& m, const FeatureSequence& raw) {
  if (raw.cols() != m.input_dim()) {
    throw DimensionError("encoder input dimension " + std::to_string(raw.cols()) + " does not match model " +
                         std::to_string(m.input_dim()));
  }
}

}  // namespace detail

inline FeatureSequence encode(const EncoderModel& m, const FeatureSequence& raw) {
  detail::check_input(m, raw);
  Matrix z = raw * m.w1;
  z.rowwise() += m.b1.transpose();
  Matrix out = detail::activate(z, m.activation) * m.w2;
  out.rowwise() += m.b2.transpose();
  return out;
}

/// Parameter gradients of a scalar loss given its gradient with respect to
/// encode(m, raw). The centroid block is left zero.
inline EncoderGrads backward(const EncoderModel& m, const FeatureSequence& raw, const Matrix& grad_embeddings) {
  detail::check_input(m, raw);
  if (grad_embeddings.rows() != raw.rows() || grad_embeddings.cols() != m.output_dim()) {
    throw DimensionError("backward: embedding gradient " + shape_string(grad_embeddings) + " vs " +
                         std::to_string(raw.rows()) + "x" + std::to_string(m.output_dim()));
  }
  Matrix z = raw * m.w1;
  z.rowwise() += m.b1.transpose();
  const Matrix h = detail::activate(z, m.activation);
  const Matrix gz = (grad_embeddings * m.w2.transpose()).cwiseProduct(detail::activate_derivative(z, m.activation));
  EncoderGrads g = EncoderGrads::zeros_like(m);
  g.w2 = h.transpose() * grad_embeddings;
  g.b2 = grad_embeddings.colwise().sum().transpose();
  g.w1 = raw.transpose() * gz;
  g.b1 = gz.colwise().sum().transpose();
  return g;
}

struct AdamConfig {
  double learning_rate = 1e-4;
  double weight_decay = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const {
    if (!(learning_rate >= 0.0)) throw ConfigError("learning_rate must be >= 0");
    if (!(weight_decay >= 0.0)) throw ConfigError("weight_decay must be >= 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
    if (!(eps > 0.0)) throw ConfigError("adam eps must be > 0");
  }
};

struct AdamState {
  EncoderGrads m;
  EncoderGrads v;
  long long t = 0;

  static AdamState for_model(const EncoderModel& model) {
    return {EncoderGrads::zeros_like(model), EncoderGrads::zeros_like(model), 0};
  }
};

namespace detail {

template <class P>
void adam_block(P& param, const P& grad, P& m, P& v, const AdamConfig& cfg, double bc1, double bc2) {
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const auto update = (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.eps);
  param = (param.array() * (1.0 - cfg.learning_rate * cfg.weight_decay) - cfg.learning_rate * update).matrix();
}

}  // namespace detail

/// One AdamW step: bias-corrected moments, weight decay decoupled from the
/// gradient. `step` is only used to name the step in errors.
inline void optimizer_step(EncoderModel& model, const EncoderGrads& grads, AdamState& state, const AdamConfig& cfg,
                           long long step) {
  cfg.validate();
  const bool finite = all_finite(grads.w1) && all_finite(grads.b1) && all_finite(grads.w2) && all_finite(grads.b2) &&
                      all_finite(grads.centroids);
  if (!finite) throw NumericalError("non-finite gradient", static_cast<int>(step), "step");
  if (grads.w1.rows() != model.w1.rows() || grads.w1.cols() != model.w1.cols() || grads.w2.cols() != model.w2.cols() ||
      state.m.w1.rows() != model.w1.rows() || state.m.w1.cols() != model.w1.cols() ||
      state.m.centroids.cols() != model.centroids.vectors.cols()) {
    throw DimensionError("optimizer_step: gradient or state shapes do not match the model");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  detail::adam_block(model.w1, grads.w1, state.m.w1, state.v.w1, cfg, bc1, bc2);
  detail::adam_block(model.b1, grads.b1, state.m.b1, state.v.b1, cfg, bc1, bc2);
  detail::adam_block(model.w2, grads.w2, state.m.w2, state.v.w2, cfg, bc1, bc2);
  detail::adam_block(model.b2, grads.b2, state.m.b2, state.v.b2, cfg, bc1, bc2);
  if (model.has_centroids()) {
    if (grads.centroids.cols() != model.centroids.count()) {
      throw DimensionError("optimizer_step: centroid gradient " + shape_string(grads.centroids));
    }
    detail::adam_block(model.centroids.vectors, grads.centroids, state.m.centroids, state.v.centroids, cfg, bc1, bc2);
  }
  if (!model.all_parameters_finite()) {
    throw NumericalError("non-finite parameter after update", static_cast<int>(step), "step");
  }
}

// Checkpoint: plain text.
//   VAOT-CHECKPOINT v1
//   activation <name>
//   then for each block in the order w1 b1 w2 b2 centroids:
//   <name> <rows> <cols>
//   <rows> lines of <cols> values (%.17g, row-major; vectors are 1 x n)

inline constexpr const char* kCheckpointMagic = "VAOT-CHECKPOINT";
inline constexpr int kCheckpointVersion = 1;

namespace detail {

inline void write_block(std::ostream& os, const char* name, const Matrix& m) {
  os << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  char buf[40];
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      if (j > 0) os << ' ';
      os << buf;
    }
    os << '\n';
  }
}

inline Matrix read_block(std::istream& is, const std::string& path, const char* expected) {
  std::string name;
  long long rows = -1, cols = -1;
  if (!(is >> name >> rows >> cols) || name != expected || rows < 0 || cols < 0) {
    throw IoError(path + ": checkpoint block '" + expected + "' missing or malformed");
  }
  Matrix m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j)
      if (!(is >> m(i, j))) throw IoError(path + ": checkpoint block '" + expected + "' is truncated");
  return m;
}

}  // namespace detail

inline void save_checkpoint(const EncoderModel& m, const std::string& path) {
  m.validate();
  std::ofstream os(path);
  if (!os) throw IoError("cannot write checkpoint " + path);
  os << kCheckpointMagic << " v" << kCheckpointVersion << '\n';
  os << "activation " << to_string(m.activation) << '\n';
  detail::write_block(os, "w1", m.w1);
  detail::write_block(os, "b1", m.b1.transpose());
  detail::write_block(os, "w2", m.w2);
  detail::write_block(os, "b2", m.b2.transpose());
  detail::write_block(os, "centroids", m.centroids.vectors);
  if (!os) throw IoError("failed while writing checkpoint " + path);
}

inline EncoderModel load_checkpoint(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open checkpoint " + path);
  std::string magic, version, key, act;
  if (!(is >> magic >> version) || magic != kCheckpointMagic) throw IoError(path + ": not a checkpoint file");
  if (version != "v" + std::to_string(kCheckpointVersion)) {
    throw IoError(path + ": unsupported checkpoint version " + version);
  }
  if (!(is >> key >> act) || key != "activation") throw IoError(path + ": missing activation line");
  EncoderModel m;
  try {
    m.activation = parse_activation(act);
  } catch (const ConfigError& e) {
    throw IoError(path + ": " + e.what());
  }
  m.w1 = detail::read_block(is, path, "w1");
  const Matrix b1 = detail::read_block(is, path, "b1");
  m.w2 = detail::read_block(is, path, "w2");
  const Matrix b2 = detail::read_block(is, path, "b2");
  m.centroids.vectors = detail::read_block(is, path, "centroids");
  if (b1.rows() != 1 || b2.rows() != 1) throw IoError(path + ": bias blocks must have one row");
  m.b1 = b1.row(0).transpose();
  m.b2 = b2.row(0).transpose();
  try {
    m.validate();
  } catch (const DimensionError& e) {
    throw IoError(path + ": " + e.what());
  }
  return m;
}

}  // namespace vaot
