#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "vaot/evaluate.hpp"
#include "vaot/io/key_value.hpp"

namespace vaot {

/// Everything a CLI run can be configured with. Every field has a default.
struct RunConfig {
  std::uint64_t seed = 0;
  SynthParams synth;
  TrainConfig train;  // also carries prior, solver, align and segmentation settings
  MatchingScope matching = MatchingScope::PerVideo;
  std::string dataset_dir = "dataset";
  std::string output_dir = "run";
  std::string checkpoint = "run/model.ckpt";

  void validate() const {
    synth.validate();
    train.validate();
  }
};

namespace detail {

inline std::string fmt(double v) { return io::format_double(v); }

inline double to_double(const std::string& key, const std::string& v) {
  try {
    return io::parse_double(v, "<config>", 0);
  } catch (const ParseError&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
  }
}

inline long long to_integer(const std::string& key, const std::string& v) {
  try {
    return io::parse_integer(v, "<config>", 0);
  } catch (const ParseError&) {
    throw ConfigError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected true|false, got '" + v + "'");
}

template <class E, class Parse>
E to_enum(const std::string& key, const std::string& v, Parse parse) {
  try {
    return parse(v);
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

}  // namespace detail

/// One configurable key: how to print it and how to set it.
struct ConfigKey {
  std::string name;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

inline const std::vector<ConfigKey>& config_keys() {
  using detail::fmt;
  using detail::to_bool;
  using detail::to_double;
  using detail::to_integer;
  using R = RunConfig;
  using S = std::string;
#define VAOT_REAL(key, field)                                                     \
  ConfigKey { key, [](const R& c) { return fmt(c.field); },                       \
              [](R& c, const S& v) { c.field = to_double(key, v); } }
#define VAOT_INT(key, field, type)                                                 \
  ConfigKey { key, [](const R& c) { return std::to_string(c.field); },             \
              [](R& c, const S& v) { c.field = static_cast<type>(to_integer(key, v)); } }
#define VAOT_BOOL(key, field)                                                      \
  ConfigKey { key, [](const R& c) { return S(c.field ? "true" : "false"); },       \
              [](R& c, const S& v) { c.field = to_bool(key, v); } }
#define VAOT_TEXT(key, field)                                                      \
  ConfigKey { key, [](const R& c) { return c.field; }, [](R& c, const S& v) { c.field = v; } }
#define VAOT_ENUM(key, field, parse)                                               \
  ConfigKey { key, [](const R& c) { return S(to_string(c.field)); },               \
              [](R& c, const S& v) { c.field = detail::to_enum<decltype(c.field)>(key, v, parse); } }

  static const std::vector<ConfigKey> keys = {
      VAOT_INT("seed", seed, std::uint64_t),
      VAOT_TEXT("paths.dataset", dataset_dir),
      VAOT_TEXT("paths.output", output_dir),
      VAOT_TEXT("paths.checkpoint", checkpoint),
      // prior
      VAOT_REAL("prior.radius", train.prior.radius),
      VAOT_REAL("prior.rho", train.prior.rho),
      VAOT_REAL("prior.zeta", train.prior.zeta),
      // solver
      VAOT_REAL("solver.alpha", train.solver.alpha),
      VAOT_REAL("solver.epsilon", train.solver.epsilon),
      VAOT_REAL("solver.step_size", train.solver.step_size),
      VAOT_INT("solver.outer_iters", train.solver.outer_iters, int),
      VAOT_INT("solver.inner_iters", train.solver.inner_sinkhorn_iters, int),
      VAOT_INT("solver.final_sinkhorn_iters", train.solver.final_sinkhorn_iters, int),
      VAOT_REAL("solver.tol", train.solver.tol),
      VAOT_REAL("solver.sinkhorn_tol", train.solver.sinkhorn_tol),
      VAOT_ENUM("solver.marginal_mode", train.solver.marginal_mode, ot::parse_marginal_mode),
      VAOT_REAL("solver.lambda_p", train.solver.lambda_p),
      VAOT_REAL("solver.lambda_q", train.solver.lambda_q),
      // alignment
      VAOT_REAL("align.tau", train.align.tau),
      VAOT_BOOL("align.use_virtual", train.align.use_virtual),
      ConfigKey{"align.virtual_cost",
                [](const R& c) { return c.train.align.virtual_cost ? fmt(*c.train.align.virtual_cost) : S("mean"); },
                [](R& c, const S& v) {
                  if (v == "mean") {
                    c.train.align.virtual_cost.reset();
                  } else {
                    c.train.align.virtual_cost = to_double("align.virtual_cost", v);
                  }
                }},
      VAOT_BOOL("align.row_normalize_targets", train.align.row_normalize_targets),
      // segmentation
      VAOT_REAL("seg.lambda_act", train.lambda_act),
      VAOT_ENUM("seg.action_prior", train.action_prior, parse_action_prior_rule),
      // training
      VAOT_INT("train.seed", train.seed, std::uint64_t),
      VAOT_ENUM("train.mode", train.mode, parse_train_mode),
      VAOT_REAL("train.learning_rate", train.adam.learning_rate),
      VAOT_REAL("train.weight_decay", train.adam.weight_decay),
      VAOT_INT("train.batch_pairs", train.batch_pairs, int),
      VAOT_INT("train.epochs", train.epochs, int),
      VAOT_INT("train.frames_per_clip", train.frames_per_clip, int),
      VAOT_INT("train.hidden_dim", train.hidden_dim, int),
      VAOT_INT("train.embed_dim", train.embed_dim, int),
      VAOT_ENUM("train.activation", train.activation, parse_activation),
      VAOT_REAL("joint.w_align", train.weights.w_align),
      VAOT_REAL("joint.w_seg", train.weights.w_seg),
      // evaluation
      VAOT_ENUM("eval.matching", matching, parse_matching_scope),
      // synthetic data
      VAOT_INT("synth.seed", synth.seed, std::uint64_t),
      VAOT_INT("synth.num_videos", synth.num_videos, int),
      VAOT_INT("synth.num_actions", synth.num_actions, int),
      VAOT_INT("synth.feature_dim", synth.feature_dim, int),
      VAOT_INT("synth.min_length", synth.min_length, int),
      VAOT_INT("synth.max_length", synth.max_length, int),
      VAOT_REAL("synth.noise", synth.noise),
      VAOT_REAL("synth.motion", synth.motion),
      VAOT_INT("synth.walk_steps", synth.walk_steps, int),
      VAOT_REAL("synth.walk_scale", synth.walk_scale),
      VAOT_REAL("synth.warp", synth.warp),
      VAOT_REAL("synth.duration_jitter", synth.duration_jitter),
      VAOT_REAL("synth.background_rate", synth.background_rate),
      VAOT_REAL("synth.background_weight", synth.background_weight),
      VAOT_REAL("synth.permute_prob", synth.permute_prob),
      VAOT_REAL("synth.repeat_prob", synth.repeat_prob),
      VAOT_INT("synth.num_pairs", synth.num_pairs, int),
      VAOT_REAL("synth.val_fraction", synth.val_fraction),
  };
#undef VAOT_REAL
#undef VAOT_INT
#undef VAOT_BOOL
#undef VAOT_TEXT
#undef VAOT_ENUM
  return keys;
}

/// Sets one key; unknown keys raise ConfigError naming the key.
inline void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  for (const auto& k : config_keys()) {
    if (k.name == key) {
      k.set(cfg, value);
      return;
    }
  }
  throw ConfigError("unknown config key '" + key + "'");
}

inline void apply_key_values(RunConfig& cfg, const io::KeyValues& kv) {
  for (const auto& [k, v] : kv) set_config_value(cfg, k, v);
}

/// `seed` also seeds training and synthesis unless they are set explicitly.
inline RunConfig load_run_config(const std::optional<std::string>& path, const io::KeyValues& overrides = {}) {
  io::KeyValues all;
  if (path) all = io::read_key_values(*path);
  all.insert(all.end(), overrides.begin(), overrides.end());
  RunConfig cfg;
  bool synth_seed = false, train_seed = false;
  for (const auto& [k, v] : all) {
    if (k == "synth.seed") synth_seed = true;
    if (k == "train.seed") train_seed = true;
  }
  apply_key_values(cfg, all);
  if (!synth_seed) cfg.synth.seed = cfg.seed;
  if (!train_seed) cfg.train.seed = cfg.seed;
  cfg.validate();
  return cfg;
}

/// Every key with its effective value, in registry order.
inline io::KeyValues serialize_config(const RunConfig& cfg, const std::string& prefix = "") {
  io::KeyValues out;
  for (const auto& k : config_keys())
    if (k.name.rfind(prefix, 0) == 0) out.emplace_back(k.name, k.get(cfg));
  return out;
}

}  // namespace vaot
