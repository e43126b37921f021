// vaot: synthetic data, pairwise alignment, training and evaluation.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "vaot/vaot.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitRuntime = 2;

/// Thrown for config problems discovered while loading, so they map to exit 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Options shared by every subcommand.
struct CommonOptions {
  std::string config;
  std::vector<std::string> sets;
  vaot::io::KeyValues flags;  // convenience flags, applied after --set
};

void add_common(CLI::App* cmd, CommonOptions& o) {
  cmd->add_option("--config", o.config, "key = value config file (default: $VAOT_CONFIG)");
  cmd->add_option("--set", o.sets, "override one config key, key=value (repeatable)");
}

/// A flag that overrides one config key when given.
void add_key_flag(CLI::App* cmd, CommonOptions& o, const std::string& flag, const std::string& key,
                  const std::string& help) {
  cmd->add_option_function<std::string>(
      flag, [&o, key](const std::string& v) { o.flags.emplace_back(key, v); }, help + " (" + key + ")");
}

vaot::RunConfig load_config(const CommonOptions& o) {
  std::optional<std::string> path;
  if (!o.config.empty()) {
    path = o.config;
  } else if (const char* env = std::getenv("VAOT_CONFIG"); env != nullptr && *env != '\0') {
    path = std::string(env);
  }
  vaot::io::KeyValues overrides;
  for (const auto& s : o.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + s + "'");
    overrides.emplace_back(vaot::io::trim(s.substr(0, eq)), vaot::io::trim(s.substr(eq + 1)));
  }
  overrides.insert(overrides.end(), o.flags.begin(), o.flags.end());
  try {
    return vaot::load_run_config(path, overrides);
  } catch (const vaot::ParseError& e) {
    throw UsageError(e.what());
  } catch (const vaot::IoError& e) {
    throw UsageError(e.what());
  }
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw vaot::IoError("cannot create " + dir + ": " + ec.message());
}

void write_json(const std::string& path, const ordered_json& j) {
  auto os = vaot::io::open_for_write(path);
  os << j.dump(2) << '\n';
  if (!os) throw vaot::IoError("failed while writing " + path);
}

std::string key_of(double f) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", f);
  return buf;
}

ordered_json report_json(const vaot::MetricReport& r) {
  ordered_json j;
  ordered_json acc = ordered_json::object();
  for (const auto& [f, v] : r.acc_at) acc[key_of(f)] = v;
  ordered_json ap = ordered_json::object();
  for (const auto& [k, v] : r.ap_at) ap[std::to_string(k)] = v;
  j["acc_at"] = acc;
  j["progress_r2"] = r.progress_r2;
  j["kendall_tau"] = r.kendall_tau;
  j["ap_at"] = ap;
  j["mof"] = r.mof;
  j["f1"] = r.f1;
  j["miou"] = r.miou;
  j["matching"] = vaot::to_string(r.matching);
  j["num_pairs"] = r.num_pairs;
  j["skipped_classes"] = r.skipped_classes;
  j["progress_ridge"] = r.progress_ridge;
  return j;
}

// ------------------------------------------------------------------ synth

int cmd_synth(const CommonOptions& o, const std::string& out) {
  vaot::RunConfig cfg = load_config(o);
  const std::string dir = out.empty() ? cfg.dataset_dir : out;
  const vaot::SynthDataset data = vaot::generate(cfg.synth);
  vaot::io::write_dataset(data, dir);
  long long frames = 0;
  for (const auto& v : data.videos) frames += v.features.rows();
  ordered_json j;
  j["dataset"] = dir;
  j["seed"] = cfg.synth.seed;
  j["num_videos"] = data.videos.size();
  j["num_actions"] = cfg.synth.num_actions;
  j["feature_dim"] = cfg.synth.feature_dim;
  j["frames"] = frames;
  j["train_videos"] = data.train.size();
  j["val_videos"] = data.val.size();
  j["pairs"] = data.pairs.size();
  j["has_background"] = data.has_background();
  std::cout << j.dump() << std::endl;
  return kExitOk;
}

// ------------------------------------------------------------------ solve

int cmd_solve(const CommonOptions& o, const std::string& x_path, const std::string& y_path, const std::string& out,
              bool no_header) {
  vaot::RunConfig cfg = load_config(o);
  const std::string dir = out.empty() ? cfg.output_dir : out;
  vaot::AlignProblem prob;
  prob.x = vaot::io::read_matrix_csv(x_path, !no_header);
  prob.y = vaot::io::read_matrix_csv(y_path, !no_header);
  prob.prior = cfg.train.prior;
  prob.solver = cfg.train.solver;
  prob.align = cfg.train.align;
  const vaot::AlignTargets t = vaot::compute_pseudo_labels(prob);
  ensure_dir(dir);

  const fs::path root(dir);
  vaot::io::write_matrix_csv((root / "coupling.csv").string(), t.plan, vaot::io::numbered_header("j", t.plan.cols()));
  {
    auto os = vaot::io::open_for_write((root / "correspondences.csv").string());
    os << "i,j\n";
    for (std::size_t i = 0; i < t.matches.rows.size(); ++i) {
      os << i << ',';
      if (t.matches.rows[i]) {
        os << *t.matches.rows[i];
      } else {
        os << "VIRTUAL";
      }
      os << '\n';
    }
  }
  ordered_json j;
  j["n"] = prob.x.rows();
  j["m"] = prob.y.rows();
  j["iterations"] = t.report.iterations;
  j["converged"] = t.report.converged;
  j["objective"] = t.report.objectives.empty() ? 0.0 : t.report.objectives.back();
  j["objectives"] = t.report.objectives;
  j["final_change"] = t.report.final_change;
  j["marginal_error"] = t.report.marginal_error;
  j["sinkhorn_iterations"] = t.report.sinkhorn_iterations;
  j["virtual_rows"] = t.matches.virtual_rows();
  j["virtual_cols"] = t.matches.virtual_cols();
  write_json((root / "report.json").string(), j);
  std::cout << j.dump() << std::endl;
  return kExitOk;
}

// ------------------------------------------------------------------ train

int cmd_train(const CommonOptions& o, const std::string& dataset, const std::string& checkpoint,
              const std::string& out) {
  vaot::RunConfig cfg = load_config(o);
  const std::string data_dir = dataset.empty() ? cfg.dataset_dir : dataset;
  const std::string dir = out.empty() ? cfg.output_dir : out;
  const std::string ckpt = checkpoint.empty() ? cfg.checkpoint : checkpoint;
  const vaot::SynthDataset data = vaot::io::read_dataset(data_dir);
  ensure_dir(dir);
  if (const auto parent = fs::path(ckpt).parent_path(); !parent.empty()) ensure_dir(parent.string());

  const vaot::TrainResult res = vaot::train(data, cfg.train, [](const vaot::TrainLogRow& row) {
    if (row.step % 50 == 0) {
      std::fprintf(stderr, "step %lld epoch %d loss %.6f\n", row.step, row.epoch, row.loss_total);
    }
  });
  vaot::save_checkpoint(res.model, ckpt);
  {
    auto os = vaot::io::open_for_write((fs::path(dir) / "train_log.csv").string());
    os << "step,epoch,loss_total,loss_align,loss_seg\n";
    for (const auto& r : res.log) {
      os << r.step << ',' << r.epoch << ',' << vaot::io::format_double(r.loss_total) << ','
         << vaot::io::format_double(r.loss_align) << ',' << vaot::io::format_double(r.loss_seg) << '\n';
    }
  }
  vaot::io::write_key_values((fs::path(dir) / "config_used.txt").string(), vaot::serialize_config(cfg));
  ordered_json j;
  j["checkpoint"] = ckpt;
  j["steps"] = res.log.size();
  j["mode"] = vaot::to_string(cfg.train.mode);
  j["final_loss"] = res.log.empty() ? 0.0 : res.log.back().loss_total;
  std::cout << j.dump() << std::endl;
  return kExitOk;
}

// ------------------------------------------------------------------- eval

void write_plot_data(const std::string& dir, const vaot::EncoderModel& model, const vaot::SynthDataset& data,
                     const vaot::EvalConfig& ecfg) {
  ensure_dir(dir);
  const auto emb = vaot::embed_all(model, data);
  for (std::size_t k = 0; k < data.pairs.size(); ++k) {
    const auto& p = data.pairs[k];
    const auto nn = vaot::nearest_neighbour_alignment(emb[static_cast<std::size_t>(p.a)], emb[static_cast<std::size_t>(p.b)]);
    char name[48];
    std::snprintf(name, sizeof(name), "alignment_%03zu.csv", k);
    auto os = vaot::io::open_for_write((fs::path(dir) / name).string());
    os << "i,j_pred,j_true\n";
    for (const auto& [i, j] : nn) os << i << ',' << j << ',' << p.map[static_cast<std::size_t>(i)] << '\n';
  }
  const std::vector<vaot::Index>& ids = data.val.empty() ? data.train : data.val;
  const auto pred = vaot::segment_videos(model, data, emb, ids, ecfg);
  auto os = vaot::io::open_for_write((fs::path(dir) / "segmentation.csv").string());
  os << "video,frame,pred,true\n";
  for (std::size_t v = 0; v < ids.size(); ++v) {
    const auto& video = data.videos[static_cast<std::size_t>(ids[v])];
    for (std::size_t i = 0; i < video.labels.size(); ++i)
      os << video.name << ',' << i << ',' << pred[v][i] << ',' << video.labels[i] << '\n';
  }
}

int cmd_eval(const CommonOptions& o, const std::string& dataset, const std::string& checkpoint, const std::string& out,
             const std::string& plot_dir) {
  vaot::RunConfig cfg = load_config(o);
  const std::string data_dir = dataset.empty() ? cfg.dataset_dir : dataset;
  const std::string ckpt = checkpoint.empty() ? cfg.checkpoint : checkpoint;
  const std::string out_path = out.empty() ? (fs::path(cfg.output_dir) / "metrics.json").string() : out;
  const vaot::EncoderModel model = vaot::load_checkpoint(ckpt);
  const vaot::SynthDataset data = vaot::io::read_dataset(data_dir);
  if (!data.videos.empty() && data.videos.front().features.cols() != model.input_dim()) {
    throw vaot::DimensionError("checkpoint expects " + std::to_string(model.input_dim()) + " input features, dataset has " +
                               std::to_string(data.videos.front().features.cols()));
  }
  vaot::EvalConfig ecfg;
  ecfg.matching = cfg.matching;
  ecfg.seed = cfg.train.seed;
  ecfg.seg = cfg.train.seg_config();
  const vaot::MetricReport r = vaot::evaluate(model, data, ecfg);
  const ordered_json j = report_json(r);
  if (const auto parent = fs::path(out_path).parent_path(); !parent.empty()) ensure_dir(parent.string());
  write_json(out_path, j);
  if (!plot_dir.empty()) write_plot_data(plot_dir, model, data, ecfg);
  std::cout << j.dump(2) << std::endl;
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"vaot: fused Gromov-Wasserstein alignment and segmentation of feature sequences"};
  app.require_subcommand(1);

  CommonOptions synth_o, solve_o, train_o, eval_o;
  std::string synth_out, solve_out, train_out, eval_out;
  std::string x_path, y_path, train_dataset, eval_dataset, train_ckpt, eval_ckpt, plot_dir;
  bool no_header = false;

  auto* synth = app.add_subcommand("synth", "generate a synthetic dataset directory");
  add_common(synth, synth_o);
  add_key_flag(synth, synth_o, "--seed", "synth.seed", "generator seed");
  synth->add_option("--out", synth_out, "dataset directory (default: paths.dataset)");

  auto* solve = app.add_subcommand("solve", "align two feature sequences");
  add_common(solve, solve_o);
  solve->add_option("x", x_path, "features of X (CSV, one frame per row)")->required();
  solve->add_option("y", y_path, "features of Y (CSV, one frame per row)")->required();
  solve->add_option("--out", solve_out, "output directory (default: paths.output)");
  solve->add_flag("--no-header", no_header, "feature files have no header row");
  add_key_flag(solve, solve_o, "--alpha", "solver.alpha", "structure weight");
  add_key_flag(solve, solve_o, "--epsilon", "solver.epsilon", "entropy weight");
  add_key_flag(solve, solve_o, "--rho", "prior.rho", "temporal prior weight");
  add_key_flag(solve, solve_o, "--radius", "prior.radius", "neighbourhood radius");
  add_key_flag(solve, solve_o, "--zeta", "prior.zeta", "virtual-frame threshold");

  auto* trn = app.add_subcommand("train", "train an encoder on a dataset directory");
  add_common(trn, train_o);
  trn->add_option("--dataset", train_dataset, "dataset directory (default: paths.dataset)");
  trn->add_option("--checkpoint", train_ckpt, "checkpoint to write (default: paths.checkpoint)");
  trn->add_option("--out", train_out, "directory for train_log.csv (default: paths.output)");
  add_key_flag(trn, train_o, "--mode", "train.mode", "AlignOnly|SegOnly|Joint");
  add_key_flag(trn, train_o, "--epochs", "train.epochs", "epochs");
  add_key_flag(trn, train_o, "--seed", "train.seed", "training seed");

  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset directory");
  add_common(ev, eval_o);
  ev->add_option("--dataset", eval_dataset, "dataset directory (default: paths.dataset)");
  ev->add_option("--checkpoint", eval_ckpt, "checkpoint to load (default: paths.checkpoint)");
  ev->add_option("--out", eval_out, "metrics JSON path (default: <paths.output>/metrics.json)");
  ev->add_option("--plot-data", plot_dir, "also write per-pair and per-video CSVs to this directory");
  add_key_flag(ev, eval_o, "--matching", "eval.matching", "per-video|full-dataset");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (synth->parsed()) return cmd_synth(synth_o, synth_out);
    if (solve->parsed()) return cmd_solve(solve_o, x_path, y_path, solve_out, no_header);
    if (trn->parsed()) return cmd_train(train_o, train_dataset, train_ckpt, train_out);
    if (ev->parsed()) return cmd_eval(eval_o, eval_dataset, eval_ckpt, eval_out, plot_dir);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vaot::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const vaot::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return kExitRuntime;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitUsage;
}
