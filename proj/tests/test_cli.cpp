#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <string>

#include "oracles/oracles.hpp"
#include "vaot/vaot.hpp"

namespace fs = std::filesystem;
using namespace vaot;

namespace {

struct RunResult {
  int code = -1;
  std::string output;  // stdout and stderr
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    std::string tmpl = (fs::temp_directory_path() / "vaot_cli_XXXXXX").string();
    ASSERT_NE(mkdtemp(tmpl.data()), nullptr);
    dir_ = tmpl;
  }
  void TearDown() override { fs::remove_all(dir_); }

  RunResult run(const std::string& args, const std::string& env = "") const {
    const fs::path log = dir_ / "last.log";
    const std::string cmd = env + " " + VAOT_CLI_PATH + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
  }

  // Small dataset so the training runs stay quick.
  std::string synth(const std::string& name, int seed = 3, int dim = 32) const {
    const std::string out = (dir_ / name).string();
    const RunResult r = run("synth --out " + out + " --seed " + std::to_string(seed) +
                            " --set synth.num_videos=8 --set synth.feature_dim=" + std::to_string(dim));
    EXPECT_EQ(r.code, 0) << r.output;
    return out;
  }

  fs::path dir_;
};

void expect_same_tree(const fs::path& a, const fs::path& b) {
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    const fs::path rel = fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(b / rel)) << rel;
    if (e.is_regular_file()) {
      EXPECT_EQ(slurp(e.path()), slurp(b / rel)) << rel;
      ++files;
    }
  }
  EXPECT_GT(files, 0u);
}

}  // namespace

TEST_F(Cli, SynthWritesDatasetAndIsByteIdenticalPerSeed) {
  const std::string a = synth("a");
  const std::string b = synth("b");
  for (const char* f : {"gen_params.txt", "prototypes.csv", "splits.csv", "pairs.csv"}) {
    EXPECT_TRUE(fs::exists(fs::path(a) / f)) << f;
  }
  EXPECT_TRUE(fs::exists(fs::path(a) / "videos"));
  expect_same_tree(a, b);
  const auto data = io::read_dataset(a);
  EXPECT_EQ(data.videos.size(), 8u);
}

TEST_F(Cli, SynthSummaryIsOneJsonObject) {
  const RunResult r = run("synth --out " + (dir_ / "d").string() + " --set synth.num_videos=4");
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(r.output);
  EXPECT_EQ(j.at("num_videos"), 4);
}

TEST_F(Cli, UnknownConfigKeyExitsOneNamingTheKey) {
  std::ofstream(dir_ / "bad.txt") << "seed = 1\nsolver.epsilonn = 0.1\n";
  const RunResult r = run("synth --out " + (dir_ / "d").string() + " --config " + (dir_ / "bad.txt").string());
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.output.find("solver.epsilonn"), std::string::npos) << r.output;
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("synth --no-such-flag").code, 1);
  EXPECT_EQ(run("synth --set novalue").code, 1);
  EXPECT_EQ(run("synth --config " + (dir_ / "missing.txt").string()).code, 1);
  EXPECT_EQ(run("solve --alpha 2 x.csv y.csv").code, 1);
}

TEST_F(Cli, ConfigComesFromEnvironmentWhenNoFlagGiven) {
  std::ofstream(dir_ / "env.txt") << "synth.num_videos = 5\n";
  const RunResult r = run("synth --out " + (dir_ / "d").string(), "VAOT_CONFIG=" + (dir_ / "env.txt").string());
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_EQ(nlohmann::json::parse(r.output).at("num_videos"), 5);
}

TEST_F(Cli, SolveIdenticalFilesGivesIdentity) {
  const std::string data = synth("d");
  const fs::path x = fs::path(data) / "videos" / io::read_dataset(data).videos[0].name / "features.csv";
  const fs::path out = dir_ / "solve";
  const RunResult r = run("solve " + x.string() + " " + x.string() + " --out " + out.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const io::CsvTable c = io::read_csv((out / "correspondences.csv").string(), true);
  const Index n = io::read_matrix_csv(x.string()).rows();
  ASSERT_EQ(static_cast<Index>(c.rows.size()), n);
  for (Index i = 0; i < n; ++i) EXPECT_EQ(c.rows[static_cast<std::size_t>(i)][1], std::to_string(i));
  const Matrix t = io::read_matrix_csv((out / "coupling.csv").string());
  EXPECT_EQ(t.rows(), n + 1);
  EXPECT_EQ(t.cols(), n + 1);
  const auto report = nlohmann::json::parse(slurp(out / "report.json"));
  for (const char* k : {"iterations", "objective", "converged"}) EXPECT_TRUE(report.contains(k)) << k;
}

TEST_F(Cli, SolveWithoutStructureMatchesEntropicTransport) {
  std::mt19937_64 rng(17);
  const Matrix x = oracle::random_matrix(rng, 12, 4, -1, 1), y = oracle::random_matrix(rng, 9, 4, -1, 1);
  io::write_matrix_csv((dir_ / "x.csv").string(), x, io::numbered_header("f", 4));
  io::write_matrix_csv((dir_ / "y.csv").string(), y, io::numbered_header("f", 4));
  const fs::path out = dir_ / "solve";
  const RunResult r = run("solve " + (dir_ / "x.csv").string() + " " + (dir_ / "y.csv").string() + " --out " +
                          out.string() + " --alpha 0 --rho 0 --set align.use_virtual=false --set solver.tol=1e-12 " +
                          "--set solver.outer_iters=200");
  ASSERT_EQ(r.code, 0) << r.output;
  const Matrix t = io::read_matrix_csv((out / "coupling.csv").string());
  const Matrix ref = oracle::sinkhorn_log(visual_cost(x, y), Vector::Constant(12, 1.0 / 12), Vector::Constant(9, 1.0 / 9),
                                          ot::SolverConfig{}.epsilon);
  ASSERT_EQ(t.rows(), ref.rows());
  ASSERT_EQ(t.cols(), ref.cols());
  EXPECT_LT((t - ref).cwiseAbs().sum(), 1e-6);
}

TEST_F(Cli, SolveMalformedCsvReportsLine) {
  std::ofstream(dir_ / "x.csv") << "f0,f1\n1,2\n3,oops\n";
  const RunResult r = run("solve " + (dir_ / "x.csv").string() + " " + (dir_ / "x.csv").string() + " --out " +
                          (dir_ / "o").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find(":3"), std::string::npos) << r.output;
}

TEST_F(Cli, TrainThenEvalWritesDocumentedOutputs) {
  const std::string data = synth("d");
  const fs::path run_dir = dir_ / "run";
  const std::string ckpt = (run_dir / "model.ckpt").string();
  RunResult r = run("train --dataset " + data + " --checkpoint " + ckpt + " --out " + run_dir.string() + " --epochs 2");
  ASSERT_EQ(r.code, 0) << r.output;
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(run_dir / "config_used.txt"));
  const io::CsvTable log = io::read_csv((run_dir / "train_log.csv").string(), true);
  EXPECT_EQ(log.header, (std::vector<std::string>{"step", "epoch", "loss_total", "loss_align", "loss_seg"}));
  EXPECT_FALSE(log.rows.empty());

  const fs::path metrics = run_dir / "metrics.json";
  const fs::path plots = dir_ / "plots";
  r = run("eval --dataset " + data + " --checkpoint " + ckpt + " --out " + metrics.string() + " --plot-data " +
          plots.string());
  ASSERT_EQ(r.code, 0) << r.output;
  const auto j = nlohmann::json::parse(slurp(metrics));
  for (const char* k : {"0.1", "0.5", "1"}) {
    ASSERT_TRUE(j.at("acc_at").contains(k)) << k;
    EXPECT_GE(j["acc_at"][k].get<double>(), 0.0);
    EXPECT_LE(j["acc_at"][k].get<double>(), 1.0);
  }
  for (const char* k : {"5", "10", "15"}) ASSERT_TRUE(j.at("ap_at").contains(k)) << k;
  for (const char* k : {"mof", "f1", "miou"}) {
    EXPECT_GE(j.at(k).get<double>(), 0.0);
    EXPECT_LE(j.at(k).get<double>(), 1.0);
  }
  EXPECT_GE(j.at("kendall_tau").get<double>(), -1.0);
  EXPECT_LE(j.at("kendall_tau").get<double>(), 1.0);
  EXPECT_TRUE(j.at("progress_r2").is_number());
  EXPECT_EQ(j.at("matching"), "per-video");
  EXPECT_TRUE(j.at("num_pairs").is_number_integer());
  EXPECT_TRUE(j.at("skipped_classes").is_number_integer());
  EXPECT_TRUE(j.at("progress_ridge").is_boolean());
  EXPECT_TRUE(fs::exists(plots / "segmentation.csv"));
  EXPECT_TRUE(fs::exists(plots / "alignment_000.csv"));
}

TEST_F(Cli, JointWithoutSegmentationLogsLikeAlignOnly) {
  const std::string data = synth("d");
  const std::string common = "train --dataset " + data + " --epochs 2 --seed 5";
  ASSERT_EQ(run(common + " --mode Joint --set joint.w_seg=0 --out " + (dir_ / "j").string() + " --checkpoint " +
                (dir_ / "j.ckpt").string())
                .code,
            0);
  ASSERT_EQ(run(common + " --mode AlignOnly --out " + (dir_ / "a").string() + " --checkpoint " + (dir_ / "a.ckpt").string())
                .code,
            0);
  const io::CsvTable j = io::read_csv((dir_ / "j" / "train_log.csv").string(), true);
  const io::CsvTable a = io::read_csv((dir_ / "a" / "train_log.csv").string(), true);
  ASSERT_EQ(j.rows.size(), a.rows.size());
  for (std::size_t r = 0; r < j.rows.size(); ++r) {
    EXPECT_EQ(j.rows[r][2], a.rows[r][2]) << "step " << r;  // loss_total
    EXPECT_EQ(j.rows[r][3], a.rows[r][3]) << "step " << r;  // loss_align
  }
}

TEST_F(Cli, EvalIsDeterministicAndPerVideoMatchingIsNoWorse) {
  const std::string data = synth("d");
  const std::string ckpt = (dir_ / "m.ckpt").string();
  ASSERT_EQ(run("train --dataset " + data + " --checkpoint " + ckpt + " --out " + (dir_ / "t").string() + " --epochs 2")
                .code,
            0);
  const std::string eval = "eval --dataset " + data + " --checkpoint " + ckpt;
  ASSERT_EQ(run(eval + " --out " + (dir_ / "p1.json").string()).code, 0);
  ASSERT_EQ(run(eval + " --out " + (dir_ / "p2.json").string()).code, 0);
  ASSERT_EQ(run(eval + " --matching full-dataset --out " + (dir_ / "f.json").string()).code, 0);
  EXPECT_EQ(slurp(dir_ / "p1.json"), slurp(dir_ / "p2.json"));
  const auto per_video = nlohmann::json::parse(slurp(dir_ / "p1.json"));
  const auto full = nlohmann::json::parse(slurp(dir_ / "f.json"));
  EXPECT_EQ(full.at("matching"), "full-dataset");
  EXPECT_GE(per_video.at("mof").get<double>(), full.at("mof").get<double>());
}

TEST_F(Cli, EvalRejectsCheckpointWithOtherInputWidth) {
  const std::string data32 = synth("d32");
  const std::string data16 = synth("d16", 3, 16);
  const std::string ckpt = (dir_ / "m.ckpt").string();
  ASSERT_EQ(run("train --dataset " + data32 + " --checkpoint " + ckpt + " --out " + (dir_ / "t").string() + " --epochs 1")
                .code,
            0);
  const RunResult r = run("eval --dataset " + data16 + " --checkpoint " + ckpt + " --out " + (dir_ / "m.json").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("input features"), std::string::npos) << r.output;
}

TEST_F(Cli, MissingDatasetExitsTwo) {
  const RunResult r = run("train --dataset " + (dir_ / "nothing").string() + " --out " + (dir_ / "t").string());
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.output.find("nothing"), std::string::npos) << r.output;
}
