#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "vaot/io/dataset_io.hpp"
#include "vaot/synth.hpp"

using namespace vaot;

namespace {

SynthParams small_params() {
  SynthParams p;
  p.num_videos = 6;
  p.num_actions = 4;
  p.feature_dim = 10;
  p.min_length = 30;
  p.max_length = 40;
  p.num_pairs = 3;
  p.val_fraction = 0.5;
  return p;
}

std::string temp_dir(const std::string& name) {
  const auto d = std::filesystem::temp_directory_path() / ("vaot_test_" + name);
  std::filesystem::remove_all(d);
  return d.string();
}

}  // namespace

TEST(Synth, DeterministicInSeed) {
  const SynthDataset a = generate(small_params());
  const SynthDataset b = generate(small_params());
  ASSERT_EQ(a.videos.size(), b.videos.size());
  for (std::size_t v = 0; v < a.videos.size(); ++v) {
    EXPECT_EQ(a.videos[v].features, b.videos[v].features);
    EXPECT_EQ(a.videos[v].labels, b.videos[v].labels);
  }
  SynthParams p = small_params();
  p.seed = 8;
  EXPECT_NE(generate(p).videos[0].features, a.videos[0].features);
}

TEST(Synth, ShapesSplitsAndLabels) {
  const SynthParams p = small_params();
  const SynthDataset d = generate(p);
  ASSERT_EQ(d.videos.size(), 6u);
  std::set<Index> seen;
  for (Index v : d.train) seen.insert(v);
  for (Index v : d.val) EXPECT_TRUE(seen.insert(v).second) << "video in both splits";
  EXPECT_EQ(seen.size(), 6u);
  EXPECT_EQ(d.val.size(), 3u);
  EXPECT_EQ(d.pairs.size(), 3u);
  for (const auto& v : d.videos) {
    EXPECT_GE(v.features.rows(), p.min_length);
    EXPECT_LE(v.features.rows(), p.max_length);
    EXPECT_EQ(v.features.cols(), p.feature_dim);
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      EXPECT_GE(v.labels[i], 0);
      EXPECT_LT(v.labels[i], p.num_actions);  // no background at rate 0
      if (i > 0) EXPECT_GE(v.progress[i], v.progress[i - 1]);
    }
  }
  EXPECT_FALSE(d.has_background());
  EXPECT_EQ(d.num_classes(), 4);
}

TEST(Synth, CleanIdenticalVideosGiveIdentityMap) {
  SynthParams p = small_params();
  p.noise = 0.0;
  p.warp = 0.0;
  p.duration_jitter = 0.0;
  p.min_length = p.max_length = 35;
  const SynthDataset d = generate(p);
  ASSERT_FALSE(d.pairs.empty());
  for (const auto& pair : d.pairs) {
    EXPECT_EQ(d.videos[static_cast<std::size_t>(pair.a)].features, d.videos[static_cast<std::size_t>(pair.b)].features);
    for (std::size_t i = 0; i < pair.map.size(); ++i) EXPECT_EQ(pair.map[i], static_cast<Index>(i));
  }
}

TEST(Synth, BackgroundIsOrthogonalToPrototypes) {
  SynthParams p = small_params();
  p.background_rate = 1.0;
  p.noise = 0.0;
  const SynthDataset d = generate(p);
  EXPECT_TRUE(d.has_background());
  EXPECT_EQ(d.num_classes(), 5);
  int count = 0;
  for (const auto& v : d.videos) {
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      if (v.labels[i] != d.background_label()) continue;
      ++count;
      const Vector proj = d.prototypes * v.features.row(static_cast<Index>(i)).transpose();
      EXPECT_LT(proj.cwiseAbs().maxCoeff(), 1e-9);
    }
  }
  EXPECT_GT(count, 0);
  for (const auto& pair : d.pairs) {
    const auto& a = d.videos[static_cast<std::size_t>(pair.a)];
    for (std::size_t i = 0; i < pair.map.size(); ++i)
      if (a.labels[i] == d.background_label()) EXPECT_EQ(pair.map[i], -1);
  }
}

TEST(Synth, RepeatAndPermuteChangeTheProgram) {
  SynthParams p = small_params();
  p.repeat_prob = 1.0;
  for (const auto& v : generate(p).videos) {
    EXPECT_EQ(v.program.size(), 5u);
    EXPECT_EQ(std::set<int>(v.program.begin(), v.program.end()).size(), 4u);
  }
  p.repeat_prob = 0.0;
  p.permute_prob = 1.0;
  for (const auto& v : generate(p).videos) EXPECT_FALSE(std::is_sorted(v.program.begin(), v.program.end()));
}

TEST(Synth, RepeatedActionMapsToSameOccurrence) {
  SynthParams p = small_params();
  p.repeat_prob = 1.0;
  p.num_pairs = 10;
  const SynthDataset d = generate(p);
  for (const auto& pair : d.pairs) {
    const auto& a = d.videos[static_cast<std::size_t>(pair.a)];
    const auto& b = d.videos[static_cast<std::size_t>(pair.b)];
    for (std::size_t i = 0; i < pair.map.size(); ++i)
      if (pair.map[i] >= 0) EXPECT_EQ(a.labels[i], b.labels[static_cast<std::size_t>(pair.map[i])]);
  }
}

TEST(Synth, RejectsInvalidParams) {
  SynthParams p = small_params();
  p.warp = 0.5;
  EXPECT_THROW(generate(p), ConfigError);
  p = small_params();
  p.feature_dim = 4;
  EXPECT_THROW(generate(p), ConfigError);
  p = small_params();
  p.min_length = 50;
  EXPECT_THROW(generate(p), ConfigError);
}

TEST(Outliers, OrthogonalAndCounted) {
  const SynthDataset d = generate(small_params());
  FeatureSequence x = d.videos[0].features;
  std::mt19937_64 rng(1);
  const auto idx = inject_outliers(x, d.prototypes, 0.25, rng);
  EXPECT_EQ(static_cast<Index>(idx.size()), static_cast<Index>(std::llround(0.25 * static_cast<double>(x.rows()))));
  for (Index i : idx) {
    const Vector proj = d.prototypes * x.row(i).transpose();
    EXPECT_LT(proj.cwiseAbs().maxCoeff(), 1e-9);
  }
  EXPECT_THROW(inject_outliers(x, d.prototypes, 1.5, rng), ConfigError);
}

TEST(DatasetIo, RoundTrip) {
  SynthParams p = small_params();
  p.background_rate = 0.5;
  const SynthDataset d = generate(p);
  const std::string dir = temp_dir("dataset_roundtrip");
  io::write_dataset(d, dir);
  const SynthDataset r = io::read_dataset(dir);
  ASSERT_EQ(r.videos.size(), d.videos.size());
  for (std::size_t v = 0; v < d.videos.size(); ++v) {
    EXPECT_EQ(r.videos[v].name, d.videos[v].name);
    EXPECT_EQ(r.videos[v].features, d.videos[v].features);
    EXPECT_EQ(r.videos[v].labels, d.videos[v].labels);
    EXPECT_EQ(r.videos[v].progress, d.videos[v].progress);
    EXPECT_EQ(r.videos[v].program, d.videos[v].program);
  }
  EXPECT_EQ(r.train, d.train);
  EXPECT_EQ(r.val, d.val);
  EXPECT_EQ(r.prototypes, d.prototypes);
  EXPECT_EQ(r.params.seed, d.params.seed);
  EXPECT_EQ(r.params.warp, d.params.warp);
  ASSERT_EQ(r.pairs.size(), d.pairs.size());
  for (std::size_t k = 0; k < d.pairs.size(); ++k) {
    EXPECT_EQ(r.pairs[k].a, d.pairs[k].a);
    EXPECT_EQ(r.pairs[k].map, d.pairs[k].map);
  }
  std::filesystem::remove_all(dir);
}

TEST(DatasetIo, MalformedLabelNamesLine) {
  const SynthDataset d = generate(small_params());
  const std::string dir = temp_dir("dataset_bad");
  io::write_dataset(d, dir);
  const auto path = std::filesystem::path(dir) / "videos" / d.videos[0].name / "labels.csv";
  std::ifstream is(path);
  std::string header, first, rest;
  std::getline(is, header);
  std::getline(is, first);
  std::stringstream ss;
  ss << is.rdbuf();
  is.close();
  std::ofstream(path) << header << "\nx,0.5\n" << ss.str();
  try {
    io::read_dataset(dir);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2) << e.what();
  }
  EXPECT_THROW(io::read_dataset(dir + "_missing"), IoError);
  std::filesystem::remove_all(dir);
}
