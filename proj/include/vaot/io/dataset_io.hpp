#pragma once

#include <filesystem>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "vaot/io/csv.hpp"
#include "vaot/io/key_value.hpp"
#include "vaot/synth.hpp"

namespace vaot::io {

namespace detail {

inline KeyValues synth_params_to_kv(const SynthParams& p) {
  return {{"seed", std::to_string(p.seed)},
          {"num_videos", std::to_string(p.num_videos)},
          {"num_actions", std::to_string(p.num_actions)},
          {"feature_dim", std::to_string(p.feature_dim)},
          {"min_length", std::to_string(p.min_length)},
          {"max_length", std::to_string(p.max_length)},
          {"noise", format_double(p.noise)},
          {"motion", format_double(p.motion)},
          {"walk_steps", std::to_string(p.walk_steps)},
          {"walk_scale", format_double(p.walk_scale)},
          {"warp", format_double(p.warp)},
          {"duration_jitter", format_double(p.duration_jitter)},
          {"background_rate", format_double(p.background_rate)},
          {"background_weight", format_double(p.background_weight)},
          {"permute_prob", format_double(p.permute_prob)},
          {"repeat_prob", format_double(p.repeat_prob)},
          {"num_pairs", std::to_string(p.num_pairs)},
          {"val_fraction", format_double(p.val_fraction)}};
}

inline SynthParams synth_params_from_kv(const KeyValues& kv, const std::string& path) {
  std::map<std::string, std::string> m(kv.begin(), kv.end());
  SynthParams p;
  auto get = [&](const char* key) -> const std::string& {
    auto it = m.find(key);
    if (it == m.end()) throw ParseError(path, 0, std::string("missing key '") + key + "'");
    return it->second;
  };
  auto i = [&](const char* key) { return parse_integer(get(key), path, 0); };
  auto d = [&](const char* key) { return parse_double(get(key), path, 0); };
  p.seed = static_cast<std::uint64_t>(i("seed"));
  p.num_videos = static_cast<int>(i("num_videos"));
  p.num_actions = static_cast<int>(i("num_actions"));
  p.feature_dim = static_cast<int>(i("feature_dim"));
  p.min_length = static_cast<int>(i("min_length"));
  p.max_length = static_cast<int>(i("max_length"));
  p.noise = d("noise");
  p.motion = d("motion");
  p.walk_steps = static_cast<int>(i("walk_steps"));
  p.walk_scale = d("walk_scale");
  p.warp = d("warp");
  p.duration_jitter = d("duration_jitter");
  p.background_rate = d("background_rate");
  p.background_weight = d("background_weight");
  p.permute_prob = d("permute_prob");
  p.repeat_prob = d("repeat_prob");
  p.num_pairs = static_cast<int>(i("num_pairs"));
  p.val_fraction = d("val_fraction");
  return p;
}

inline void expect_columns(const CsvTable& t, std::size_t row, std::size_t n) {
  if (t.rows[row].size() != n) {
    throw ParseError(t.path, t.line_numbers[row],
                     "expected " + std::to_string(n) + " columns, got " + std::to_string(t.rows[row].size()));
  }
}

}  // namespace detail

/// Writes a dataset directory:
///   gen_params.txt, prototypes.csv, splits.csv, pairs.csv,
///   videos/<name>/{features.csv, labels.csv, meta.txt}, pairs/pair_XXX.csv
inline void write_dataset(const SynthDataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "videos", ec);
  fs::create_directories(fs::path(dir) / "pairs", ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());
  const fs::path root(dir);

  write_key_values((root / "gen_params.txt").string(), detail::synth_params_to_kv(data.params));
  write_matrix_csv((root / "prototypes.csv").string(), data.prototypes,
                   numbered_header("f", data.prototypes.cols()));

  std::vector<std::string> split(data.videos.size(), "unused");
  for (Index v : data.train) split[static_cast<std::size_t>(v)] = "train";
  for (Index v : data.val) split[static_cast<std::size_t>(v)] = "val";
  {
    auto os = open_for_write((root / "splits.csv").string());
    os << "video,split\n";
    for (std::size_t v = 0; v < data.videos.size(); ++v) os << data.videos[v].name << ',' << split[v] << '\n';
  }

  for (const auto& v : data.videos) {
    const fs::path vd = root / "videos" / v.name;
    fs::create_directories(vd, ec);
    if (ec) throw IoError("cannot create " + vd.string() + ": " + ec.message());
    write_matrix_csv((vd / "features.csv").string(), v.features, numbered_header("f", v.features.cols()));
    auto os = open_for_write((vd / "labels.csv").string());
    os << "label,progress\n";
    for (std::size_t i = 0; i < v.labels.size(); ++i) os << v.labels[i] << ',' << format_double(v.progress[i]) << '\n';
    std::ostringstream prog;
    for (std::size_t i = 0; i < v.program.size(); ++i) prog << (i ? " " : "") << v.program[i];
    write_key_values((vd / "meta.txt").string(), {{"program", prog.str()}, {"warp", format_double(v.warp)}});
  }

  auto os = open_for_write((root / "pairs.csv").string());
  os << "a,b,file\n";
  for (std::size_t k = 0; k < data.pairs.size(); ++k) {
    const auto& p = data.pairs[k];
    char name[32];
    std::snprintf(name, sizeof(name), "pair_%03zu.csv", k);
    os << data.videos[static_cast<std::size_t>(p.a)].name << ',' << data.videos[static_cast<std::size_t>(p.b)].name
       << ',' << name << '\n';
    auto ps = open_for_write((root / "pairs" / name).string());
    ps << "i,j\n";
    for (std::size_t i = 0; i < p.map.size(); ++i) ps << i << ',' << p.map[i] << '\n';
  }
}

/// Reads a directory written by write_dataset. Trajectory knots are not stored.
inline SynthDataset read_dataset(const std::string& dir) {
  namespace fs = std::filesystem;
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw IoError("dataset directory not found: " + dir);
  SynthDataset data;
  const std::string params_path = (root / "gen_params.txt").string();
  data.params = detail::synth_params_from_kv(read_key_values(params_path), params_path);
  data.prototypes = read_matrix_csv((root / "prototypes.csv").string());

  const CsvTable splits = read_csv((root / "splits.csv").string(), true);
  std::map<std::string, Index> by_name;
  for (std::size_t r = 0; r < splits.rows.size(); ++r) {
    detail::expect_columns(splits, r, 2);
    const std::string name = trim(splits.rows[r][0]);
    const std::string split = trim(splits.rows[r][1]);
    const auto id = static_cast<Index>(data.videos.size());
    if (by_name.count(name)) throw ParseError(splits.path, splits.line_numbers[r], "duplicate video '" + name + "'");
    by_name[name] = id;
    if (split == "train") {
      data.train.push_back(id);
    } else if (split == "val") {
      data.val.push_back(id);
    } else if (split != "unused") {
      throw ParseError(splits.path, splits.line_numbers[r], "unknown split '" + split + "'");
    }
    SynthVideo v;
    v.name = name;
    const fs::path vd = root / "videos" / name;
    v.features = read_matrix_csv((vd / "features.csv").string());
    const CsvTable labels = read_csv((vd / "labels.csv").string(), true);
    for (std::size_t i = 0; i < labels.rows.size(); ++i) {
      detail::expect_columns(labels, i, 2);
      v.labels.push_back(static_cast<int>(parse_integer(labels.rows[i][0], labels.path, labels.line_numbers[i])));
      v.progress.push_back(parse_double(labels.rows[i][1], labels.path, labels.line_numbers[i]));
    }
    if (static_cast<Index>(v.labels.size()) != v.features.rows()) {
      throw ParseError(labels.path, 0, "label count does not match the feature rows");
    }
    const std::string meta_path = (vd / "meta.txt").string();
    if (fs::exists(meta_path)) {
      for (const auto& [k, val] : read_key_values(meta_path)) {
        if (k == "program") {
          std::istringstream is(val);
          int l;
          while (is >> l) v.program.push_back(l);
        } else if (k == "warp") {
          v.warp = parse_double(val, meta_path, 0);
        }
      }
    }
    data.videos.push_back(std::move(v));
  }

  const CsvTable pairs = read_csv((root / "pairs.csv").string(), true);
  for (std::size_t r = 0; r < pairs.rows.size(); ++r) {
    detail::expect_columns(pairs, r, 3);
    GroundTruthPair p;
    const auto a = by_name.find(trim(pairs.rows[r][0]));
    const auto b = by_name.find(trim(pairs.rows[r][1]));
    if (a == by_name.end() || b == by_name.end()) {
      throw ParseError(pairs.path, pairs.line_numbers[r], "pair names an unknown video");
    }
    p.a = a->second;
    p.b = b->second;
    const CsvTable m = read_csv((root / "pairs" / trim(pairs.rows[r][2])).string(), true);
    p.map.assign(static_cast<std::size_t>(data.videos[static_cast<std::size_t>(p.a)].features.rows()), -1);
    for (std::size_t i = 0; i < m.rows.size(); ++i) {
      detail::expect_columns(m, i, 2);
      const long long src = parse_integer(m.rows[i][0], m.path, m.line_numbers[i]);
      const long long dst = parse_integer(m.rows[i][1], m.path, m.line_numbers[i]);
      const Index nb = data.videos[static_cast<std::size_t>(p.b)].features.rows();
      if (src < 0 || src >= static_cast<long long>(p.map.size()) || dst < -1 || dst >= nb) {
        throw ParseError(m.path, m.line_numbers[i], "frame index out of range");
      }
      p.map[static_cast<std::size_t>(src)] = static_cast<Index>(dst);
    }
    data.pairs.push_back(std::move(p));
  }
  data.validate();
  return data;
}

}  // namespace vaot::io
