// Aligns two synthetic videos with and without the virtual frame and prints
// how well the recovered correspondences follow the ground truth.

#include <cstdio>

#include "vaot/vaot.hpp"

int main() {
  vaot::SynthParams params;
  params.num_videos = 2;
  params.num_pairs = 1;
  params.val_fraction = 0.5;
  params.background_rate = 0.5;
  const vaot::SynthDataset data = vaot::generate(params);
  const auto& pair = data.pairs.front();
  const auto& a = data.videos[static_cast<std::size_t>(pair.a)];
  const auto& b = data.videos[static_cast<std::size_t>(pair.b)];
  std::printf("%s (%ld frames) vs %s (%ld frames)\n", a.name.c_str(), static_cast<long>(a.features.rows()),
              b.name.c_str(), static_cast<long>(b.features.rows()));

  for (bool use_virtual : {true, false}) {
    vaot::AlignProblem prob;
    prob.x = a.features;
    prob.y = b.features;
    prob.align.use_virtual = use_virtual;
    const vaot::AlignTargets t = vaot::compute_pseudo_labels(prob);
    std::vector<std::pair<vaot::Index, vaot::Index>> matched;
    int within = 0, scored = 0;
    for (std::size_t i = 0; i < t.matches.rows.size(); ++i) {
      if (!t.matches.rows[i]) continue;
      matched.emplace_back(static_cast<vaot::Index>(i), *t.matches.rows[i]);
      if (pair.map[i] < 0) continue;
      ++scored;
      if (std::abs(*t.matches.rows[i] - pair.map[i]) <= 3) ++within;
    }
    std::printf("virtual frame %-3s: %2d outer iterations, converged %s, %ld frames to virtual, tau %.3f, "
                "%.1f%% of matches within 3 frames of ground truth\n",
                use_virtual ? "on" : "off", t.report.iterations, t.report.converged ? "yes" : "no",
                static_cast<long>(t.matches.virtual_rows()), vaot::kendall_tau(matched),
                scored ? 100.0 * within / scored : 0.0);
  }
  return 0;
}
