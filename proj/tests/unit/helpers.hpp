#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/tensor.hpp"

namespace testutil {

inline glpmfd::tensor::Array random_array(glpmfd::tensor::Shape shape, std::mt19937_64& rng, double lo = -1.0,
                                          double hi = 1.0) {
  glpmfd::tensor::Array a(std::move(shape));
  std::uniform_real_distribution<double> u(lo, hi);
  for (double& v : a.data()) v = u(rng);
  return a;
}

// Binomial 3-sigma band around an expected rate.
inline bool within_3sigma(double hits, double n, double p) {
  const double sd = std::sqrt(n * p * (1.0 - p));
  return std::abs(hits - n * p) <= 3.0 * sd;
}

// Random graph with desk-radar patches; edges join distinct (earlier, later)
// node pairs spread over five frames. Labels cycle through the classes.
inline glpmfd::AssocGraph toy_graph(int n_nodes, int n_edges, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  glpmfd::AssocGraph g;
  g.radar = glpmfd::desk_radar();
  const int nd = g.radar.n_doppler(), pc = g.radar.patch_range_cells;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int k = 0; k < n_nodes; ++k) {
    glpmfd::Observation z;
    z.frame = k * 5 / n_nodes;
    z.t = z.frame;
    z.r = 1e5 + 1e3 * u(rng);
    z.d = static_cast<int>(u(rng) * nd);
    z.s = 5.0 + 10.0 * u(rng);
    z.patch.rows = nd;
    z.patch.cols = pc;
    for (int c = 0; c < nd * pc; ++c) z.patch.values.push_back(-std::log(1.0 - u(rng)));
    z.origin = k % 3 == 0 ? 0 : glpmfd::kNoiseOrigin;
    g.nodes.push_back(z);
  }
  std::vector<std::pair<int, int>> pairs;
  for (int a = 0; a < n_nodes; ++a)
    for (int b = a + 1; b < n_nodes; ++b) pairs.push_back({a, b});
  std::shuffle(pairs.begin(), pairs.end(), rng);
  pairs.resize(static_cast<std::size_t>(std::min<int>(n_edges, static_cast<int>(pairs.size()))));
  std::sort(pairs.begin(), pairs.end());
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    glpmfd::Edge e;
    e.u = pairs[k].first;
    e.w = pairs[k].second;
    e.fe = {150.0 * (u(rng) - 0.5), 150.0 * (u(rng) - 0.5)};
    e.dcd = static_cast<int>(u(rng) * 4);
    e.label = static_cast<glpmfd::EdgeLabel>(k % 3);
    g.edges.push_back(e);
  }
  return g;
}

}  // namespace testutil
