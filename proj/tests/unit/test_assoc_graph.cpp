#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "glpmfd/assoc_graph.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace glpmfd;

namespace {

Observation obs_xy(double x, double y, double t) {
  Observation z;
  z.r = std::hypot(x, y);
  z.theta = std::atan2(y, x);
  z.t = t;
  return z;
}

Observation obs_polar(double r, double theta, double t, double v = 0.0, int d = 0) {
  Observation z;
  z.r = r;
  z.theta = theta;
  z.t = t;
  z.v = v;
  z.d = d;
  return z;
}

AssocGraph chain_graph(int n_nodes, const std::vector<std::pair<int, int>>& edges) {
  AssocGraph g;
  for (int k = 0; k < n_nodes; ++k) {
    Observation z;
    z.frame = k;
    z.t = k;
    g.nodes.push_back(z);
  }
  for (auto [u, w] : edges) {
    Edge e;
    e.u = u;
    e.w = w;
    g.edges.push_back(e);
  }
  return g;
}

}  // namespace

TEST_CASE("maximum velocity gate") {
  CHECK(max_velocity_gate(obs_xy(1e5, 0, 0), obs_xy(1e5 + 100, 0, 1), 500.0));
  CHECK(max_velocity_gate(obs_xy(1e5, 7, 0), obs_xy(1e5, 7, 3), 1.0));
  CHECK_FALSE(max_velocity_gate(obs_xy(1e5, 0, 0), obs_xy(1e5 + 1001, 0, 1), 1000.0));
  CHECK_THROWS_AS(max_velocity_gate(obs_xy(1e5, 0, 1), obs_xy(1e5, 0, 1), 1000.0), std::invalid_argument);
}

TEST_CASE("empty frames give an empty graph") {
  ScanWindow w;
  w.frames.resize(5);
  const AssocGraph g = build_graph(w, GraphConfig{});
  CHECK(g.n_nodes() == 0);
  CHECK(g.n_edges() == 0);
}

TEST_CASE("two co-located plots in consecutive frames give one edge") {
  ScanWindow w;
  w.frames = {{obs_xy(1e5, 0, 0)}, {obs_xy(1e5, 0, 1)}};
  const AssocGraph g = build_graph(w, GraphConfig{});
  REQUIRE(g.n_edges() == 1);
  CHECK(g.edges[0].u == 0);
  CHECK(g.edges[0].w == 1);
}

TEST_CASE("graph edges equal the all-pairs oracle on random windows") {
  Rng rng = make_rng(21, "t");
  std::uniform_real_distribution<double> ux(1e5, 1.06e5), uy(-5e3, 5e3);
  for (int trial = 0; trial < 50; ++trial) {
    GraphConfig gc;
    gc.v_max = 1500.0 + 200.0 * trial;
    gc.Q = 1 + trial % 3;
    ScanWindow w;
    for (int f = 0; f < 5; ++f) {
      std::vector<Observation> frame;
      const int n = 20 + (trial * 7 + f * 3) % 21;  // up to 200 nodes
      for (int k = 0; k < n; ++k) frame.push_back(obs_xy(ux(rng), uy(rng), f));
      w.frames.push_back(frame);
    }
    const AssocGraph g = build_graph(w, gc);
    std::set<std::pair<int, int>> got;
    for (const Edge& e : g.edges) got.insert({e.u, e.w});
    CHECK(got == oracle::graph_edges(w, gc));
    CHECK(got.size() == g.n_edges());
  }
}

TEST_CASE("radial velocity estimates") {
  const auto a = estimate_radial_velocities(obs_polar(1e5, 0, 0), obs_polar(100100, 0, 1));
  CHECK(a.v1 == doctest::Approx(100.0));
  CHECK(a.v2 == doctest::Approx(100.0));
  const auto b = estimate_radial_velocities(obs_polar(1e5, 0.3, 0), obs_polar(1e5, 0.3, 2));
  CHECK(b.v1 == 0.0);
  CHECK(b.v2 == 0.0);
  const auto c = estimate_radial_velocities(obs_polar(1e5, 0.0, 0), obs_polar(1e5, 0.01, 1));
  CHECK(c.v1 == doctest::Approx(1e5 * (std::cos(0.01) - 1.0)).epsilon(1e-9));
  CHECK(c.v1 == doctest::Approx(-5.0).epsilon(1e-3));
  CHECK(c.v2 == doctest::Approx(5.0).epsilon(1e-3));
}

TEST_CASE("nearest-wrap ambiguity resolution") {
  auto r = resolve_ambiguity(100, 300, 100);
  CHECK(r.m == 0);
  CHECK(r.fe == 0.0);
  r = resolve_ambiguity(-50, 300, 250);
  CHECK(r.m == 1);
  CHECK(r.fe == 0.0);
  r = resolve_ambiguity(140, 300, 170);
  CHECK(r.m == 0);
  CHECK(r.fe == doctest::Approx(30.0));
}

TEST_CASE("noiseless radial motion has zero edge error for every wrap") {
  const double v_u = 300.0;
  for (int m = -3; m <= 3; ++m) {
    const double vr = 40.0 + m * v_u;
    const Observation z1 = obs_polar(1e5, 0.02, 0, wrap_velocity(vr, v_u));
    const Observation z2 = obs_polar(1e5 + 2 * vr, 0.02, 2, wrap_velocity(vr, v_u));
    const EdgeFeatures f = edge_features(z1, z2, v_u);
    CHECK(f.fe[0] <= 1e-9);
    CHECK(f.fe[1] <= 1e-9);
  }
}

TEST_CASE("stationary duplicate gives zero features") {
  const EdgeFeatures f = edge_features(obs_polar(1e5, 0.1, 0, 0.0, 7), obs_polar(1e5, 0.1, 1, 0.0, 7), 300.0);
  CHECK(f.fe[0] == 0.0);
  CHECK(f.fe[1] == 0.0);
  CHECK(f.dcd == 0);
  CHECK(edge_features(obs_polar(1e5, 0, 0, 0, 4), obs_polar(1e5, 0, 1, 0, 5), 300.0).dcd == 1);
}

TEST_CASE("edge labels") {
  CHECK(label_for(kNoiseOrigin, kNoiseOrigin) == EdgeLabel::FF);
  CHECK(label_for(5, kNoiseOrigin) == EdgeLabel::TF);
  CHECK(label_for(kNoiseOrigin, 5) == EdgeLabel::TF);
  CHECK(label_for(5, 5) == EdgeLabel::TT);
  CHECK(label_for(5, 6) == EdgeLabel::FF);
}

TEST_CASE("a five-node chain yields only the maximal path") {
  const AssocGraph g = chain_graph(5, {{0, 1}, {1, 2}, {2, 3}, {3, 4}});
  GraphConfig gc;
  const PathSet p = enumerate_candidate_paths(g, gc);
  REQUIRE(p.paths.size() == 1);
  CHECK(p.paths[0].node_ids == std::vector<int>{0, 1, 2, 3, 4});
  CHECK(p.paths[0].edge_ids == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("two disjoint chains of three") {
  const AssocGraph g = chain_graph(6, {{0, 1}, {1, 2}, {3, 4}, {4, 5}});
  CHECK(enumerate_candidate_paths(g, GraphConfig{}).paths.size() == 2);
}

TEST_CASE("short chains are dropped") {
  const AssocGraph g = chain_graph(2, {{0, 1}});
  CHECK(enumerate_candidate_paths(g, GraphConfig{}).paths.empty());
}

TEST_CASE("path truncation flag") {
  // a layered graph with 3^4 = 81 source-to-sink paths
  std::vector<std::pair<int, int>> e;
  for (int layer = 0; layer < 4; ++layer)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b) e.push_back({layer * 3 + a, (layer + 1) * 3 + b});
  AssocGraph g = chain_graph(15, e);
  GraphConfig gc;
  gc.max_paths = 10;
  const PathSet p = enumerate_candidate_paths(g, gc);
  CHECK(p.truncated);
  CHECK(p.paths.size() == 10);
  gc.max_paths = 1000;
  const PathSet all = enumerate_candidate_paths(g, gc);
  CHECK_FALSE(all.truncated);
  CHECK(all.paths.size() == 3 * 81);
}

TEST_CASE("path enumeration equals the brute-force oracle on random graphs") {
  Rng rng = make_rng(22, "t");
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + trial;  // up to 29 nodes
    std::vector<std::pair<int, int>> e;
    std::bernoulli_distribution coin(0.15);
    for (int u = 0; u < n; ++u)
      for (int w = u + 1; w < std::min(n, u + 8); ++w)
        if (coin(rng)) e.push_back({u, w});
    const AssocGraph g = chain_graph(n, e);
    std::vector<bool> on(e.size());
    std::bernoulli_distribution keep(0.8);
    for (std::size_t k = 0; k < on.size(); ++k) on[k] = keep(rng);
    GraphConfig gc;
    gc.M = 2 + trial % 3;
    const PathSet p = enumerate_candidate_paths(g, gc, [&](std::size_t k) { return on[k]; });
    std::set<std::vector<int>> got;
    for (const auto& t : p.paths) {
      got.insert(t.node_ids);
      for (std::size_t k = 0; k < t.edge_ids.size(); ++k) {
        const Edge& ed = g.edges[static_cast<std::size_t>(t.edge_ids[k])];
        CHECK(ed.u == t.node_ids[k]);
        CHECK(ed.w == t.node_ids[k + 1]);
      }
    }
    CHECK(got.size() == p.paths.size());
    CHECK(got == oracle::candidate_paths(g, on, gc.M));
  }
}

TEST_CASE("graph cost estimate") {
  CHECK(estimate_graph_ops(5, 2, 100) == 70000.0);
  CHECK(estimate_graph_ops(2, 1, 1) == 1.0);
  CHECK(estimate_graph_ops(5, 2, 1000) == 7e6);
}

TEST_CASE("gate evaluation count matches the estimate for equal frames") {
  ScanWindow w;
  for (int f = 0; f < 5; ++f) w.frames.push_back(std::vector<Observation>(10, obs_xy(1e5, 0, f)));
  const AssocGraph g = build_graph(w, GraphConfig{});
  CHECK(static_cast<double>(g.gate_evaluations) == estimate_graph_ops(5, 2, 10));
}
