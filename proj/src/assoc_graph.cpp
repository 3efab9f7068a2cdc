#include "glpmfd/assoc_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace glpmfd {

const char* label_name(EdgeLabel l) {
  switch (l) {
    case EdgeLabel::FF: return "FF";
    case EdgeLabel::TF: return "TF";
    case EdgeLabel::TT: return "TT";
  }
  return "?";
}

void GraphConfig::validate() const {
  if (!(v_max > 0.0)) throw std::invalid_argument("GraphConfig: v_max must be positive");
  if (Q < 1 || Q >= L) throw std::invalid_argument("GraphConfig: need 1 <= Q < L");
  if (M < 2) throw std::invalid_argument("GraphConfig: M must be at least 2");
  if (max_paths == 0) throw std::invalid_argument("GraphConfig: max_paths must be positive");
}

bool AssocGraph::has_predictions() const {
  for (const Edge& e : edges)
    if (!e.pred) return false;
  return true;
}

namespace {
void require_order(const Observation& z1, const Observation& z2, const char* who) {
  if (!(z1.t < z2.t)) {
    throw std::invalid_argument(std::string(who) + ": observations out of time order (t1=" + std::to_string(z1.t) +
                                ", t2=" + std::to_string(z2.t) + ")");
  }
}
}  // namespace

bool max_velocity_gate(const Observation& z1, const Observation& z2, double v_max) {
  require_order(z1, z2, "max_velocity_gate");
  const double dist = std::hypot(z2.x() - z1.x(), z2.y() - z1.y());
  return dist <= v_max * (z2.t - z1.t);
}

RadialEstimate estimate_radial_velocities(const Observation& z1, const Observation& z2) {
  require_order(z1, z2, "estimate_radial_velocities");
  const double dt = z2.t - z1.t;
  const double c = std::cos(z2.theta - z1.theta);
  return {(z2.r * c - z1.r) / dt, (z2.r - z1.r * c) / dt};
}

AmbiguityResolution resolve_ambiguity(double v, double v_u, double v_hat) {
  const double m = std::round((v_hat - v) / v_u);
  return {static_cast<long>(m), std::abs(v + m * v_u - v_hat)};
}

EdgeFeatures edge_features(const Observation& z1, const Observation& z2, double v_u) {
  const RadialEstimate est = estimate_radial_velocities(z1, z2);
  EdgeFeatures f;
  f.fe[0] = resolve_ambiguity(z1.v, v_u, est.v1).fe;
  f.fe[1] = resolve_ambiguity(z2.v, v_u, est.v2).fe;
  f.dcd = std::abs(z1.d - z2.d);
  return f;
}

EdgeLabel label_for(int origin_u, int origin_w) {
  const bool tu = origin_u != kNoiseOrigin;
  const bool tw = origin_w != kNoiseOrigin;
  if (tu && tw) return origin_u == origin_w ? EdgeLabel::TT : EdgeLabel::FF;
  if (tu || tw) return EdgeLabel::TF;
  return EdgeLabel::FF;
}

void label_edges(AssocGraph& graph) {
  for (Edge& e : graph.edges) e.label = label_for(graph.nodes[e.u].origin, graph.nodes[e.w].origin);
}

AssocGraph build_graph(const ScanWindow& window, const GraphConfig& gc) {
  gc.validate();
  AssocGraph g;
  g.radar = window.config;
  for (const auto& frame : window.frames)
    for (const Observation& z : frame) g.nodes.push_back(z);

  std::vector<std::size_t> frame_start;
  std::size_t offset = 0;
  for (const auto& frame : window.frames) {
    frame_start.push_back(offset);
    offset += frame.size();
  }
  frame_start.push_back(offset);

  const auto n_frames = static_cast<int>(window.frames.size());
  for (int fu = 0; fu < n_frames; ++fu) {
    for (std::size_t u = frame_start[fu]; u < frame_start[fu + 1]; ++u) {
      // later nodes in frames fu+1..fu+Q, visited in node-id order
      const int f_end = std::min(n_frames, fu + gc.Q + 1);
      for (std::size_t w = frame_start[fu + 1]; w < frame_start[f_end]; ++w) {
        ++g.gate_evaluations;
        if (!max_velocity_gate(g.nodes[u], g.nodes[w], gc.v_max)) continue;
        Edge e;
        e.u = static_cast<int>(u);
        e.w = static_cast<int>(w);
        const EdgeFeatures f = edge_features(g.nodes[u], g.nodes[w], window.config.v_u);
        e.fe = f.fe;
        e.dcd = f.dcd;
        g.edges.push_back(e);
      }
    }
  }
  label_edges(g);
  return g;
}

namespace {

struct PathSearch {
  const AssocGraph& g;
  const GraphConfig& gc;
  std::vector<std::vector<int>> out;  // gated out-edges per node, sorted by w
  PathSet result;
  std::vector<int> nodes;
  std::vector<int> edges;

  void dfs(int node) {
    if (result.truncated) return;
    const auto& next = out[static_cast<std::size_t>(node)];
    if (next.empty()) {
      if (static_cast<int>(nodes.size()) >= gc.M) {
        if (result.paths.size() >= gc.max_paths) {
          result.truncated = true;
          return;
        }
        CandidateTrack t;
        t.node_ids = nodes;
        t.edge_ids = edges;
        result.paths.push_back(std::move(t));
      }
      return;
    }
    for (int eid : next) {
      const int w = g.edges[static_cast<std::size_t>(eid)].w;
      nodes.push_back(w);
      edges.push_back(eid);
      dfs(w);
      nodes.pop_back();
      edges.pop_back();
      if (result.truncated) return;
    }
  }
};

}  // namespace

PathSet enumerate_candidate_paths(const AssocGraph& graph, const GraphConfig& gc, const EdgeGate& gate) {
  PathSearch s{graph, gc, std::vector<std::vector<int>>(graph.n_nodes()), {}, {}, {}};
  std::vector<int> in_degree(graph.n_nodes(), 0);
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    if (gate && !gate(i)) continue;
    const Edge& e = graph.edges[i];
    s.out[static_cast<std::size_t>(e.u)].push_back(static_cast<int>(i));
    ++in_degree[static_cast<std::size_t>(e.w)];
  }
  for (auto& lst : s.out) {
    std::stable_sort(lst.begin(), lst.end(), [&](int a, int b) {
      return graph.edges[static_cast<std::size_t>(a)].w < graph.edges[static_cast<std::size_t>(b)].w;
    });
  }
  for (std::size_t v = 0; v < graph.n_nodes() && !s.result.truncated; ++v) {
    if (in_degree[v] != 0 || s.out[v].empty()) continue;
    s.nodes.assign(1, static_cast<int>(v));
    s.edges.clear();
    s.dfs(static_cast<int>(v));
  }
  return std::move(s.result);
}

double estimate_graph_ops(int L, int Q, double n_fa) {
  if (Q < 1 || Q >= L) throw std::invalid_argument("estimate_graph_ops: need 1 <= Q < L");
  return Q * (L - Q / 2.0 - 0.5) * n_fa * n_fa;
}

}  // namespace glpmfd
