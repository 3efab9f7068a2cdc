#pragma once

// Observation association graphs over an L-frame window: max-velocity
// gating with Q-frame look-ahead, spatio-temporal edge features with
// nearest-wrap Doppler ambiguity resolution, 3-class edge labels and
// maximal candidate-path enumeration.

#include <array>
#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "glpmfd/radar_sim.hpp"

namespace glpmfd {

enum class EdgeLabel : int { FF = 0, TF = 1, TT = 2 };

const char* label_name(EdgeLabel l);

struct GraphConfig {
  double v_max = 4000.0;  // m/s, loose enough to absorb cross-range noise
  int Q = 2;
  int L = 5;
  int M = 3;
  std::size_t max_paths = 10000;

  void validate() const;
};

struct Edge {
  int u = 0;  // earlier node
  int w = 0;  // later node
  std::array<double, 2> fe{0.0, 0.0};  // F_E at u and at w, m/s
  int dcd = 0;
  EdgeLabel label = EdgeLabel::FF;
  std::optional<std::array<double, 3>> pred;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct AssocGraph {
  RadarConfig radar;
  std::vector<Observation> nodes;  // ordered by frame, then in-frame order
  std::vector<Edge> edges;         // ordered by (u, w)
  // Common target SNR of the window this graph came from; NaN when unknown.
  double snr_db = std::numeric_limits<double>::quiet_NaN();
  std::size_t gate_evaluations = 0;

  std::size_t n_nodes() const { return nodes.size(); }
  std::size_t n_edges() const { return edges.size(); }
  bool has_predictions() const;
};

struct CandidateTrack {
  std::vector<int> node_ids;
  std::vector<int> edge_ids;
  std::vector<double> rho;
  double S = 0.0;

  std::size_t n_nodes() const { return node_ids.size(); }
  friend bool operator==(const CandidateTrack&, const CandidateTrack&) = default;
};

struct PathSet {
  std::vector<CandidateTrack> paths;
  bool truncated = false;
};

// Throws std::invalid_argument unless t1 < t2.
bool max_velocity_gate(const Observation& z1, const Observation& z2, double v_max);

struct RadialEstimate {
  double v1 = 0.0;
  double v2 = 0.0;
};
RadialEstimate estimate_radial_velocities(const Observation& z1, const Observation& z2);

struct AmbiguityResolution {
  long m = 0;
  double fe = 0.0;
};
AmbiguityResolution resolve_ambiguity(double v, double v_u, double v_hat);

struct EdgeFeatures {
  std::array<double, 2> fe{0.0, 0.0};
  int dcd = 0;
};
EdgeFeatures edge_features(const Observation& z1, const Observation& z2, double v_u);

EdgeLabel label_for(int origin_u, int origin_w);
void label_edges(AssocGraph& graph);

AssocGraph build_graph(const ScanWindow& window, const GraphConfig& gc);

using EdgeGate = std::function<bool(std::size_t edge_id)>;

// Maximal time-increasing paths (no gated in-edge at the start, no gated
// out-edge at the end) with at least M nodes, in deterministic order.
PathSet enumerate_candidate_paths(const AssocGraph& graph, const GraphConfig& gc, const EdgeGate& gate = {});

// Expected gate evaluations for L frames, Q look-ahead and n_fa plots per frame.
double estimate_graph_ops(int L, int Q, double n_fa);

}  // namespace glpmfd
