#include "glpmfd/track_pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace glpmfd {

void ScoreParams::validate() const {
  for (double a : alpha)
    if (!(a >= 0.0)) throw std::invalid_argument("ScoreParams: alpha weights must be non-negative");
  if (!(lambda >= 0.0)) throw std::invalid_argument("ScoreParams: lambda must be non-negative");
}

double edge_confidence(const std::array<double, 3>& pred, const ScoreParams& sp) {
  return sp.alpha[0] * pred[0] + sp.alpha[1] * pred[1] + sp.alpha[2] * pred[2];
}

std::vector<double> edge_confidence(const AssocGraph& graph, const ScoreParams& sp) {
  std::vector<double> rho;
  rho.reserve(graph.edges.size());
  for (std::size_t k = 0; k < graph.edges.size(); ++k) {
    const Edge& e = graph.edges[k];
    if (!e.pred) throw std::invalid_argument("edge_confidence: edge " + std::to_string(k) + " has no prediction");
    rho.push_back(edge_confidence(*e.pred, sp));
  }
  return rho;
}

double score_track(const CandidateTrack& track, const ScoreParams& sp) {
  if (track.rho.empty()) throw std::invalid_argument("score_track: track has no edges");
  double s = 0.0;
  for (double r : track.rho) s += r;
  return s / static_cast<double>(track.rho.size()) + sp.lambda * static_cast<double>(track.node_ids.size());
}

bool track_before(const CandidateTrack& a, const CandidateTrack& b) {
  if (a.S != b.S) return a.S > b.S;
  if (a.node_ids.size() != b.node_ids.size()) return a.node_ids.size() > b.node_ids.size();
  return a.node_ids < b.node_ids;
}

DetectionResult detect_tracks(const AssocGraph& graph, const ScoreParams& sp, const GraphConfig& gc) {
  sp.validate();
  const std::vector<double> rho = edge_confidence(graph, sp);
  const PathSet paths =
      enumerate_candidate_paths(graph, gc, [&](std::size_t e) { return rho[e] >= sp.edge_gate_eps; });
  DetectionResult out;
  out.truncated = paths.truncated;
  // Every gated path with >= M nodes is a candidate, and each one is a
  // contiguous piece of some maximal path. Scoring only the maximal ones would
  // let a weak tail edge onto a false plot drag a clean target track down.
  const std::size_t M = static_cast<std::size_t>(gc.M);
  std::set<std::vector<int>> seen;
  for (const CandidateTrack& p : paths.paths) {
    const std::size_t n = p.node_ids.size();
    for (std::size_t a = 0; a + M <= n; ++a)
      for (std::size_t b = a + M; b <= n; ++b) {
        CandidateTrack t;
        t.node_ids.assign(p.node_ids.begin() + static_cast<std::ptrdiff_t>(a),
                          p.node_ids.begin() + static_cast<std::ptrdiff_t>(b));
        if (!seen.insert(t.node_ids).second) continue;
        t.edge_ids.assign(p.edge_ids.begin() + static_cast<std::ptrdiff_t>(a),
                          p.edge_ids.begin() + static_cast<std::ptrdiff_t>(b - 1));
        for (int e : t.edge_ids) t.rho.push_back(rho[static_cast<std::size_t>(e)]);
        t.S = score_track(t, sp);
        if (t.S > sp.gamma2) out.tracks.push_back(std::move(t));
      }
  }
  std::sort(out.tracks.begin(), out.tracks.end(), track_before);
  return out;
}

std::vector<CandidateTrack> prune_tracks(std::vector<CandidateTrack> tracks) {
  std::stable_sort(tracks.begin(), tracks.end(), track_before);
  std::vector<CandidateTrack> kept;
  std::vector<int> used;
  for (CandidateTrack& t : tracks) {
    const bool clash = std::any_of(t.node_ids.begin(), t.node_ids.end(),
                                   [&](int n) { return std::find(used.begin(), used.end(), n) != used.end(); });
    if (clash) continue;
    used.insert(used.end(), t.node_ids.begin(), t.node_ids.end());
    kept.push_back(std::move(t));
  }
  return kept;
}

DetectionResult run_pipeline(const Model& model, AssocGraph& graph, const ScoreParams& sp, const GraphConfig& gc) {
  annotate_predictions(model, graph);
  DetectionResult r = detect_tracks(graph, sp, gc);
  r.tracks = prune_tracks(std::move(r.tracks));
  return r;
}

ThresholdCalibration threshold_for_rate(std::vector<double> scores, double n_cells, double target_rate) {
  if (!(n_cells > 0.0) || !(target_rate > 0.0)) throw std::invalid_argument("threshold_for_rate: bad arguments");
  ThresholdCalibration c;
  c.target_rate = target_rate;
  c.n_cells = n_cells;
  c.n_scores = scores.size();
  const double allowance = target_rate * n_cells;
  if (allowance < 5.0) {
    throw std::invalid_argument("threshold_for_rate: only " + std::to_string(allowance) +
                                " false tracks allowed at this rate; use more trials or a larger target rate");
  }
  const auto k = static_cast<std::size_t>(std::floor(allowance));
  std::sort(scores.begin(), scores.end(), std::greater<>());
  if (scores.size() > k) c.gamma = scores[k];
  c.n_above = static_cast<std::size_t>(
      std::count_if(scores.begin(), scores.end(), [&](double s) { return s > c.gamma; }));
  c.achieved_rate = static_cast<double>(c.n_above) / n_cells;
  c.rate_stderr = std::sqrt(static_cast<double>(c.n_above)) / n_cells;
  return c;
}

std::vector<double> false_track_scores(const Model& model, const RadarConfig& radar, const GraphConfig& gc,
                                       const ScoreParams& sp, int n_trials, std::uint64_t seed, const char* stream) {
  ScoreParams open = sp;
  open.gamma2 = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  for (int k = 0; k < n_trials; ++k) {
    Rng rng = make_rng(seed, stream, static_cast<std::uint64_t>(k));
    const SimulatedWindow sw = simulate_window({}, 0.0, gc.L, radar, rng);
    AssocGraph g = build_graph(sw.window, gc);
    for (const CandidateTrack& t : run_pipeline(model, g, open, gc).tracks) scores.push_back(t.S);
  }
  return scores;
}

ThresholdCalibration calibrate_gamma2(const Model& model, const RadarConfig& radar, const GraphConfig& gc,
                                      const ScoreParams& sp, double target_pfa2, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("calibrate_gamma2: n_trials must be positive");
  return threshold_for_rate(false_track_scores(model, radar, gc, sp, n_trials, seed), radar.n_cells() * n_trials,
                            target_pfa2);
}

}  // namespace glpmfd
