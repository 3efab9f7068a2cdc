#pragma once

// From edge predictions to confirmed tracks: edge confidence, track score,
// thresholding, node-disjoint pruning and false-track-rate calibration of
// the final threshold.

#include <array>
#include <cstdint>
#include <limits>
#include <vector>

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/mflpn.hpp"
#include "glpmfd/radar_sim.hpp"

namespace glpmfd {

struct ScoreParams {
  std::array<double, 3> alpha{0.0, 0.2, 1.0};
  double lambda = 0.01;
  double gamma2 = -std::numeric_limits<double>::infinity();
  double edge_gate_eps = 0.1;

  void validate() const;
};

double edge_confidence(const std::array<double, 3>& pred, const ScoreParams& sp);
// Throws std::invalid_argument when any edge lacks a prediction.
std::vector<double> edge_confidence(const AssocGraph& graph, const ScoreParams& sp);

// Mean edge confidence plus lambda times the node count.
double score_track(const CandidateTrack& track, const ScoreParams& sp);

struct DetectionResult {
  std::vector<CandidateTrack> tracks;
  bool truncated = false;
};

// Descending S; ties prefer more nodes, then lexicographically smaller ids.
bool track_before(const CandidateTrack& a, const CandidateTrack& b);

// Graph must carry predictions. Candidates are all gated paths with >= M
// nodes (sub-paths of the maximal ones included); returns those with
// S > gamma2, sorted.
DetectionResult detect_tracks(const AssocGraph& graph, const ScoreParams& sp, const GraphConfig& gc);

// Greedy node-disjoint selection in track_before order.
std::vector<CandidateTrack> prune_tracks(std::vector<CandidateTrack> tracks);

// Runs inference, detection and pruning on one graph.
DetectionResult run_pipeline(const Model& model, AssocGraph& graph, const ScoreParams& sp, const GraphConfig& gc);

struct ThresholdCalibration {
  double gamma = -std::numeric_limits<double>::infinity();
  double target_rate = 0.0;
  double n_cells = 0.0;  // detection cells times windows
  std::size_t n_scores = 0;
  std::size_t n_above = 0;  // scores strictly above gamma
  double achieved_rate = 0.0;
  double rate_stderr = 0.0;
};

// Threshold such that the count of scores strictly above it is at most
// target_rate * n_cells. Throws std::invalid_argument if that allowance is
// under 5 false tracks; returns -inf when no rejection is needed.
ThresholdCalibration threshold_for_rate(std::vector<double> scores, double n_cells, double target_rate);

// Confirmed-track scores (gamma2 = -inf) over n_trials target-free windows.
std::vector<double> false_track_scores(const Model& model, const RadarConfig& radar, const GraphConfig& gc,
                                       const ScoreParams& sp, int n_trials, std::uint64_t seed,
                                       const char* stream = "calib-glp");

ThresholdCalibration calibrate_gamma2(const Model& model, const RadarConfig& radar, const GraphConfig& gc,
                                      const ScoreParams& sp, double target_pfa2, int n_trials, std::uint64_t seed);

}  // namespace glpmfd
