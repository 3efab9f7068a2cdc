#pragma once

// Evaluation: OSPA-based track correctness, the detection upper bound,
// the gated non-coherent-integration baseline, Monte-Carlo Pd curves and
// permutation feature importance.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/mflpn.hpp"
#include "glpmfd/radar_sim.hpp"
#include "glpmfd/track_pipeline.hpp"
#include "glpmfd/trainer.hpp"

namespace glpmfd {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct OspaParams {
  double xi = 2.0;
  double eta = 1000.0;
  double kappa = 0.5;

  void validate() const;
};

// Per-coordinate least-squares line in time, evaluated at the plot times.
std::vector<Point2> smooth_track(std::span<const double> t, std::span<const Point2> p);

// Minimum-cost assignment of rows to distinct columns (rows <= cols).
// Returns the column of each row.
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost, double* total = nullptr);

// Both empty -> 0; exactly one empty -> eta.
double ospa(std::span<const Point2> X, std::span<const Point2> Xhat, const OspaParams& p);

bool is_correct_detection(std::span<const Point2> truth, std::span<const Point2> smoothed, const OspaParams& p);

// eta as a multiple of the RMS plot position error at the reference SNR,
// evaluated at the near edge of the region.
double eta_from_radar(const RadarConfig& radar, double snr_db, double multiple = 5.0);

struct KappaCalibration {
  double kappa = 0.0;
  double quantile = 0.99;
  std::vector<double> ratios;  // d / eta per pure-target track
};

// kappa as the q-quantile of d/eta over smoothed pure-target tracks.
KappaCalibration calibrate_kappa(const SceneConfig& scene, const GraphConfig& gc, const OspaParams& p, double snr_db,
                                 int n_trials, double q, std::uint64_t seed);

// Whether the target's own plots form a graph path with at least M nodes.
bool pd_upper_bound(const AssocGraph& graph, int target_id, const GraphConfig& gc);

struct NciParams {
  double fe_gate = 95.0;  // m/s, both F_E entries must be below
  int dcd_gate = 1;
  double gamma = -std::numeric_limits<double>::infinity();
};

// Gates at 3 sigma of the F_E noise at the reference SNR; dcd gate 1.
NciParams default_nci(const RadarConfig& radar, double snr_ref_db);

// Sum of plot powers over maximal gated paths, thresholded and pruned.
DetectionResult baseline_gated_nci(const AssocGraph& graph, const GraphConfig& gc, const NciParams& nci);

std::vector<double> nci_false_track_scores(const RadarConfig& radar, const GraphConfig& gc, const NciParams& nci,
                                           int n_trials, std::uint64_t seed, const char* stream = "calib-nci");

ThresholdCalibration calibrate_nci(const RadarConfig& radar, const GraphConfig& gc, const NciParams& nci,
                                   double target_pfa2, int n_trials, std::uint64_t seed);

// Truth assignment of one confirmed track within a window.
struct TrackAssessment {
  int target = kNoiseOrigin;  // matched target, or noise when there are none
  bool correct = false;
  double distance = 0.0;
};

// truths[l] holds target states at window frame l.
TrackAssessment assess_track(const CandidateTrack& track, const AssocGraph& graph,
                             const std::vector<std::vector<TargetTruth>>& truths, const OspaParams& p);

struct EvalConfig {
  SceneConfig scene;
  GraphConfig gc;
  ScoreParams sp;
  OspaParams ospa;
  NciParams nci;
  CfarParams cfar;
  std::vector<double> snr_list_db{10.0};
  int max_windows = 5;
  int n_runs = 100;
  std::uint64_t seed = 1;
};

struct CurvePoint {
  double snr_db = 0.0;
  int windows = 0;
  std::string method;
  double pd = 0.0;
  double pd_stderr = 0.0;
  double pfa2_achieved = 0.0;
  long n_targets = 0;
};

struct EvalReport {
  std::vector<CurvePoint> rows;
  // GLP correct detections in windows where the upper-bound path is absent.
  long upb_exceptions = 0;
  bool exceptions_satisfy_criterion = true;
  double cfar_analytic_pd = 0.0;  // at the last evaluated SNR
  int n_runs = 0;
  double seconds = 0.0;

  const CurvePoint& find(double snr_db, int windows, const std::string& method) const;
};

EvalReport monte_carlo_curves(const Model& model, const EvalConfig& cfg);

// ---------------------------------------------------------------- importance

enum class Feature { SNR, DC, CI, RDM, STC, DCD };

const char* feature_name(Feature f);
Feature parse_feature(const std::string& name);
bool feature_is_edge(Feature f);

// perm maps destination slot -> source slot over the concatenated nodes
// (node features) or edges (edge features) of the set.
void apply_permutation(std::vector<GraphTensors>& set, Feature f, std::span<const std::size_t> perm);

// Edge accuracy over the set, restricted to one true label when label >= 0.
double set_accuracy(const Model& model, const std::vector<GraphTensors>& set, int label = -1);

struct BoxStats {
  double q1 = 0.0, median = 0.0, q3 = 0.0;
  double lo_whisker = 0.0, hi_whisker = 0.0;
  std::vector<double> outliers;
};

// Linear-interpolation quartiles and 1.5 IQR whiskers.
BoxStats boxplot(std::vector<double> v);
double quantile(std::vector<double> v, double q);

struct ImportanceResult {
  Feature feature = Feature::SNR;
  int class_context = -1;
  double base_accuracy = 0.0;
  std::vector<double> drops;
  BoxStats box;
};

ImportanceResult permutation_importance(const Model& model, const std::vector<AssocGraph>& graphs, Feature f,
                                        int n_repeats, int class_context, std::uint64_t seed);

}  // namespace glpmfd
