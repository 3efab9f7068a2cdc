#pragma once

// Coherent-radar scene simulation: constant-velocity targets, per-cell
// square-law detection against a primary threshold, range-Doppler patches,
// receiver-noise false alarms and a CA-CFAR single-frame detector.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "glpmfd/rng.hpp"

namespace glpmfd {

inline constexpr int kNoiseOrigin = -1;

struct RadarConfig {
  double range_res_m = 100.0;
  double az_res_deg = 2.0;
  int n_pulses = 32;  // also the number of Doppler channels
  double r_min_m = 100e3;
  double r_max_m = 300e3;
  double az_min_deg = -60.0;
  double az_max_deg = 60.0;
  double v_u = 300.0;  // unambiguous radial-velocity span, m/s
  double frame_period_s = 1.0;
  double pfa1 = 1e-3;
  int patch_range_cells = 5;
  double noise_coeff = 0.70710678118654752440;

  void validate() const;

  int n_doppler() const { return n_pulses; }
  long n_range_cells() const;
  long n_beams() const;
  // Detection cells of the surveillance region (range x beam x Doppler).
  double n_cells() const;
  double doppler_res() const { return v_u / n_pulses; }
  double az_res_rad() const;
  double gamma1() const;
};

struct TargetTruth {
  int id = 0;
  double x = 0.0, vx = 0.0, y = 0.0, vy = 0.0;
  double snr_db = 0.0;

  double speed() const;
};

// Range-Doppler patch: n_doppler rows x patch_range_cells columns, row-major.
struct Patch {
  int rows = 0;
  int cols = 0;
  std::vector<double> values;

  double at(int r, int c) const { return values[static_cast<std::size_t>(r * cols + c)]; }
  double& at(int r, int c) { return values[static_cast<std::size_t>(r * cols + c)]; }
  friend bool operator==(const Patch&, const Patch&) = default;
};

struct Observation {
  double t = 0.0;
  double r = 0.0;
  double theta = 0.0;  // radians, measured from the +x axis
  double v = 0.0;      // wrapped radial velocity
  int d = 0;           // Doppler channel
  double s = 0.0;      // SNR estimate, dB
  double power = 0.0;  // detection-cell power (unit-mean noise)
  int frame = 0;
  Patch patch;
  int origin = kNoiseOrigin;

  double x() const;
  double y() const;
  friend bool operator==(const Observation&, const Observation&) = default;
};

struct ScanWindow {
  RadarConfig config;
  std::vector<std::vector<Observation>> frames;

  std::size_t n_observations() const;
  void validate() const;
};

// P(exponential unit-mean cell > gamma) = pfa; pfa = 0 gives +inf.
double threshold_from_pfa(double pfa);

// Wrap into [-v_u/2, v_u/2).
double wrap_velocity(double v, double v_u);

int doppler_channel(double v, const RadarConfig& cfg);

// Probability that |A e^{j phi} + CN(0,1)|^2 exceeds gamma, A^2 = snr_linear.
double cell_detection_probability(double snr_linear, double gamma);

double db_to_linear(double db);
double linear_to_db(double lin);

// SNR estimate (dB) from a detection-cell power.
double snr_estimate_db(double power);

TargetTruth propagate_target(const TargetTruth& truth, double dt);

bool in_surveillance_region(double x, double y, const RadarConfig& cfg);

// Noisy plot for a target, or nullopt when it falls outside the region or
// its cell power does not exceed the primary threshold.
std::optional<Observation> measure_target(const TargetTruth& truth, double t, int frame, const RadarConfig& cfg,
                                          Rng& rng);

// Target patch when snr_db is set, noise-origin patch otherwise.
Patch synthesize_rd_patch(std::optional<double> snr_db, double v, const RadarConfig& cfg, Rng& rng);

std::vector<Observation> generate_frame(std::span<const TargetTruth> truths, double t, int frame,
                                        const RadarConfig& cfg, Rng& rng);

struct SimulatedWindow {
  ScanWindow window;
  // truths[l] holds target states at frame l
  std::vector<std::vector<TargetTruth>> truths;
};

// Propagates `initial` through n_frames frames starting at t0.
SimulatedWindow simulate_window(std::span<const TargetTruth> initial, double t0, int n_frames,
                                const RadarConfig& cfg, Rng& rng);

// Desk-scale surveillance subarea: 100-106 km, 3 beams (5760 detection cells).
RadarConfig desk_radar();

// Random constant-velocity scenarios inside the surveillance region.
struct SceneConfig {
  RadarConfig radar = desk_radar();
  int min_targets = 1;
  int max_targets = 3;
  double min_speed = 50.0;
  double max_speed = 300.0;
  std::vector<double> snr_list_db{7, 8, 9, 10, 11, 12};

  void validate() const;
};

// Targets that stay inside the region for n_frames frames; ids 0..count-1.
std::vector<TargetTruth> draw_targets(const SceneConfig& scene, int count, int n_frames, double snr_db, Rng& rng);

// ---------------------------------------------------------------- CA-CFAR

struct CfarParams {
  int n_ref = 16;  // reference cells, split evenly on both sides
  int n_guard = 1; // guard cells on each side
  double pfa = 1e-6;
};

double cfar_alpha(int n_ref, double pfa);

// Cell-averaging CFAR along a 1-D line of cells with circular indexing.
std::vector<bool> ca_cfar(std::span<const double> cells, const CfarParams& params);

// Exact CA-CFAR detection probability for a non-fluctuating target of the
// given linear SNR (target cell averaged over the reference-sum law).
double ca_cfar_detection_probability(double snr_linear, const CfarParams& params);

}  // namespace glpmfd
