#include "glpmfd/radar_sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/non_central_chi_squared.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace glpmfd {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

double normal(Rng& rng, double sigma) {
  if (sigma <= 0.0) return 0.0;
  return std::normal_distribution<double>(0.0, sigma)(rng);
}

double unit_exponential(Rng& rng) { return std::exponential_distribution<double>(1.0)(rng); }

double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// |a + CN(0,1)|^2 for a real amplitude a.
double noisy_power(double amplitude, Rng& rng) {
  const double sigma = std::numbers::sqrt2 / 2.0;
  const double re = amplitude + normal(rng, sigma);
  const double im = normal(rng, sigma);
  return re * re + im * im;
}

// Normalised periodic Dirichlet kernel magnitude: 1 at offset 0, 0 at other integers.
double dirichlet(double delta, int n) {
  const double s = std::sin(std::numbers::pi * delta / n);
  if (std::abs(s) < 1e-12) return 1.0;
  return std::abs(std::sin(std::numbers::pi * delta) / (n * s));
}

}  // namespace

void RadarConfig::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("RadarConfig: " + what); };
  if (!(r_min_m < r_max_m)) fail("r_min must be below r_max");
  if (!(az_min_deg < az_max_deg)) fail("az_min must be below az_max");
  if (n_pulses < 2) fail("n_pulses must be at least 2");
  if (!(pfa1 >= 0.0 && pfa1 < 1.0)) fail("pfa1 must lie in [0, 1)");
  if (patch_range_cells < 1 || patch_range_cells % 2 == 0) fail("patch_range_cells must be odd and positive");
  if (!(range_res_m > 0.0) || !(az_res_deg > 0.0)) fail("resolutions must be positive");
  if (!(v_u > 0.0)) fail("v_u must be positive");
  if (!(frame_period_s > 0.0)) fail("frame_period_s must be positive");
  if (!(noise_coeff >= 0.0)) fail("noise_coeff must be non-negative");
}

long RadarConfig::n_range_cells() const { return std::lround((r_max_m - r_min_m) / range_res_m); }
long RadarConfig::n_beams() const { return std::lround((az_max_deg - az_min_deg) / az_res_deg); }

double RadarConfig::n_cells() const {
  return static_cast<double>(n_range_cells()) * static_cast<double>(n_beams()) * n_doppler();
}

double RadarConfig::az_res_rad() const { return az_res_deg * kDeg; }
double RadarConfig::gamma1() const { return threshold_from_pfa(pfa1); }

double TargetTruth::speed() const { return std::hypot(vx, vy); }

double Observation::x() const { return r * std::cos(theta); }
double Observation::y() const { return r * std::sin(theta); }

std::size_t ScanWindow::n_observations() const {
  std::size_t n = 0;
  for (const auto& f : frames) n += f.size();
  return n;
}

void ScanWindow::validate() const {
  for (std::size_t l = 0; l < frames.size(); ++l) {
    for (const Observation& z : frames[l]) {
      if (z.frame != static_cast<int>(l)) {
        throw std::invalid_argument("ScanWindow: observation frame index " + std::to_string(z.frame) +
                                    " stored in frame list " + std::to_string(l));
      }
    }
    if (l > 0 && !frames[l].empty() && !frames[l - 1].empty() && !(frames[l].front().t > frames[l - 1].front().t)) {
      throw std::invalid_argument("ScanWindow: frame times must increase");
    }
  }
}

double threshold_from_pfa(double pfa) {
  if (!(pfa >= 0.0 && pfa <= 1.0)) throw std::domain_error("threshold_from_pfa: pfa must lie in [0, 1]");
  if (pfa == 0.0) return std::numeric_limits<double>::infinity();
  return -std::log(pfa);
}

double wrap_velocity(double v, double v_u) {
  double w = std::fmod(v + v_u / 2.0, v_u);
  if (w < 0.0) w += v_u;
  if (w >= v_u) w -= v_u;
  return w - v_u / 2.0;
}

int doppler_channel(double v, const RadarConfig& cfg) {
  const int n = cfg.n_doppler();
  const auto d = static_cast<int>(std::floor((v + cfg.v_u / 2.0) / cfg.v_u * n));
  return std::clamp(d, 0, n - 1);
}

double cell_detection_probability(double snr_linear, double gamma) {
  if (gamma <= 0.0) return 1.0;
  if (snr_linear <= 0.0) return std::exp(-gamma);
  // 2|A + CN(0,1)|^2 is non-central chi-square with 2 dof and lambda = 2 A^2.
  boost::math::non_central_chi_squared_distribution<double> dist(2.0, 2.0 * snr_linear);
  return boost::math::cdf(boost::math::complement(dist, 2.0 * gamma));
}

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

double snr_estimate_db(double power) { return linear_to_db(std::max(power - 1.0, 1e-3)); }

TargetTruth propagate_target(const TargetTruth& truth, double dt) {
  TargetTruth out = truth;
  out.x += truth.vx * dt;
  out.y += truth.vy * dt;
  return out;
}

bool in_surveillance_region(double x, double y, const RadarConfig& cfg) {
  const double r = std::hypot(x, y);
  const double az = std::atan2(y, x) / kDeg;
  return r >= cfg.r_min_m && r < cfg.r_max_m && az >= cfg.az_min_deg && az < cfg.az_max_deg;
}

std::optional<Observation> measure_target(const TargetTruth& truth, double t, int frame, const RadarConfig& cfg,
                                          Rng& rng) {
  if (!in_surveillance_region(truth.x, truth.y, cfg)) return std::nullopt;
  const double r0 = std::hypot(truth.x, truth.y);
  const double theta0 = std::atan2(truth.y, truth.x);
  const double vr0 = (truth.vx * truth.x + truth.vy * truth.y) / r0;
  const double snr = db_to_linear(truth.snr_db);

  const double power = noisy_power(std::sqrt(snr), rng);
  if (power <= cfg.gamma1()) return std::nullopt;

  const double k = cfg.noise_coeff / std::sqrt(snr);
  Observation z;
  z.t = t;
  z.frame = frame;
  z.origin = truth.id;
  z.r = r0 + normal(rng, k * cfg.range_res_m);
  z.theta = theta0 + normal(rng, k * cfg.az_res_rad());
  z.v = wrap_velocity(vr0 + normal(rng, k * cfg.doppler_res()), cfg.v_u);
  z.d = doppler_channel(z.v, cfg);
  z.power = power;
  z.s = snr_estimate_db(power);
  z.patch = synthesize_rd_patch(truth.snr_db, z.v, cfg, rng);
  z.patch.at(z.d, cfg.patch_range_cells / 2) = power;
  return z;
}

Patch synthesize_rd_patch(std::optional<double> snr_db, double v, const RadarConfig& cfg, Rng& rng) {
  const int n = cfg.n_doppler();
  const int cols = cfg.patch_range_cells;
  const int center = cols / 2;
  Patch p{n, cols, std::vector<double>(static_cast<std::size_t>(n * cols))};
  if (!snr_db) {
    for (double& c : p.values) c = unit_exponential(rng);
    p.at(doppler_channel(v, cfg), center) = cfg.gamma1() + unit_exponential(rng);
    return p;
  }
  const double amp = std::sqrt(db_to_linear(*snr_db));
  // Fractional Doppler bin with bin k centred at k.
  const double f = (v + cfg.v_u / 2.0) / cfg.v_u * n - 0.5;
  for (int row = 0; row < n; ++row) {
    const double doppler_gain = dirichlet(row - f, n);
    for (int c = 0; c < cols; ++c) {
      const double range_gain = std::max(0.0, 1.0 - std::abs(c - center) / 2.0);
      p.at(row, c) = noisy_power(amp * doppler_gain * range_gain, rng);
    }
  }
  return p;
}

std::vector<Observation> generate_frame(std::span<const TargetTruth> truths, double t, int frame,
                                        const RadarConfig& cfg, Rng& rng) {
  std::vector<Observation> out;
  for (const TargetTruth& truth : truths) {
    if (auto z = measure_target(truth, t, frame, cfg, rng)) out.push_back(std::move(*z));
  }
  const auto n_cells = static_cast<long long>(cfg.n_cells());
  const long long n_fa = std::binomial_distribution<long long>(n_cells, cfg.pfa1)(rng);
  const double gamma1 = cfg.gamma1();
  for (long long k = 0; k < n_fa; ++k) {
    const auto range_cell = std::uniform_int_distribution<long>(0, cfg.n_range_cells() - 1)(rng);
    const auto beam = std::uniform_int_distribution<long>(0, cfg.n_beams() - 1)(rng);
    const auto channel = std::uniform_int_distribution<int>(0, cfg.n_doppler() - 1)(rng);
    Observation z;
    z.t = t;
    z.frame = frame;
    z.origin = kNoiseOrigin;
    z.r = cfg.r_min_m + (static_cast<double>(range_cell) + uniform01(rng)) * cfg.range_res_m;
    z.theta = (cfg.az_min_deg + (static_cast<double>(beam) + uniform01(rng)) * cfg.az_res_deg) * kDeg;
    z.v = -cfg.v_u / 2.0 + (channel + uniform01(rng)) * cfg.doppler_res();
    z.d = doppler_channel(z.v, cfg);
    z.power = gamma1 + unit_exponential(rng);
    z.s = snr_estimate_db(z.power);
    z.patch = synthesize_rd_patch(std::nullopt, z.v, cfg, rng);
    z.patch.at(z.d, cfg.patch_range_cells / 2) = z.power;
    out.push_back(std::move(z));
  }
  // Plot-extraction order: by range, then azimuth.
  std::sort(out.begin(), out.end(), [](const Observation& a, const Observation& b) {
    return a.r != b.r ? a.r < b.r : a.theta < b.theta;
  });
  return out;
}

SimulatedWindow simulate_window(std::span<const TargetTruth> initial, double t0, int n_frames,
                                const RadarConfig& cfg, Rng& rng) {
  cfg.validate();
  SimulatedWindow sw;
  sw.window.config = cfg;
  for (int l = 0; l < n_frames; ++l) {
    const double t = t0 + l * cfg.frame_period_s;
    std::vector<TargetTruth> now;
    now.reserve(initial.size());
    for (const TargetTruth& tt : initial) now.push_back(propagate_target(tt, t - t0));
    sw.window.frames.push_back(generate_frame(now, t, l, cfg, rng));
    sw.truths.push_back(std::move(now));
  }
  return sw;
}

RadarConfig desk_radar() {
  RadarConfig c;
  c.r_min_m = 100e3;
  c.r_max_m = 106e3;
  c.az_min_deg = -3.0;
  c.az_max_deg = 3.0;
  return c;
}

void SceneConfig::validate() const {
  radar.validate();
  if (min_targets < 0 || max_targets < min_targets) throw std::invalid_argument("SceneConfig: bad target count range");
  if (!(min_speed >= 0.0 && max_speed >= min_speed)) throw std::invalid_argument("SceneConfig: bad speed range");
  if (snr_list_db.empty()) throw std::invalid_argument("SceneConfig: snr_list_db is empty");
}

std::vector<TargetTruth> draw_targets(const SceneConfig& scene, int count, int n_frames, double snr_db, Rng& rng) {
  const RadarConfig& c = scene.radar;
  const double span = (n_frames - 1) * c.frame_period_s;
  std::vector<TargetTruth> out;
  for (int id = 0; id < count; ++id) {
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000) throw std::runtime_error("draw_targets: region too small for the requested motion");
      const double r = c.r_min_m + uniform01(rng) * (c.r_max_m - c.r_min_m);
      const double az = (c.az_min_deg + uniform01(rng) * (c.az_max_deg - c.az_min_deg)) * kDeg;
      const double heading = uniform01(rng) * 2.0 * std::numbers::pi;
      const double speed = scene.min_speed + uniform01(rng) * (scene.max_speed - scene.min_speed);
      TargetTruth t{id, r * std::cos(az), speed * std::cos(heading), r * std::sin(az), speed * std::sin(heading),
                    snr_db};
      const TargetTruth end = propagate_target(t, span);
      if (in_surveillance_region(end.x, end.y, c)) {
        out.push_back(t);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------- CA-CFAR

double cfar_alpha(int n_ref, double pfa) {
  if (n_ref < 2 || n_ref % 2 != 0) throw std::invalid_argument("cfar_alpha: n_ref must be even and >= 2");
  if (!(pfa > 0.0 && pfa < 1.0)) throw std::domain_error("cfar_alpha: pfa must lie in (0, 1)");
  return n_ref * (std::pow(pfa, -1.0 / n_ref) - 1.0);
}

std::vector<bool> ca_cfar(std::span<const double> cells, const CfarParams& params) {
  const double alpha = cfar_alpha(params.n_ref, params.pfa);
  if (params.n_guard < 0) throw std::invalid_argument("ca_cfar: negative guard count");
  const auto n = static_cast<long>(cells.size());
  const long half = params.n_ref / 2;
  if (n < params.n_ref + 2 * params.n_guard + 1) {
    throw std::invalid_argument("ca_cfar: " + std::to_string(n) + " cells is smaller than the CFAR window");
  }
  std::vector<bool> hit(cells.size(), false);
  for (long i = 0; i < n; ++i) {
    double ref = 0.0;
    for (long k = params.n_guard + 1; k <= params.n_guard + half; ++k) {
      ref += cells[static_cast<std::size_t>((i + k) % n)];
      ref += cells[static_cast<std::size_t>(((i - k) % n + n) % n)];
    }
    hit[static_cast<std::size_t>(i)] = cells[static_cast<std::size_t>(i)] > alpha * ref / params.n_ref;
  }
  return hit;
}

double ca_cfar_detection_probability(double snr_linear, const CfarParams& params) {
  const double alpha = cfar_alpha(params.n_ref, params.pfa);
  const int n = params.n_ref;
  // Reference sum Z ~ Gamma(n, 1); threshold alpha * Z / n.
  auto integrand = [&](double z) {
    const double density = boost::math::gamma_p_derivative(static_cast<double>(n), z);
    return density * cell_detection_probability(snr_linear, alpha * z / n);
  };
  const double upper = boost::math::gamma_p_inv(static_cast<double>(n), 1.0 - 1e-15);
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, upper, 15, 1e-12);
}

}  // namespace glpmfd
