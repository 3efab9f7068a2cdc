#include <cmath>
#include <numbers>

#include "doctest.h"
#include "glpmfd/radar_sim.hpp"
#include "helpers.hpp"

using namespace glpmfd;

namespace {

// Rician tail by direct quadrature of the non-central exponential density.
double rician_tail_oracle(double snr, double gamma) {
  const double hi = gamma + 60.0 + 4.0 * snr;
  const int n = 200000;
  const double h = (hi - gamma) / n;
  auto f = [&](double x) { return std::exp(-(x + snr)) * std::cyl_bessel_i(0.0, 2.0 * std::sqrt(snr * x)); };
  double s = f(gamma) + f(hi);
  for (int k = 1; k < n; ++k) s += f(gamma + k * h) * (k % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

RadarConfig quiet_radar() {
  RadarConfig c = desk_radar();
  c.noise_coeff = 0.0;
  return c;
}

}  // namespace

TEST_CASE("primary threshold from pfa") {
  CHECK(threshold_from_pfa(1.0) == 0.0);
  CHECK(threshold_from_pfa(1e-3) == doctest::Approx(6.907755).epsilon(1e-7));
  CHECK(threshold_from_pfa(1e-6) == doctest::Approx(13.815511).epsilon(1e-7));
  CHECK(std::isinf(threshold_from_pfa(0.0)));
  CHECK_THROWS_AS(threshold_from_pfa(1.5), std::domain_error);
  CHECK_THROWS_AS(threshold_from_pfa(-0.1), std::domain_error);
}

TEST_CASE("constant-velocity propagation") {
  TargetTruth a{0, 0.0, 100.0, 0.0, 0.0, 10.0};
  CHECK(propagate_target(a, 0.0).x == 0.0);
  CHECK(propagate_target(a, 1.0).x == 100.0);
  TargetTruth b{0, 1e5, -50.0, 2e5, 25.0, 10.0};
  const TargetTruth c = propagate_target(b, 2.0);
  CHECK(c.x == 99900.0);
  CHECK(c.vx == -50.0);
  CHECK(c.y == 200050.0);
  CHECK(c.vy == 25.0);
}

TEST_CASE("noiseless measurement of a boresight target") {
  RadarConfig cfg = quiet_radar();
  Rng rng = make_rng(1, "t");
  TargetTruth tt{3, 1e5 + 500.0, 100.0, 0.0, 0.0, 30.0};
  auto z = measure_target(tt, 0.0, 0, cfg, rng);
  REQUIRE(z);
  CHECK(z->r == 1e5 + 500.0);
  CHECK(z->theta == 0.0);
  CHECK(z->v == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(z->origin == 3);
  CHECK(z->d == doppler_channel(100.0, cfg));
}

TEST_CASE("radial velocity wraps into the unambiguous interval") {
  RadarConfig cfg = quiet_radar();
  Rng rng = make_rng(2, "t");
  TargetTruth tt{0, 1e5 + 500.0, 200.0, 0.0, 0.0, 30.0};
  auto z = measure_target(tt, 0.0, 0, cfg, rng);
  REQUIRE(z);
  CHECK(z->v == doctest::Approx(-100.0).epsilon(1e-12));
  CHECK(wrap_velocity(150.0, 300.0) == -150.0);
  CHECK(wrap_velocity(-150.0, 300.0) == -150.0);
  CHECK(wrap_velocity(-450.0, 300.0) == -150.0);
}

TEST_CASE("doppler channel indices") {
  RadarConfig cfg = desk_radar();
  CHECK(doppler_channel(-150.0, cfg) == 0);
  CHECK(doppler_channel(149.999, cfg) == 31);
  CHECK(doppler_channel(0.0, cfg) == 16);
  CHECK(doppler_channel(1e9, cfg) == 31);
}

TEST_CASE("analytic cell detection probability matches an independent quadrature") {
  for (double snr_db : {0.0, 7.0, 10.0, 13.0}) {
    const double snr = db_to_linear(snr_db);
    CHECK(cell_detection_probability(snr, 6.907755) ==
          doctest::Approx(rician_tail_oracle(snr, 6.907755)).epsilon(1e-8));
  }
  CHECK(cell_detection_probability(0.0, 3.0) == doctest::Approx(std::exp(-3.0)));
}

TEST_CASE("per-cell detection rate at 10 dB matches the analytic tail") {
  RadarConfig cfg = desk_radar();
  Rng rng = make_rng(3, "t");
  TargetTruth tt{0, 1e5 + 3000.0, 0.0, 0.0, 0.0, 10.0};
  const int n = 100000;
  int hits = 0;
  for (int k = 0; k < n; ++k) hits += measure_target(tt, 0.0, 0, cfg, rng).has_value();
  CHECK(testutil::within_3sigma(hits, n, cell_detection_probability(10.0, cfg.gamma1())));
}

TEST_CASE("strong target patch peaks at its Doppler channel") {
  RadarConfig cfg = quiet_radar();
  Rng rng = make_rng(4, "t");
  for (double v : {-140.0, -20.0, 0.0, 77.0, 149.0}) {
    const Patch p = synthesize_rd_patch(60.0, v, cfg, rng);
    int best = 0;
    for (int r = 1; r < p.rows; ++r)
      if (p.at(r, 2) > p.at(best, 2)) best = r;
    CHECK(best == doppler_channel(v, cfg));
  }
}

TEST_CASE("noise patch centre exceeds the primary threshold") {
  RadarConfig cfg = desk_radar();
  Rng rng = make_rng(5, "t");
  for (int k = 0; k < 100; ++k) {
    const Patch p = synthesize_rd_patch(std::nullopt, 10.0, cfg, rng);
    CHECK(p.at(doppler_channel(10.0, cfg), 2) > cfg.gamma1());
  }
}

TEST_CASE("target patch noise floor has unit mean away from the peak") {
  RadarConfig cfg = desk_radar();
  Rng rng = make_rng(7, "t");
  // Channel-centred Doppler puts the other rows on Dirichlet nulls; outer
  // columns have zero range gain, so every non-peak-row cell is pure noise.
  const double v = -150.0 + 10.5 * cfg.doppler_res();
  double sum = 0.0;
  long n = 0;
  for (int k = 0; k < 10000; ++k) {
    const Patch p = synthesize_rd_patch(12.0, v, cfg, rng);
    for (int r = 0; r < p.rows; ++r)
      for (int c = 0; c < p.cols; ++c)
        if (r != 10) {
          sum += p.at(r, c);
          ++n;
        }
  }
  // exponential cells: sd of the mean is 1/sqrt(n)
  CHECK(std::abs(sum / n - 1.0) <= 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("no false alarms and no targets give an empty frame") {
  RadarConfig cfg = desk_radar();
  cfg.pfa1 = 0.0;
  Rng rng = make_rng(7, "t");
  CHECK(generate_frame({}, 0.0, 0, cfg, rng).empty());
}

TEST_CASE("false alarm count is binomial over the cells") {
  RadarConfig cfg;
  cfg.r_min_m = 100e3;
  cfg.r_max_m = 100e3 + 100.0 * 625;  // 625 range cells x 50 beams x 32 = 1e6
  cfg.az_min_deg = -50.0;
  cfg.az_max_deg = 50.0;
  REQUIRE(cfg.n_cells() == 1e6);
  Rng rng = make_rng(8, "t");
  double total = 0.0;
  const int trials = 20;
  for (int k = 0; k < trials; ++k) total += static_cast<double>(generate_frame({}, 0.0, 0, cfg, rng).size());
  const double mean = total / trials;
  CHECK(std::abs(mean - 1000.0) <= 3.0 * std::sqrt(999.0) / std::sqrt(static_cast<double>(trials)));
}

TEST_CASE("strong noiseless target yields one target plot per frame") {
  RadarConfig cfg = quiet_radar();
  Rng rng = make_rng(9, "t");
  const std::vector<TargetTruth> tt{{4, 1e5 + 1000.0, 150.0, 0.0, 20.0, 20.0}};
  const SimulatedWindow w = simulate_window(tt, 0.0, 5, cfg, rng);
  for (const auto& f : w.window.frames) {
    int n = 0;
    for (const Observation& z : f) n += z.origin == 4;
    CHECK(n == 1);
  }
}

TEST_CASE("frames are sorted by range then azimuth") {
  RadarConfig cfg = desk_radar();
  cfg.pfa1 = 1e-2;
  Rng rng = make_rng(10, "t");
  const auto f = generate_frame({}, 0.0, 0, cfg, rng);
  REQUIRE(f.size() > 10);
  for (std::size_t k = 1; k < f.size(); ++k) CHECK(f[k - 1].r <= f[k].r);
}

TEST_CASE("simulation is deterministic in the seed") {
  SceneConfig scene;
  Rng a = make_rng(11, "sim"), b = make_rng(11, "sim");
  const auto ta = draw_targets(scene, 2, 5, 10.0, a);
  const auto tb = draw_targets(scene, 2, 5, 10.0, b);
  CHECK(simulate_window(ta, 0.0, 5, scene.radar, a).window.frames ==
        simulate_window(tb, 0.0, 5, scene.radar, b).window.frames);
}

TEST_CASE("drawn targets stay inside the region for the whole window") {
  SceneConfig scene;
  Rng rng = make_rng(12, "t");
  for (int k = 0; k < 50; ++k)
    for (const TargetTruth& t : draw_targets(scene, 3, 5, 9.0, rng)) {
      CHECK(t.speed() >= scene.min_speed);
      CHECK(t.speed() <= scene.max_speed);
      for (int l = 0; l < 5; ++l) {
        const TargetTruth p = propagate_target(t, l);
        CHECK(in_surveillance_region(p.x, p.y, scene.radar));
      }
    }
}

TEST_CASE("CA-CFAR scaling factor") {
  CHECK(cfar_alpha(16, 1e-6) == doctest::Approx(16.0 * (std::pow(10.0, 6.0 / 16.0) - 1.0)).epsilon(1e-14));
  CHECK(cfar_alpha(16, 1e-6) == doctest::Approx(21.942).epsilon(1e-4));
  CHECK_THROWS_AS(cfar_alpha(15, 1e-6), std::invalid_argument);
}

TEST_CASE("CA-CFAR on a flat line detects nothing") {
  std::vector<double> cells(64, 2.5);
  CfarParams p;
  for (bool h : ca_cfar(cells, p)) CHECK_FALSE(h);
}

TEST_CASE("CA-CFAR finds an isolated spike") {
  std::vector<double> cells(64, 1.0);
  cells[20] = 100.0;
  CfarParams p;
  p.pfa = 1e-3;
  const auto hit = ca_cfar(cells, p);
  for (std::size_t k = 0; k < cells.size(); ++k) CHECK(hit[k] == (k == 20));
}

TEST_CASE("CA-CFAR rejects lines shorter than its window") {
  std::vector<double> cells(10, 1.0);
  CHECK_THROWS_AS(ca_cfar(cells, CfarParams{}), std::invalid_argument);
}

TEST_CASE("CA-CFAR empirical false alarm rate") {
  CfarParams p;
  p.pfa = 1e-4;
  Rng rng = make_rng(13, "t");
  std::exponential_distribution<double> e(1.0);
  std::vector<double> line(1000);
  long hits = 0, n = 0;
  for (int rep = 0; rep < 1000; ++rep) {
    for (double& c : line) c = e(rng);
    for (bool h : ca_cfar(line, p)) hits += h;
    n += static_cast<long>(line.size());
  }
  CHECK(testutil::within_3sigma(static_cast<double>(hits), static_cast<double>(n), p.pfa));
}

TEST_CASE("CA-CFAR analytic Pd matches simulation") {
  CfarParams p;
  p.pfa = 1e-4;
  const double snr = db_to_linear(13.0);
  Rng rng = make_rng(14, "t");
  std::exponential_distribution<double> e(1.0);
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  std::vector<double> line(19);
  const int n = 50000;
  int hits = 0;
  for (int k = 0; k < n; ++k) {
    for (double& c : line) c = e(rng);
    const double re = std::sqrt(snr) + g(rng), im = g(rng);
    line[9] = re * re + im * im;
    hits += ca_cfar(line, p)[9];
  }
  const double pd = ca_cfar_detection_probability(snr, p);
  CHECK(testutil::within_3sigma(hits, n, pd));
  // the CFAR loss makes it weaker than the known-noise detector
  CHECK(pd < cell_detection_probability(snr, threshold_from_pfa(p.pfa)));
}
