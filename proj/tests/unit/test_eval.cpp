#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "glpmfd/eval.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace glpmfd;

namespace {

Observation at(double x, double y, int frame, int origin) {
  Observation z;
  z.r = std::hypot(x, y);
  z.theta = std::atan2(y, x);
  z.t = frame;
  z.frame = frame;
  z.origin = origin;
  z.power = 20.0;
  return z;
}

// Target 0 detected at the given frames of a five-frame window.
AssocGraph target_graph(const std::vector<int>& frames, const GraphConfig& gc) {
  ScanWindow w;
  w.frames.resize(5);
  for (int f : frames) w.frames[static_cast<std::size_t>(f)].push_back(at(1e5 + 100.0 * f, 0, f, 0));
  return build_graph(w, gc);
}

}  // namespace

TEST_CASE("least-squares smoothing") {
  const std::vector<double> t{0, 1, 2, 3};
  const std::vector<Point2> line{{1, 2}, {3, 1}, {5, 0}, {7, -1}};
  const auto s = smooth_track(t, line);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(s[k].x == doctest::Approx(line[k].x).epsilon(1e-12));
    CHECK(s[k].y == doctest::Approx(line[k].y).epsilon(1e-12));
  }
  // middle outlier: fit of (0,0),(1,3),(2,0) is the constant 1 in y
  const std::vector<double> t3{0, 1, 2};
  const auto o = smooth_track(t3, std::vector<Point2>{{0, 0}, {1, 3}, {2, 0}});
  for (const Point2& q : o) CHECK(q.y == doctest::Approx(1.0));
  CHECK(o[1].x == doctest::Approx(1.0));
  const auto two = smooth_track(std::vector<double>{0, 2}, std::vector<Point2>{{1, 1}, {5, -3}});
  CHECK(two[1].x == doctest::Approx(5.0));
  CHECK(two[1].y == doctest::Approx(-3.0));
  CHECK_THROWS(smooth_track(std::vector<double>{0}, std::vector<Point2>{{0, 0}}));
}

TEST_CASE("hungarian assignment matches brute force") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0, 10);
  for (int trial = 0; trial < 200; ++trial) {
    const int rows = 1 + trial % 5, cols = rows + trial % 3;
    std::vector<std::vector<double>> c(static_cast<std::size_t>(rows), std::vector<double>(static_cast<std::size_t>(cols)));
    for (auto& r : c)
      for (double& v : r) v = std::floor(u(rng));  // integer costs create ties
    double total = 0.0;
    const auto a = hungarian(c, &total);
    std::vector<int> idx(static_cast<std::size_t>(cols));
    std::iota(idx.begin(), idx.end(), 0);
    double best = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int i = 0; i < rows; ++i) s += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
      best = std::min(best, s);
    } while (std::next_permutation(idx.begin(), idx.end()));
    double used = 0.0;
    for (int i = 0; i < rows; ++i) used += c[static_cast<std::size_t>(i)][static_cast<std::size_t>(a[static_cast<std::size_t>(i)])];
    CHECK(used == best);
    CHECK(total == best);
    std::vector<int> sorted = a;
    std::sort(sorted.begin(), sorted.end());
    CHECK(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end());
  }
}

TEST_CASE("ospa hand cases") {
  OspaParams p;
  const std::vector<Point2> X{{0, 0}, {10, 5}};
  CHECK(ospa(X, X, p) == 0.0);
  CHECK(ospa(std::vector<Point2>{{3, 4}}, std::vector<Point2>{{3, 4}, {900, 0}}, p) ==
        doctest::Approx(p.eta / std::sqrt(2.0)).epsilon(1e-12));
  CHECK(ospa(X, std::vector<Point2>{{5000, 0}, {0, 5000}}, p) == doctest::Approx(p.eta).epsilon(1e-12));
  CHECK(ospa(std::vector<Point2>{}, std::vector<Point2>{}, p) == 0.0);
  CHECK(ospa(std::vector<Point2>{}, X, p) == p.eta);
}

TEST_CASE("ospa matches brute force and is symmetric") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1500);
  for (int trial = 0; trial < 300; ++trial) {
    OspaParams p;
    p.xi = 1.0 + (trial % 3);
    std::vector<Point2> X, Y;
    for (int k = 0; k < trial % 6 + 1; ++k) X.push_back({u(rng), u(rng)});
    for (int k = 0; k < (trial / 6) % 6; ++k) Y.push_back({u(rng), u(rng)});
    const double d = ospa(X, Y, p);
    CHECK(d == oracle::ospa(X, Y, p));
    CHECK(d == ospa(Y, X, p));
    CHECK(d >= 0.0);
    CHECK(d <= p.eta * (1 + 1e-12));
  }
}

TEST_CASE("correctness uses a strict inequality") {
  OspaParams p;
  p.eta = 100.0;
  p.kappa = 0.5;
  const std::vector<Point2> truth{{0, 0}};
  CHECK(is_correct_detection(truth, truth, p));
  CHECK_FALSE(is_correct_detection(truth, std::vector<Point2>{{50, 0}}, p));
  CHECK(is_correct_detection(truth, std::vector<Point2>{{49.999, 0}}, p));
  CHECK_FALSE(is_correct_detection(truth, std::vector<Point2>{{500, 0}}, p));
}

TEST_CASE("type 7 quantiles and boxplot") {
  CHECK(quantile({1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile({5, 1, 3}, 1.0) == 5.0);
  CHECK(quantile({5, 1, 3}, 0.0) == 1.0);
  const BoxStats b = boxplot({1, 2, 3, 4, 5, 6, 7, 8, 100});
  CHECK(b.median == 5.0);
  CHECK(b.q1 == 3.0);
  CHECK(b.q3 == 7.0);
  CHECK(b.lo_whisker == 1.0);
  CHECK(b.hi_whisker == 8.0);
  CHECK(b.outliers == std::vector<double>{100.0});
}

TEST_CASE("kappa calibration") {
  SceneConfig s;
  s.snr_list_db = {12.0};
  const GraphConfig gc;
  OspaParams p;
  p.eta = eta_from_radar(s.radar, 10.0);
  const KappaCalibration all = calibrate_kappa(s, gc, p, 12.0, 40, 1.0, 3);
  REQUIRE_FALSE(all.ratios.empty());
  CHECK(all.kappa == *std::max_element(all.ratios.begin(), all.ratios.end()));
  s.radar.noise_coeff = 0.0;
  const KappaCalibration zero = calibrate_kappa(s, gc, p, 12.0, 10, 0.99, 3);
  for (double r : zero.ratios) CHECK(r <= 1e-9);
}

TEST_CASE("detection upper bound") {
  GraphConfig gc;
  CHECK(pd_upper_bound(target_graph({0, 1, 2, 3, 4}, gc), 0, gc));
  CHECK_FALSE(pd_upper_bound(target_graph({1, 3}, gc), 0, gc));
  CHECK_FALSE(pd_upper_bound(target_graph({0, 1, 4}, gc), 0, gc));
  CHECK(pd_upper_bound(target_graph({0, 2, 4}, gc), 0, gc));
  CHECK_FALSE(pd_upper_bound(target_graph({0, 2, 4}, gc), 1, gc));
}

TEST_CASE("gated NCI baseline") {
  GraphConfig gc;
  const AssocGraph g = target_graph({0, 1, 2, 3, 4}, gc);
  NciParams loose;
  loose.fe_gate = 1e9;
  loose.dcd_gate = 100;
  loose.gamma = 50.0;
  const DetectionResult r = baseline_gated_nci(g, gc, loose);
  REQUIRE(r.tracks.size() == 1);
  CHECK(r.tracks[0].S == doctest::Approx(100.0));
  NciParams shut = loose;
  shut.fe_gate = 0.0;
  shut.dcd_gate = 0;
  CHECK(baseline_gated_nci(g, gc, shut).tracks.empty());
  const NciParams d = default_nci(desk_radar(), 10.0);
  CHECK(d.fe_gate > 0.0);
  CHECK(d.dcd_gate == 1);
}

TEST_CASE("track assessment against truth") {
  GraphConfig gc;
  AssocGraph g = target_graph({0, 1, 2, 3, 4}, gc);
  std::vector<std::vector<TargetTruth>> truths(5);
  for (int f = 0; f < 5; ++f) {
    TargetTruth t;
    t.id = 0;
    t.x = 1e5 + 100.0 * f;
    truths[static_cast<std::size_t>(f)].push_back(t);
  }
  CandidateTrack track;
  track.node_ids = {0, 1, 2, 3, 4};
  OspaParams p;
  const TrackAssessment a = assess_track(track, g, truths, p);
  CHECK(a.target == 0);
  CHECK(a.correct);
  CHECK(a.distance == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("permutation importance sanity") {
  const auto g = testutil::toy_graph(20, 40, 3);
  Model m = init_model(ModelDims{}, Variant::Full, 3);
  std::vector<GraphTensors> set{prepare_inputs(g, m.dims)};
  const double base = set_accuracy(m, set);
  for (Feature f : {Feature::SNR, Feature::DC, Feature::CI, Feature::RDM, Feature::STC, Feature::DCD}) {
    auto copy = set;
    const std::size_t n = feature_is_edge(f) ? 40 : 20;
    std::vector<std::size_t> id(n);
    std::iota(id.begin(), id.end(), std::size_t{0});
    apply_permutation(copy, f, id);
    CHECK(set_accuracy(m, copy) == base);
    CHECK(parse_feature(feature_name(f)) == f);
  }
  CHECK_THROWS(parse_feature("XYZ"));
  for (std::size_t i = 0; i < m.params.size(); ++i)
    if (m.params.names[i] == "nfen.s.L0.W") m.params.values[i].fill(0.0);
  const ImportanceResult r = permutation_importance(m, {g}, Feature::SNR, 5, -1, 9);
  CHECK(r.drops.size() == 5);
  for (double d : r.drops) CHECK(d == 0.0);
}
