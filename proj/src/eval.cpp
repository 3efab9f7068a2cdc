#include "glpmfd/eval.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

namespace glpmfd {

void OspaParams::validate() const {
  if (!(xi >= 1.0)) throw std::invalid_argument("OspaParams: xi must be >= 1");
  if (!(eta > 0.0)) throw std::invalid_argument("OspaParams: eta must be positive");
  if (!(kappa > 0.0 && kappa < 1.0)) throw std::invalid_argument("OspaParams: kappa must lie in (0, 1)");
}

std::vector<Point2> smooth_track(std::span<const double> t, std::span<const Point2> p) {
  if (t.size() != p.size()) throw std::invalid_argument("smooth_track: time and position counts differ");
  if (p.size() < 2) throw std::invalid_argument("smooth_track: need at least 2 plots");
  const double n = static_cast<double>(t.size());
  double tm = 0.0, xm = 0.0, ym = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    tm += t[k];
    xm += p[k].x;
    ym += p[k].y;
  }
  tm /= n;
  xm /= n;
  ym /= n;
  double stt = 0.0, stx = 0.0, sty = 0.0;
  for (std::size_t k = 0; k < t.size(); ++k) {
    const double dt = t[k] - tm;
    stt += dt * dt;
    stx += dt * (p[k].x - xm);
    sty += dt * (p[k].y - ym);
  }
  if (!(stt > 0.0)) throw std::invalid_argument("smooth_track: plot times must not all coincide");
  std::vector<Point2> out;
  for (double tk : t) out.push_back({xm + stx / stt * (tk - tm), ym + sty / stt * (tk - tm)});
  return out;
}

std::vector<int> hungarian(const std::vector<std::vector<double>>& a, double* total) {
  const std::size_t n = a.size();
  if (n == 0) {
    if (total) *total = 0.0;
    return {};
  }
  const std::size_t m = a[0].size();
  if (m < n) throw std::invalid_argument("hungarian: more rows than columns");
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based potentials; p[j] is the row matched to column j.
  std::vector<double> u(n + 1, 0.0), v(m + 1, 0.0);
  std::vector<std::size_t> p(m + 1, 0), way(m + 1, 0);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::vector<double> minv(m + 1, inf);
    std::vector<char> used(m + 1, 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double cur = a[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> col(n, -1);
  for (std::size_t j = 1; j <= m; ++j)
    if (p[j] != 0) col[p[j] - 1] = static_cast<int>(j - 1);
  if (total) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i][static_cast<std::size_t>(col[i])];
    *total = s;
  }
  return col;
}

double ospa(std::span<const Point2> X, std::span<const Point2> Xhat, const OspaParams& p) {
  if (X.empty() && Xhat.empty()) return 0.0;
  if (X.empty() || Xhat.empty()) return p.eta;
  // rows: the smaller set (swap rule)
  const bool swap = X.size() > Xhat.size();
  const auto rows = swap ? Xhat : X;
  const auto cols = swap ? X : Xhat;
  const double cap = std::pow(p.eta, p.xi);
  std::vector<std::vector<double>> cost(rows.size(), std::vector<double>(cols.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) {
      const double d = std::min(p.eta, std::hypot(rows[i].x - cols[j].x, rows[i].y - cols[j].y));
      cost[i][j] = std::pow(d, p.xi);
    }
  const std::vector<int> col = hungarian(cost);
  std::vector<double> terms;
  for (std::size_t i = 0; i < rows.size(); ++i) terms.push_back(cost[i][static_cast<std::size_t>(col[i])]);
  // canonical summation order so equal-cost assignments give identical sums
  std::sort(terms.begin(), terms.end());
  double s = 0.0;
  for (double v : terms) s += v;
  s += cap * static_cast<double>(cols.size() - rows.size());
  return std::pow(s / static_cast<double>(cols.size()), 1.0 / p.xi);
}

bool is_correct_detection(std::span<const Point2> truth, std::span<const Point2> smoothed, const OspaParams& p) {
  return ospa(truth, smoothed, p) < p.kappa * p.eta;
}

double eta_from_radar(const RadarConfig& radar, double snr_db, double multiple) {
  const double k = radar.noise_coeff / std::sqrt(db_to_linear(snr_db));
  const double sr = k * radar.range_res_m;
  const double sx = k * radar.az_res_rad() * radar.r_min_m;
  return multiple * std::sqrt(sr * sr + sx * sx);
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw std::invalid_argument("quantile: empty sample");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

namespace {

std::vector<Point2> positions(const AssocGraph& g, const std::vector<int>& ids) {
  std::vector<Point2> p;
  for (int id : ids) p.push_back({g.nodes[static_cast<std::size_t>(id)].x(), g.nodes[static_cast<std::size_t>(id)].y()});
  return p;
}

std::vector<double> times(const AssocGraph& g, const std::vector<int>& ids) {
  std::vector<double> t;
  for (int id : ids) t.push_back(g.nodes[static_cast<std::size_t>(id)].t);
  return t;
}

const TargetTruth* find_truth(const std::vector<TargetTruth>& frame, int id) {
  for (const TargetTruth& t : frame)
    if (t.id == id) return &t;
  return nullptr;
}

}  // namespace

KappaCalibration calibrate_kappa(const SceneConfig& scene, const GraphConfig& gc, const OspaParams& p, double snr_db,
                                 int n_trials, double q, std::uint64_t seed) {
  if (!(q > 0.0 && q <= 1.0)) throw std::invalid_argument("calibrate_kappa: q must lie in (0, 1]");
  KappaCalibration k;
  k.quantile = q;
  for (int trial = 0; trial < n_trials; ++trial) {
    Rng rng = make_rng(seed, "kappa", static_cast<std::uint64_t>(trial));
    const auto targets = draw_targets(scene, 1, gc.L, snr_db, rng);
    std::vector<double> t;
    std::vector<Point2> meas, truth;
    for (int l = 0; l < gc.L; ++l) {
      const TargetTruth now = propagate_target(targets[0], l * scene.radar.frame_period_s);
      if (auto z = measure_target(now, l * scene.radar.frame_period_s, l, scene.radar, rng)) {
        t.push_back(z->t);
        meas.push_back({z->x(), z->y()});
        truth.push_back({now.x, now.y});
      }
    }
    if (static_cast<int>(meas.size()) < std::max(2, gc.M)) continue;
    k.ratios.push_back(ospa(truth, smooth_track(t, meas), p) / p.eta);
  }
  if (k.ratios.empty()) throw std::runtime_error("calibrate_kappa: no pure-target track was long enough");
  k.kappa = quantile(k.ratios, q);
  return k;
}

bool pd_upper_bound(const AssocGraph& graph, int target_id, const GraphConfig& gc) {
  std::vector<int> longest(graph.n_nodes(), 0);
  int best = 0;
  for (std::size_t v = 0; v < graph.n_nodes(); ++v)
    if (graph.nodes[v].origin == target_id) longest[v] = 1, best = 1;
  // edges are ordered by their earlier node, which is ordered by frame
  for (const Edge& e : graph.edges) {
    if (graph.nodes[static_cast<std::size_t>(e.u)].origin != target_id ||
        graph.nodes[static_cast<std::size_t>(e.w)].origin != target_id)
      continue;
    int& lw = longest[static_cast<std::size_t>(e.w)];
    lw = std::max(lw, longest[static_cast<std::size_t>(e.u)] + 1);
    best = std::max(best, lw);
  }
  return best >= gc.M;
}

NciParams default_nci(const RadarConfig& radar, double snr_ref_db) {
  const double k = radar.noise_coeff / std::sqrt(db_to_linear(snr_ref_db));
  const double sv = k * radar.doppler_res();
  const double sr = k * radar.range_res_m;
  NciParams n;
  n.fe_gate = 3.0 * std::sqrt(sv * sv + 2.0 * sr * sr) / radar.frame_period_s;
  n.dcd_gate = 1;
  return n;
}

DetectionResult baseline_gated_nci(const AssocGraph& graph, const GraphConfig& gc, const NciParams& nci) {
  const PathSet paths = enumerate_candidate_paths(graph, gc, [&](std::size_t k) {
    const Edge& e = graph.edges[k];
    return e.fe[0] < nci.fe_gate && e.fe[1] < nci.fe_gate && e.dcd <= nci.dcd_gate;
  });
  DetectionResult out;
  out.truncated = paths.truncated;
  for (const CandidateTrack& p : paths.paths) {
    CandidateTrack t = p;
    t.S = 0.0;
    for (int n : t.node_ids) t.S += graph.nodes[static_cast<std::size_t>(n)].power;
    if (t.S > nci.gamma) out.tracks.push_back(std::move(t));
  }
  out.tracks = prune_tracks(std::move(out.tracks));
  return out;
}

std::vector<double> nci_false_track_scores(const RadarConfig& radar, const GraphConfig& gc, const NciParams& nci,
                                           int n_trials, std::uint64_t seed, const char* stream) {
  NciParams open = nci;
  open.gamma = -std::numeric_limits<double>::infinity();
  std::vector<double> scores;
  for (int k = 0; k < n_trials; ++k) {
    Rng rng = make_rng(seed, stream, static_cast<std::uint64_t>(k));
    const SimulatedWindow sw = simulate_window({}, 0.0, gc.L, radar, rng);
    const AssocGraph g = build_graph(sw.window, gc);
    for (const CandidateTrack& t : baseline_gated_nci(g, gc, open).tracks) scores.push_back(t.S);
  }
  return scores;
}

ThresholdCalibration calibrate_nci(const RadarConfig& radar, const GraphConfig& gc, const NciParams& nci,
                                   double target_pfa2, int n_trials, std::uint64_t seed) {
  if (n_trials < 1) throw std::invalid_argument("calibrate_nci: n_trials must be positive");
  return threshold_for_rate(nci_false_track_scores(radar, gc, nci, n_trials, seed), radar.n_cells() * n_trials,
                            target_pfa2);
}

TrackAssessment assess_track(const CandidateTrack& track, const AssocGraph& graph,
                             const std::vector<std::vector<TargetTruth>>& truths, const OspaParams& p) {
  TrackAssessment a;
  if (truths.empty() || truths[0].empty()) return a;
  const std::vector<Point2> pos = positions(graph, track.node_ids);
  const std::vector<double> t = times(graph, track.node_ids);

  std::map<int, int> votes;
  for (int n : track.node_ids) {
    const int o = graph.nodes[static_cast<std::size_t>(n)].origin;
    if (o != kNoiseOrigin) ++votes[o];
  }
  int top = 0;
  for (const auto& [id, c] : votes) top = std::max(top, c);
  std::vector<int> candidates;
  for (const auto& [id, c] : votes)
    if (c == top) candidates.push_back(id);
  if (candidates.empty())
    for (const TargetTruth& tt : truths[0]) candidates.push_back(tt.id);

  auto truth_points = [&](int id) {
    std::vector<Point2> out;
    for (int n : track.node_ids) {
      const int frame = graph.nodes[static_cast<std::size_t>(n)].frame;
      const TargetTruth* tt = find_truth(truths[static_cast<std::size_t>(frame)], id);
      if (tt == nullptr) throw std::invalid_argument("assess_track: target missing from truth frame");
      out.push_back({tt->x, tt->y});
    }
    return out;
  };
  double best = std::numeric_limits<double>::infinity();
  for (int id : candidates) {
    const auto tp = truth_points(id);
    double mean = 0.0;
    for (std::size_t k = 0; k < tp.size(); ++k) mean += std::hypot(tp[k].x - pos[k].x, tp[k].y - pos[k].y);
    if (mean < best) {
      best = mean;
      a.target = id;
    }
  }
  a.distance = ospa(truth_points(a.target), smooth_track(t, pos), p);
  a.correct = a.distance < p.kappa * p.eta;
  return a;
}

const CurvePoint& EvalReport::find(double snr_db, int windows, const std::string& method) const {
  for (const CurvePoint& c : rows)
    if (c.snr_db == snr_db && c.windows == windows && c.method == method) return c;
  throw std::out_of_range("EvalReport: no row for " + method);
}

EvalReport monte_carlo_curves(const Model& model, const EvalConfig& cfg) {
  cfg.scene.validate();
  cfg.gc.validate();
  cfg.ospa.validate();
  if (cfg.max_windows < 1 || cfg.n_runs < 1) throw std::invalid_argument("monte_carlo_curves: bad run sizes");
  const auto t0 = std::chrono::steady_clock::now();
  const RadarConfig& radar = cfg.scene.radar;
  const int L = cfg.gc.L, W = cfg.max_windows, total_frames = L + W - 1;
  const double cells = radar.n_cells();
  EvalReport rep;
  rep.n_runs = cfg.n_runs;

  for (std::size_t si = 0; si < cfg.snr_list_db.size(); ++si) {
    const double snr = cfg.snr_list_db[si];
    std::vector<long> glp_hits(static_cast<std::size_t>(W), 0), nci_hits(static_cast<std::size_t>(W), 0),
        upb_hits(static_cast<std::size_t>(W), 0);
    long n_targets = 0, glp_false = 0, nci_false = 0, cfar_trials = 0, cfar_det = 0;
    for (int run = 0; run < cfg.n_runs; ++run) {
      const std::uint64_t idx = si * 1000003ULL + static_cast<std::uint64_t>(run);
      Rng rng = make_rng(cfg.seed, "mc", idx);
      const int count = std::uniform_int_distribution<int>(cfg.scene.min_targets, cfg.scene.max_targets)(rng);
      const auto targets = draw_targets(cfg.scene, count, total_frames, snr, rng);
      const SimulatedWindow sw = simulate_window(targets, 0.0, total_frames, radar, rng);

      // per target: first window index with a correct detection (W if none)
      std::map<int, int> glp_first, nci_first, upb_first;
      for (const TargetTruth& tt : targets) glp_first[tt.id] = nci_first[tt.id] = upb_first[tt.id] = W;

      for (int w = 0; w < W; ++w) {
        ScanWindow win;
        win.config = radar;
        std::vector<std::vector<TargetTruth>> truths;
        for (int l = 0; l < L; ++l) {
          auto frame = sw.window.frames[static_cast<std::size_t>(w + l)];
          for (Observation& z : frame) z.frame = l;
          win.frames.push_back(std::move(frame));
          truths.push_back(sw.truths[static_cast<std::size_t>(w + l)]);
        }
        AssocGraph g = build_graph(win, cfg.gc);
        for (const TargetTruth& tt : targets)
          if (pd_upper_bound(g, tt.id, cfg.gc)) upb_first[tt.id] = std::min(upb_first[tt.id], w);

        for (const CandidateTrack& t : run_pipeline(model, g, cfg.sp, cfg.gc).tracks) {
          const TrackAssessment a = assess_track(t, g, truths, cfg.ospa);
          if (!a.correct) {
            ++glp_false;
            continue;
          }
          glp_first[a.target] = std::min(glp_first[a.target], w);
          if (!pd_upper_bound(g, a.target, cfg.gc)) {
            ++rep.upb_exceptions;
            if (!(a.distance < cfg.ospa.kappa * cfg.ospa.eta)) rep.exceptions_satisfy_criterion = false;
          }
        }
        for (const CandidateTrack& t : baseline_gated_nci(g, cfg.gc, cfg.nci).tracks) {
          const TrackAssessment a = assess_track(t, g, truths, cfg.ospa);
          if (a.correct)
            nci_first[a.target] = std::min(nci_first[a.target], w);
          else
            ++nci_false;
        }
      }
      for (const TargetTruth& tt : targets) {
        ++n_targets;
        for (int w = 0; w < W; ++w) {
          glp_hits[static_cast<std::size_t>(w)] += glp_first[tt.id] <= w;
          nci_hits[static_cast<std::size_t>(w)] += nci_first[tt.id] <= w;
          upb_hits[static_cast<std::size_t>(w)] += upb_first[tt.id] <= w;
        }
      }

      // single-frame CA-CFAR on every frame of every target
      Rng crng = make_rng(cfg.seed, "mc-cfar", idx);
      const int half = cfg.cfar.n_ref / 2;
      const std::size_t line = static_cast<std::size_t>(2 * (half + cfg.cfar.n_guard) + 1);
      std::vector<double> cells_line(line);
      std::exponential_distribution<double> expo(1.0);
      std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
      const double amp = std::sqrt(db_to_linear(snr));
      for (std::size_t k = 0; k < targets.size() * static_cast<std::size_t>(total_frames); ++k) {
        for (double& c : cells_line) c = expo(crng);
        const double re = amp + gauss(crng), im = gauss(crng);
        cells_line[line / 2] = re * re + im * im;
        ++cfar_trials;
        cfar_det += ca_cfar(cells_line, cfg.cfar)[line / 2];
      }
    }

    const double windows_total = static_cast<double>(cfg.n_runs) * W;
    auto row = [&](int w, const char* method, long hits, double pfa2) {
      CurvePoint c;
      c.snr_db = snr;
      c.windows = w;
      c.method = method;
      c.n_targets = n_targets;
      c.pd = n_targets ? static_cast<double>(hits) / static_cast<double>(n_targets) : 0.0;
      c.pd_stderr = n_targets ? std::sqrt(c.pd * (1.0 - c.pd) / static_cast<double>(n_targets)) : 0.0;
      c.pfa2_achieved = pfa2;
      rep.rows.push_back(c);
    };
    const double cfar_pd = cfar_trials ? static_cast<double>(cfar_det) / static_cast<double>(cfar_trials) : 0.0;
    for (int w = 1; w <= W; ++w) {
      const auto i = static_cast<std::size_t>(w - 1);
      row(w, "GLP", glp_hits[i], static_cast<double>(glp_false) / (windows_total * cells));
      row(w, "gated-NCI", nci_hits[i], static_cast<double>(nci_false) / (windows_total * cells));
      row(w, "UPB", upb_hits[i], 0.0);
      CurvePoint c;
      c.snr_db = snr;
      c.windows = w;
      c.method = "CA-CFAR";
      c.n_targets = cfar_trials;
      c.pd = cfar_pd;
      c.pd_stderr = cfar_trials ? std::sqrt(cfar_pd * (1.0 - cfar_pd) / static_cast<double>(cfar_trials)) : 0.0;
      c.pfa2_achieved = cfg.cfar.pfa;
      rep.rows.push_back(c);
    }
    rep.cfar_analytic_pd = ca_cfar_detection_probability(db_to_linear(snr), cfg.cfar);
  }
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

// ---------------------------------------------------------------- importance

const char* feature_name(Feature f) {
  switch (f) {
    case Feature::SNR: return "SNR";
    case Feature::DC: return "DC";
    case Feature::CI: return "CI";
    case Feature::RDM: return "RDM";
    case Feature::STC: return "STC";
    case Feature::DCD: return "DCD";
  }
  return "?";
}

Feature parse_feature(const std::string& name) {
  for (Feature f : {Feature::SNR, Feature::DC, Feature::CI, Feature::RDM, Feature::STC, Feature::DCD})
    if (name == feature_name(f)) return f;
  throw std::invalid_argument("unknown feature tag '" + name + "' (expected SNR, DC, CI, RDM, STC or DCD)");
}

bool feature_is_edge(Feature f) { return f == Feature::STC || f == Feature::DCD; }

namespace {
Array& feature_array(GraphTensors& g, Feature f) {
  switch (f) {
    case Feature::SNR: return g.s;
    case Feature::DC: return g.d;
    case Feature::CI: return g.i;
    case Feature::RDM: return g.patch;
    case Feature::STC: return g.ef;
    case Feature::DCD: return g.dcd;
  }
  throw std::logic_error("feature_array");
}
}  // namespace

void apply_permutation(std::vector<GraphTensors>& set, Feature f, std::span<const std::size_t> perm) {
  std::vector<std::pair<std::size_t, std::size_t>> slot;  // (graph, row)
  for (std::size_t g = 0; g < set.size(); ++g) {
    const std::size_t n = feature_is_edge(f) ? set[g].n_edges : set[g].n_nodes;
    for (std::size_t r = 0; r < n; ++r) slot.emplace_back(g, r);
  }
  if (perm.size() != slot.size()) throw std::invalid_argument("apply_permutation: permutation size mismatch");
  std::vector<std::vector<double>> rows;
  rows.reserve(slot.size());
  for (const auto& [g, r] : slot) {
    const Array& a = feature_array(set[g], f);
    const std::size_t c = a.cols();
    rows.emplace_back(a.ptr() + r * c, a.ptr() + (r + 1) * c);
  }
  for (std::size_t k = 0; k < slot.size(); ++k) {
    Array& a = feature_array(set[slot[k].first], f);
    std::copy(rows[perm[k]].begin(), rows[perm[k]].end(), a.ptr() + slot[k].second * a.cols());
  }
}

double set_accuracy(const Model& model, const std::vector<GraphTensors>& set, int label) {
  Confusion total;
  for (const GraphTensors& in : set) {
    const Confusion c = confusion_from_predictions(predict(model, in), in.labels);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) total.m[i][j] += c.m[i][j];
  }
  return label >= 0 ? total.class_accuracy(label) : total.accuracy();
}

BoxStats boxplot(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("boxplot: empty sample");
  std::sort(v.begin(), v.end());
  BoxStats b;
  b.q1 = quantile(v, 0.25);
  b.median = quantile(v, 0.5);
  b.q3 = quantile(v, 0.75);
  const double iqr = b.q3 - b.q1;
  const double lo = b.q1 - 1.5 * iqr, hi = b.q3 + 1.5 * iqr;
  b.lo_whisker = b.q1;
  b.hi_whisker = b.q3;
  for (double x : v) {
    if (x < lo || x > hi) {
      b.outliers.push_back(x);
      continue;
    }
    b.lo_whisker = std::min(b.lo_whisker, x);
    b.hi_whisker = std::max(b.hi_whisker, x);
  }
  return b;
}

ImportanceResult permutation_importance(const Model& model, const std::vector<AssocGraph>& graphs, Feature f,
                                        int n_repeats, int class_context, std::uint64_t seed) {
  if (n_repeats < 1) throw std::invalid_argument("permutation_importance: n_repeats must be positive");
  std::vector<GraphTensors> set;
  for (const AssocGraph& g : graphs)
    if (!g.edges.empty()) set.push_back(prepare_inputs(g, model.dims));
  ImportanceResult r;
  r.feature = f;
  r.class_context = class_context;
  r.base_accuracy = set_accuracy(model, set, class_context);
  std::size_t n = 0;
  for (const GraphTensors& g : set) n += feature_is_edge(f) ? g.n_edges : g.n_nodes;
  for (int rep = 0; rep < n_repeats; ++rep) {
    Rng rng = make_rng(seed, std::string("perm-") + feature_name(f), static_cast<std::uint64_t>(rep));
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<GraphTensors> shuffled = set;
    apply_permutation(shuffled, f, perm);
    r.drops.push_back(r.base_accuracy - set_accuracy(model, shuffled, class_context));
  }
  r.box = boxplot(r.drops);
  return r;
}

}  // namespace glpmfd
