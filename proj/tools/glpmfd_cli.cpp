// glpmfd command-line front end.
// Exit status: 0 ok, 2 usage or configuration error, 1 runtime failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "glpmfd/eval.hpp"
#include "glpmfd/io.hpp"
#include "glpmfd/trainer.hpp"

namespace fs = std::filesystem;
using namespace glpmfd;
using io::json;

namespace {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

io::RunConfig resolve(const Common& c) {
  io::RunConfig cfg;
  if (!c.config.empty()) cfg = io::load_run_config(c.config);
  if (c.seed) {
    cfg.seed = *c.seed;
    cfg.hyper.seed = *c.seed;
  }
  if (!c.out.empty()) cfg.paths.out = c.out;
  cfg.validate();
  return cfg;
}

io::DocMeta meta_of(const io::RunConfig& cfg) { return {io::config_hash(cfg), cfg.seed}; }

std::string need(const std::string& v, const char* what) {
  if (v.empty()) throw ConfigError(std::string("missing ") + what);
  return v;
}

std::string numbered(const char* stem, std::size_t k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%s_%05zu.json", stem, k);
  return buf;
}

void write_text(const fs::path& p, const std::string& s) {
  if (p.empty() || p == "-") {
    std::cout << s;
    return;
  }
  io::write_atomic(p, s);
}

// Calibrated quantities shared by `calibrate`, `eval` and `importance`.
struct Calibration {
  double eta = 0.0, kappa = 0.0, gamma2 = 0.0, gamma_nci = 0.0, fe_gate = 0.0;
};

Calibration load_calibration(const fs::path& p) {
  const json j = io::read_document(p, "calibration");
  Calibration c;
  auto num = [&](const char* k) {
    const json& v = j.at(k);
    if (v.is_string()) return v == "-inf" ? -std::numeric_limits<double>::infinity() : std::stod(v.get<std::string>());
    return v.get<double>();
  };
  c.eta = num("eta");
  c.kappa = num("kappa");
  c.gamma2 = num("gamma2");
  c.gamma_nci = num("gamma_nci");
  c.fe_gate = num("nci_fe_gate");
  return c;
}

json num_json(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); }

int cmd_simulate(const Common& common, int n_windows, std::optional<double> snr, std::optional<int> targets) {
  const io::RunConfig cfg = resolve(common);
  const fs::path out = need(cfg.paths.out, "--out directory");
  const SceneConfig scene = cfg.scene_with_radar();
  for (int k = 0; k < n_windows; ++k) {
    Rng rng = make_rng(cfg.seed, "simulate", static_cast<std::uint64_t>(k));
    const double s = snr ? *snr
                         : scene.snr_list_db[std::uniform_int_distribution<std::size_t>(
                               0, scene.snr_list_db.size() - 1)(rng)];
    const int count =
        targets ? *targets : std::uniform_int_distribution<int>(scene.min_targets, scene.max_targets)(rng);
    const auto truth = draw_targets(scene, count, cfg.graph.L, s, rng);
    const SimulatedWindow w = simulate_window(truth, 0.0, cfg.graph.L, cfg.radar, rng);
    io::save_window(out / numbered("window", static_cast<std::size_t>(k)), w, meta_of(cfg));
  }
  std::cerr << "wrote " << n_windows << " windows to " << out << "\n";
  return 0;
}

int cmd_build_graphs(const Common& common, const std::vector<std::string>& windows, int generate) {
  const io::RunConfig cfg = resolve(common);
  const fs::path out = need(cfg.paths.out, "--out directory");
  if (windows.empty() && generate <= 0) throw ConfigError("give window files or --generate N");
  std::size_t k = 0;
  for (const std::string& wp : windows) {
    const SimulatedWindow w = io::load_window(wp);
    AssocGraph g = build_graph(w.window, cfg.graph);
    if (!w.truths.empty() && !w.truths[0].empty()) g.snr_db = w.truths[0][0].snr_db;
    io::save_graph(out / numbered("graph", k++), g, meta_of(cfg));
  }
  if (generate > 0)
    for (const AssocGraph& g : make_graphs(generate, cfg.scene_with_radar(), cfg.graph, cfg.seed))
      io::save_graph(out / numbered("graph", k++), g, meta_of(cfg));
  std::cerr << "wrote " << k << " graphs to " << out << "\n";
  return 0;
}

int cmd_train(const Common& common, const std::string& data, const std::string& variant, int epochs) {
  io::RunConfig cfg = resolve(common);
  if (!variant.empty()) cfg.hyper.variant = parse_variant(variant);
  if (epochs > 0) {
    cfg.hyper.decay_every = std::max(1, cfg.hyper.decay_every * epochs / cfg.hyper.epochs);
    cfg.hyper.epochs = epochs;
  }
  const fs::path out = need(cfg.paths.out, "--out checkpoint path");
  std::vector<AssocGraph> all = io::load_graph_dir(data);
  if (all.empty()) throw ConfigError("no graph files in " + data);
  Dataset ds;
  const auto n_train = static_cast<long>(std::max<std::size_t>(1, all.size() * 4 / 5));
  ds.train.assign(all.begin(), all.begin() + n_train);
  ds.val.assign(all.begin() + n_train, all.end());
  const TrainResult r = train(ds, cfg.hyper, cfg.dims);
  io::Checkpoint ck{r.model, r.report.best_epoch, learning_rate(cfg.hyper, std::max(0, r.report.best_epoch))};
  io::save_checkpoint(out, ck, meta_of(cfg));
  fs::path rp = out;
  rp.replace_extension(".report.json");
  io::save_train_report(rp, r.report, meta_of(cfg));
  fs::path lp = out;
  lp.replace_extension(".loss.csv");
  io::write_atomic(lp, io::loss_csv(r.report));
  for (const SnrAccuracy& s : r.report.per_snr)
    std::cerr << "snr " << s.snr_db << " dB: val accuracy " << s.confusion.accuracy() << "\n";
  return 0;
}

int cmd_calibrate(const Common& common, const std::string& checkpoint) {
  io::RunConfig cfg = resolve(common);
  const fs::path out = need(cfg.paths.out, "--out calibration file");
  const Model model = io::load_checkpoint(need(checkpoint.empty() ? cfg.paths.checkpoint : checkpoint, "--checkpoint"))
                          .model;
  const SceneConfig scene = cfg.scene_with_radar();
  OspaParams op = cfg.ospa;
  op.eta = eta_from_radar(cfg.radar, cfg.eval.snr_ref_db, cfg.eval.eta_multiple);
  const KappaCalibration kc =
      calibrate_kappa(scene, cfg.graph, op, cfg.eval.snr_ref_db, cfg.eval.kappa_trials, cfg.eval.kappa_quantile, cfg.seed);
  const ThresholdCalibration g2 =
      calibrate_gamma2(model, cfg.radar, cfg.graph, cfg.score, cfg.eval.pfa2, cfg.eval.calib_trials, cfg.seed);
  NciParams nci = default_nci(cfg.radar, cfg.eval.snr_ref_db);
  const ThresholdCalibration gn = calibrate_nci(cfg.radar, cfg.graph, nci, cfg.eval.pfa2, cfg.eval.calib_trials, cfg.seed);
  json p = json::object();
  p["eta"] = op.eta;
  p["kappa"] = kc.kappa;
  p["kappa_quantile"] = kc.quantile;
  p["kappa_tracks"] = kc.ratios.size();
  p["gamma2"] = num_json(g2.gamma);
  p["gamma2_achieved_rate"] = g2.achieved_rate;
  p["gamma_nci"] = num_json(gn.gamma);
  p["gamma_nci_achieved_rate"] = gn.achieved_rate;
  p["nci_fe_gate"] = nci.fe_gate;
  p["target_pfa2"] = cfg.eval.pfa2;
  p["cell_windows"] = g2.n_cells;
  io::write_atomic(out, io::make_document("calibration", meta_of(cfg), p).dump(1));
  std::cerr << "eta " << op.eta << " kappa " << kc.kappa << " gamma2 " << g2.gamma << " gamma_nci " << gn.gamma << "\n";
  return 0;
}

EvalConfig eval_config(const io::RunConfig& cfg, const std::string& calibration) {
  EvalConfig ec;
  ec.scene = cfg.scene_with_radar();
  ec.gc = cfg.graph;
  ec.sp = cfg.score;
  ec.ospa = cfg.ospa;
  ec.nci = cfg.nci;
  ec.cfar = cfg.eval.cfar;
  ec.cfar.pfa = cfg.eval.pfa2;
  ec.snr_list_db = cfg.eval.snr_list_db;
  ec.max_windows = cfg.eval.max_windows;
  ec.n_runs = cfg.eval.n_runs;
  ec.seed = cfg.seed;
  if (!calibration.empty()) {
    const Calibration c = load_calibration(calibration);
    ec.ospa.eta = c.eta;
    ec.ospa.kappa = c.kappa;
    ec.sp.gamma2 = c.gamma2;
    ec.nci.gamma = c.gamma_nci;
    ec.nci.fe_gate = c.fe_gate;
  }
  return ec;
}

int cmd_eval(const Common& common, const std::string& checkpoint, const std::string& calibration) {
  io::RunConfig cfg = resolve(common);
  const fs::path out = need(cfg.paths.out, "--out report path");
  const Model model = io::load_checkpoint(need(checkpoint.empty() ? cfg.paths.checkpoint : checkpoint, "--checkpoint"))
                          .model;
  const EvalReport rep = monte_carlo_curves(model, eval_config(cfg, calibration));
  io::save_eval_report(out, rep, meta_of(cfg));
  fs::path csv = out;
  csv.replace_extension(".csv");
  io::write_atomic(csv, io::eval_csv({rep}));
  return 0;
}

int cmd_importance(const Common& common, const std::string& checkpoint, const std::string& data,
                   const std::vector<std::string>& features, const std::string& context, double snr, int n_graphs) {
  io::RunConfig cfg = resolve(common);
  const fs::path out = need(cfg.paths.out, "--out report path");
  const Model model = io::load_checkpoint(need(checkpoint.empty() ? cfg.paths.checkpoint : checkpoint, "--checkpoint"))
                          .model;
  std::vector<AssocGraph> graphs;
  if (!data.empty()) {
    graphs = io::load_graph_dir(data);
  } else {
    SceneConfig scene = cfg.scene_with_radar();
    scene.snr_list_db = {snr};
    graphs = make_graphs(n_graphs, scene, cfg.graph, cfg.seed, "importance");
  }
  int ctx = -1;
  if (context == "FF") ctx = 0;
  else if (context == "TF") ctx = 1;
  else if (context == "TT") ctx = 2;
  else if (context != "ALL") throw ConfigError("--class must be ALL, FF, TF or TT");
  std::vector<ImportanceResult> results;
  json arr = json::array();
  for (const std::string& f : features) {
    results.push_back(permutation_importance(model, graphs, parse_feature(f), cfg.eval.importance_repeats, ctx, cfg.seed));
    arr.push_back(io::to_json(results.back()));
  }
  io::write_atomic(out, io::make_document("importance", meta_of(cfg), arr).dump(1));
  fs::path csv = out;
  csv.replace_extension(".csv");
  io::write_atomic(csv, io::boxplot_csv(results));
  return 0;
}

int cmd_report(const Common& common, const std::vector<std::string>& inputs) {
  if (inputs.empty()) throw ConfigError("report needs at least one JSON report");
  std::vector<EvalReport> evals;
  std::vector<ImportanceResult> imps;
  for (const std::string& p : inputs) {
    std::ifstream in(p);
    if (!in) throw ConfigError("cannot open " + p);
    std::stringstream ss;
    ss << in.rdbuf();
    const json d = json::parse(ss.str(), nullptr, false);
    const std::string kind = d.is_object() && d.contains("kind") && d["kind"].is_string() ? d["kind"].get<std::string>() : "";
    if (kind == "eval-report") {
      evals.push_back(io::load_eval_report(p));
    } else if (kind == "importance") {
      for (const json& r : io::read_document(p, "importance")) imps.push_back(io::importance_from_json(r));
    } else {
      throw io::FormatError(p + ": not an eval or importance report");
    }
  }
  std::string text;
  if (!evals.empty()) text += io::eval_csv(evals);
  if (!imps.empty()) text += (text.empty() ? "" : "\n") + io::boxplot_csv(imps);
  write_text(common.out, text);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-frame radar detection by graph link prediction"};
  app.require_subcommand(1);
  app.failure_message(CLI::FailureMessage::help);
  app.fallthrough();
  Common common;
  std::uint64_t seed_value = 0;
  app.add_option("--config", common.config, "run configuration JSON");
  app.add_option("--out", common.out, "output path");
  auto* seed_opt = app.add_option("--seed", seed_value, "run seed (all randomness derives from it)");

  auto* sim = app.add_subcommand("simulate", "simulate scan windows");
  int n_windows = 1;
  std::optional<double> snr;
  std::optional<int> targets;
  sim->add_option("--windows,-n", n_windows, "number of windows")->check(CLI::PositiveNumber);
  sim->add_option("--snr", snr, "target SNR in dB (default: drawn from the scene list)");
  sim->add_option("--targets", targets, "target count (default: drawn from the scene range)");

  auto* bg = app.add_subcommand("build-graphs", "build association graphs from windows");
  std::vector<std::string> window_files;
  int generate = 0;
  bg->add_option("windows", window_files, "window JSON files")->check(CLI::ExistingFile);
  bg->add_option("--generate", generate, "also simulate N labelled graphs directly");

  auto* tr = app.add_subcommand("train", "train a link-prediction model");
  std::string data, variant;
  int epochs = 0;
  tr->add_option("--data", data, "directory of graph files")->required()->check(CLI::ExistingDirectory);
  tr->add_option("--variant", variant, "FULL, NFEN+GCN+OAJN, ...");
  tr->add_option("--epochs", epochs, "override epochs (decay steps scale with it)");

  auto* cal = app.add_subcommand("calibrate", "calibrate eta, kappa, gamma2 and the NCI threshold");
  std::string checkpoint;
  cal->add_option("--checkpoint", checkpoint, "model checkpoint");

  auto* ev = app.add_subcommand("eval", "Monte-Carlo detection curves");
  std::string calibration;
  ev->add_option("--checkpoint", checkpoint, "model checkpoint");
  ev->add_option("--calibration", calibration, "calibration file from `calibrate`")->check(CLI::ExistingFile);

  auto* imp = app.add_subcommand("importance", "permutation feature importance");
  std::vector<std::string> features{"SNR", "DC", "CI", "RDM", "STC", "DCD"};
  std::string context = "ALL";
  double imp_snr = 12.0;
  int imp_graphs = 100;
  imp->add_option("--checkpoint", checkpoint, "model checkpoint");
  imp->add_option("--data", data, "directory of graph files (default: simulate)");
  imp->add_option("--features", features, "feature tags");
  imp->add_option("--class", context, "ALL, FF, TF or TT");
  imp->add_option("--snr", imp_snr, "SNR of simulated graphs");
  imp->add_option("--graphs", imp_graphs, "simulated graph count")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "merge JSON reports into CSV");
  std::vector<std::string> inputs;
  rep->add_option("reports", inputs, "eval or importance JSON files")->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) common.seed = seed_value;

  try {
    if (sim->parsed()) return cmd_simulate(common, n_windows, snr, targets);
    if (bg->parsed()) return cmd_build_graphs(common, window_files, generate);
    if (tr->parsed()) return cmd_train(common, data, variant, epochs);
    if (cal->parsed()) return cmd_calibrate(common, checkpoint);
    if (ev->parsed()) return cmd_eval(common, checkpoint, calibration);
    if (imp->parsed()) return cmd_importance(common, checkpoint, data, features, context, imp_snr, imp_graphs);
    if (rep->parsed()) return cmd_report(common, inputs);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n" << app.help();
    return 2;
  } catch (const io::FormatError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
