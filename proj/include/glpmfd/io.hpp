#pragma once

// Persistence and configuration: versioned JSON documents for windows,
// graphs, checkpoints and reports, a strict run configuration, and CSV
// emission for plot data.
//
// Every document is {schema_version, kind, config_hash, seed, payload}.
// Float arrays are lossless decimal by default; with base64 enabled they are
// {"encoding": "base64-f64le", "shape": [...], "data": "..."}.

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/eval.hpp"
#include "glpmfd/mflpn.hpp"
#include "glpmfd/radar_sim.hpp"
#include "glpmfd/track_pipeline.hpp"
#include "glpmfd/trainer.hpp"

namespace glpmfd::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

// Malformed documents, wrong kinds, unknown config keys.
struct FormatError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct VersionError : FormatError {
  using FormatError::FormatError;
};

struct DocMeta {
  std::string config_hash;  // 16 hex digits, empty when not tied to a config
  std::uint64_t seed = 0;
};

struct SaveOptions {
  bool base64 = false;
};

// ---------------------------------------------------------------- config

struct RunPaths {
  std::string data;        // graph directory
  std::string checkpoint;  // model file
  std::string out;         // output directory or file
};

// Evaluation and calibration settings beyond the core configs.
struct EvalSettings {
  std::vector<double> snr_list_db{7, 8, 9, 10, 11, 12};
  int max_windows = 5;
  int n_runs = 100;
  CfarParams cfar;
  double pfa2 = 1e-5;
  int calib_trials = 2000;
  double kappa_quantile = 0.99;
  int kappa_trials = 2000;
  double eta_multiple = 5.0;
  double snr_ref_db = 10.0;
  int importance_repeats = 30;
};

struct RunConfig {
  RadarConfig radar = desk_radar();
  SceneConfig scene;  // radar member ignored; `radar` above is used
  GraphConfig graph;
  ModelDims dims;
  TrainHyper hyper;
  ScoreParams score;
  OspaParams ospa;
  NciParams nci;
  EvalSettings eval;
  int n_graphs = 500;
  std::uint64_t seed = 1;
  RunPaths paths;

  SceneConfig scene_with_radar() const;
  void validate() const;
};

// Missing keys keep defaults; unknown keys throw FormatError.
RunConfig run_config_from_json(const json& j);
json to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);

// FNV-1a 64 over the compact dump of the config JSON.
std::string config_hash(const RunConfig& c);
std::uint64_t fnv1a64(const std::string& bytes);

// ---------------------------------------------------------------- documents

// Writes to a sibling temp file, then renames over `path`.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

json make_document(const std::string& kind, const DocMeta& meta, json payload);
// Parses and checks version and kind; returns the payload.
json read_document(const std::filesystem::path& path, const std::string& kind, DocMeta* meta = nullptr);
json parse_document(const std::string& text, const std::string& kind, DocMeta* meta = nullptr);

json encode_doubles(const std::vector<double>& v, const std::vector<std::size_t>& shape, const SaveOptions& opt);
std::vector<double> decode_doubles(const json& j, std::vector<std::size_t>* shape = nullptr);

json to_json(const RadarConfig& c);
RadarConfig radar_from_json(const json& j);
json to_json(const GraphConfig& c);
GraphConfig graph_config_from_json(const json& j);
json to_json(const ModelDims& d);
ModelDims dims_from_json(const json& j);

json to_json(const Observation& z, const SaveOptions& opt = {});
Observation observation_from_json(const json& j);
json to_json(const TargetTruth& t);
TargetTruth truth_from_json(const json& j);

json to_json(const SimulatedWindow& w, const SaveOptions& opt = {});
SimulatedWindow window_from_json(const json& j);
json to_json(const AssocGraph& g, const SaveOptions& opt = {});
AssocGraph graph_from_json(const json& j);

struct Checkpoint {
  Model model;
  int epoch = -1;
  double lr = 0.0;
};
json to_json(const Checkpoint& c, const SaveOptions& opt = {});
Checkpoint checkpoint_from_json(const json& j);

json to_json(const TrainReport& r);
TrainReport train_report_from_json(const json& j);
json to_json(const EvalReport& r);
EvalReport eval_report_from_json(const json& j);
json to_json(const ImportanceResult& r);
ImportanceResult importance_from_json(const json& j);
json to_json(const DetectionResult& d, const AssocGraph& g, double gamma2);

void save_window(const std::filesystem::path& p, const SimulatedWindow& w, const DocMeta& m, const SaveOptions& o = {});
SimulatedWindow load_window(const std::filesystem::path& p, DocMeta* m = nullptr);
void save_graph(const std::filesystem::path& p, const AssocGraph& g, const DocMeta& m, const SaveOptions& o = {});
AssocGraph load_graph(const std::filesystem::path& p, DocMeta* m = nullptr);
void save_checkpoint(const std::filesystem::path& p, const Checkpoint& c, const DocMeta& m,
                     const SaveOptions& o = {.base64 = true});
Checkpoint load_checkpoint(const std::filesystem::path& p, DocMeta* m = nullptr);
void save_eval_report(const std::filesystem::path& p, const EvalReport& r, const DocMeta& m);
EvalReport load_eval_report(const std::filesystem::path& p, DocMeta* m = nullptr);
void save_train_report(const std::filesystem::path& p, const TrainReport& r, const DocMeta& m);
TrainReport load_train_report(const std::filesystem::path& p, DocMeta* m = nullptr);

// Graph files (*.json) in a directory, sorted by name.
std::vector<AssocGraph> load_graph_dir(const std::filesystem::path& dir);

// ---------------------------------------------------------------- CSV

// snr_db,windows,method,pd,pd_stderr,pfa2_achieved,n_runs
std::string eval_csv(const std::vector<EvalReport>& reports);
// feature,class_context,q1,median,q3,lo_whisker,hi_whisker,outliers...
std::string boxplot_csv(const std::vector<ImportanceResult>& results);
// epoch,train_loss,val_loss
std::string loss_csv(const TrainReport& r);

}  // namespace glpmfd::io
