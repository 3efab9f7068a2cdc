#pragma once

// Labeled graph datasets, minibatch Adam training with a stepped learning
// rate, confusion matrices and the attention-depth sweep.

#include <array>
#include <cstdint>
#include <optional>
#include <vector>

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/mflpn.hpp"
#include "glpmfd/radar_sim.hpp"

namespace glpmfd {

struct Dataset {
  std::vector<AssocGraph> train;
  std::vector<AssocGraph> val;
};

// Graphs from random scenes; per graph one SNR drawn from scene.snr_list_db.
// The first 80% (rounded down, at least one) form the training split.
Dataset make_dataset(int n_graphs, const SceneConfig& scene, const GraphConfig& gc, std::uint64_t seed);

// A single split of n_graphs graphs (no train/val division).
std::vector<AssocGraph> make_graphs(int n_graphs, const SceneConfig& scene, const GraphConfig& gc, std::uint64_t seed,
                                    const char* stream = "graphs");

struct TrainHyper {
  int batch_size = 32;
  int epochs = 800;
  double lr0 = 0.01;
  double lr_decay = 0.1;
  int decay_every = 200;
  std::uint64_t seed = 1;
  bool class_weighting = false;
  Variant variant = Variant::Full;

  void validate() const;
};

double learning_rate(const TrainHyper& h, int epoch);

// Inverse-frequency class weights, normalised so a balanced set gives ones.
std::array<double, 3> class_weights(const std::vector<AssocGraph>& graphs);

struct Confusion {
  std::array<std::array<long, 3>, 3> m{};  // rows: true label, cols: predicted
  long total() const;
  long support(int label) const;
  double accuracy() const;
  // Accuracy restricted to edges whose true label is `label`.
  double class_accuracy(int label) const;
  void add(int label, int predicted) { ++m[static_cast<std::size_t>(label)][static_cast<std::size_t>(predicted)]; }
};

// First index of the maximum, so ties resolve to the lowest class.
int argmax3(const std::array<double, 3>& p);

Confusion confusion_from_predictions(const std::vector<std::array<double, 3>>& preds, const std::vector<int>& labels);

// Optional SNR bucket keeps only graphs whose snr_db matches.
Confusion confusion_and_accuracy(const Model& model, const std::vector<AssocGraph>& graphs,
                                 std::optional<double> snr_bucket = std::nullopt);

struct SnrAccuracy {
  double snr_db = 0.0;
  Confusion confusion;
};

struct TrainReport {
  std::vector<double> train_loss;
  std::vector<double> val_loss;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  int skipped_graphs = 0;  // graphs without edges, excluded from the loss
  std::vector<SnrAccuracy> per_snr;
  double seconds = 0.0;
};

struct TrainResult {
  Model model;
  TrainReport report;
};

// Minibatch Adam on the mean per-graph loss; returns the best-validation
// parameters. Throws std::runtime_error if the loss becomes non-finite.
TrainResult train(const Dataset& data, const TrainHyper& hyper, const ModelDims& dims);

struct LayerSweepRow {
  int n_layers = 0;
  double accuracy = 0.0;
};

std::vector<LayerSweepRow> layer_sweep(const Dataset& data, const std::vector<int>& layer_counts,
                                       const TrainHyper& hyper, const ModelDims& dims);

}  // namespace glpmfd
