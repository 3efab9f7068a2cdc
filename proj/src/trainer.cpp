#include "glpmfd/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace glpmfd {

std::vector<AssocGraph> make_graphs(int n_graphs, const SceneConfig& scene, const GraphConfig& gc, std::uint64_t seed,
                                    const char* stream) {
  if (n_graphs < 1) throw std::invalid_argument("make_graphs: n_graphs must be at least 1");
  scene.validate();
  gc.validate();
  std::vector<AssocGraph> out;
  out.reserve(static_cast<std::size_t>(n_graphs));
  for (int g = 0; g < n_graphs; ++g) {
    Rng rng = make_rng(seed, stream, static_cast<std::uint64_t>(g));
    const auto k = std::uniform_int_distribution<std::size_t>(0, scene.snr_list_db.size() - 1)(rng);
    const double snr = scene.snr_list_db[k];
    const int count = std::uniform_int_distribution<int>(scene.min_targets, scene.max_targets)(rng);
    const auto targets = draw_targets(scene, count, gc.L, snr, rng);
    const SimulatedWindow sw = simulate_window(targets, 0.0, gc.L, scene.radar, rng);
    AssocGraph graph = build_graph(sw.window, gc);
    graph.snr_db = snr;
    out.push_back(std::move(graph));
  }
  return out;
}

Dataset make_dataset(int n_graphs, const SceneConfig& scene, const GraphConfig& gc, std::uint64_t seed) {
  if (n_graphs < 1) throw std::invalid_argument("make_dataset: empty dataset requested");
  std::vector<AssocGraph> all = make_graphs(n_graphs, scene, gc, seed, "dataset");
  const auto n_train = static_cast<std::size_t>(std::max(1, n_graphs * 4 / 5));
  Dataset d;
  d.train.assign(std::make_move_iterator(all.begin()), std::make_move_iterator(all.begin() + static_cast<long>(n_train)));
  d.val.assign(std::make_move_iterator(all.begin() + static_cast<long>(n_train)), std::make_move_iterator(all.end()));
  return d;
}

void TrainHyper::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainHyper: batch_size must be at least 1");
  if (epochs < 1) throw std::invalid_argument("TrainHyper: epochs must be at least 1");
  if (!(lr0 > 0.0)) throw std::invalid_argument("TrainHyper: lr0 must be positive");
  if (!(lr_decay > 0.0)) throw std::invalid_argument("TrainHyper: lr_decay must be positive");
  if (decay_every < 1) throw std::invalid_argument("TrainHyper: decay_every must be at least 1");
}

double learning_rate(const TrainHyper& h, int epoch) {
  return h.lr0 * std::pow(h.lr_decay, static_cast<double>(epoch / h.decay_every));
}

std::array<double, 3> class_weights(const std::vector<AssocGraph>& graphs) {
  std::array<double, 3> count{};
  double total = 0.0;
  for (const AssocGraph& g : graphs)
    for (const Edge& e : g.edges) {
      count[static_cast<std::size_t>(e.label)] += 1.0;
      total += 1.0;
    }
  std::array<double, 3> w{1.0, 1.0, 1.0};
  for (std::size_t c = 0; c < 3; ++c)
    if (count[c] > 0.0) w[c] = total / (3.0 * count[c]);
  return w;
}

long Confusion::total() const {
  long n = 0;
  for (const auto& row : m)
    for (long v : row) n += v;
  return n;
}

long Confusion::support(int label) const {
  const auto& row = m[static_cast<std::size_t>(label)];
  return row[0] + row[1] + row[2];
}

double Confusion::accuracy() const {
  const long n = total();
  return n == 0 ? 0.0 : static_cast<double>(m[0][0] + m[1][1] + m[2][2]) / static_cast<double>(n);
}

double Confusion::class_accuracy(int label) const {
  const long n = support(label);
  const auto l = static_cast<std::size_t>(label);
  return n == 0 ? 0.0 : static_cast<double>(m[l][l]) / static_cast<double>(n);
}

int argmax3(const std::array<double, 3>& p) {
  int best = 0;
  for (int c = 1; c < 3; ++c)
    if (p[static_cast<std::size_t>(c)] > p[static_cast<std::size_t>(best)]) best = c;
  return best;
}

Confusion confusion_from_predictions(const std::vector<std::array<double, 3>>& preds, const std::vector<int>& labels) {
  if (preds.size() != labels.size()) throw std::invalid_argument("confusion: prediction and label counts differ");
  Confusion c;
  for (std::size_t k = 0; k < preds.size(); ++k) c.add(labels[k], argmax3(preds[k]));
  return c;
}

Confusion confusion_and_accuracy(const Model& model, const std::vector<AssocGraph>& graphs,
                                 std::optional<double> snr_bucket) {
  Confusion total;
  for (const AssocGraph& g : graphs) {
    if (snr_bucket && !(std::abs(g.snr_db - *snr_bucket) < 1e-9)) continue;
    const GraphTensors in = prepare_inputs(g, model.dims);
    const Confusion c = confusion_from_predictions(predict(model, in), in.labels);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) total.m[i][j] += c.m[i][j];
  }
  return total;
}

namespace {

double mean_loss(const Model& model, const std::vector<GraphTensors>& set, const std::array<double, 3>& w) {
  if (set.empty()) return 0.0;
  double acc = 0.0;
  for (const GraphTensors& in : set) {
    Tape tape(false);
    const auto bound = bind_params(tape, model.params, nullptr);
    acc += graph_loss(forward(model, bound, in).log_probs, in.labels, w).value()[0];
  }
  return acc / static_cast<double>(set.size());
}

std::vector<GraphTensors> tensors_with_edges(const std::vector<AssocGraph>& graphs, const ModelDims& dims,
                                             int& skipped) {
  std::vector<GraphTensors> out;
  for (const AssocGraph& g : graphs) {
    if (g.edges.empty()) {
      ++skipped;
      continue;
    }
    out.push_back(prepare_inputs(g, dims));
  }
  return out;
}

}  // namespace

TrainResult train(const Dataset& data, const TrainHyper& hyper, const ModelDims& dims) {
  hyper.validate();
  if (data.train.empty()) throw std::invalid_argument("train: training set is empty");
  const auto t0 = std::chrono::steady_clock::now();

  TrainResult res;
  res.model = init_model(dims, hyper.variant, hyper.seed);
  Model& model = res.model;
  TrainReport& rep = res.report;

  const std::vector<GraphTensors> train_set = tensors_with_edges(data.train, dims, rep.skipped_graphs);
  const std::vector<GraphTensors> val_set = tensors_with_edges(data.val, dims, rep.skipped_graphs);
  if (train_set.empty()) throw std::invalid_argument("train: no training graph has edges");
  const std::array<double, 3> w = hyper.class_weighting ? class_weights(data.train) : std::array<double, 3>{1, 1, 1};

  tensor::AdamState adam;
  std::vector<Array> grads;
  for (const Array& a : model.params.values) grads.emplace_back(a.shape());
  Rng shuffle_rng = make_rng(hyper.seed, "shuffle");
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ParamStore best = model.params;
  rep.best_val_loss = std::numeric_limits<double>::infinity();

  for (int epoch = 0; epoch < hyper.epochs; ++epoch) {
    const double lr = learning_rate(hyper, epoch);
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double epoch_loss = 0.0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += static_cast<std::size_t>(hyper.batch_size)) {
      const std::size_t b1 = std::min(order.size(), b0 + static_cast<std::size_t>(hyper.batch_size));
      for (Array& g : grads) g.fill(0.0);
      for (std::size_t k = b0; k < b1; ++k) {
        const GraphTensors& in = train_set[order[k]];
        Tape tape;
        const auto bound = bind_params(tape, model.params, &grads);
        Var loss = graph_loss(forward(model, bound, in).log_probs, in.labels, w);
        const double lv = loss.value()[0];
        if (!std::isfinite(lv)) {
          throw std::runtime_error("train: non-finite loss at epoch " + std::to_string(epoch) + ", graph " +
                                   std::to_string(order[k]) + " (lr " + std::to_string(lr) + ")");
        }
        epoch_loss += lv;
        tape.backward(loss);
      }
      const double inv = 1.0 / static_cast<double>(b1 - b0);
      for (Array& g : grads)
        for (double& v : g.data()) v *= inv;
      tensor::adam_step(model.params.values, grads, adam, lr);
    }
    rep.train_loss.push_back(epoch_loss / static_cast<double>(train_set.size()));
    const double vl = val_set.empty() ? rep.train_loss.back() : mean_loss(model, val_set, w);
    rep.val_loss.push_back(vl);
    if (vl < rep.best_val_loss) {
      rep.best_val_loss = vl;
      rep.best_epoch = epoch;
      best = model.params;
    }
  }
  model.params = std::move(best);

  std::vector<double> snrs;
  for (const AssocGraph& g : data.val)
    if (std::isfinite(g.snr_db) && std::find(snrs.begin(), snrs.end(), g.snr_db) == snrs.end()) snrs.push_back(g.snr_db);
  std::sort(snrs.begin(), snrs.end());
  for (double s : snrs) rep.per_snr.push_back({s, confusion_and_accuracy(model, data.val, s)});
  rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::vector<LayerSweepRow> layer_sweep(const Dataset& data, const std::vector<int>& layer_counts,
                                       const TrainHyper& hyper, const ModelDims& dims) {
  std::vector<LayerSweepRow> rows;
  const int width = dims.gat_dims.empty() ? 32 : dims.gat_dims.front();
  for (int n : layer_counts) {
    ModelDims d = dims;
    d.gat_dims.assign(static_cast<std::size_t>(n), width);
    const TrainResult r = train(data, hyper, d);
    rows.push_back({n, confusion_and_accuracy(r.model, data.val).accuracy()});
  }
  return rows;
}

}  // namespace glpmfd
