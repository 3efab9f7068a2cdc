#pragma once

// Multi-feature link prediction network: node feature embedding (NFEN),
// attention message passing with spatio-temporal edge features (STEF-GAT),
// and the association judgment head (OAJN). Also the ablation variants used
// by the trainer.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "glpmfd/assoc_graph.hpp"
#include "glpmfd/tensor.hpp"

namespace glpmfd {

using tensor::Array;
using tensor::Tape;
using tensor::Var;

struct ModelDims {
  int n_h = 4;
  int n_d = 2;  // layers of the Doppler-channel branch
  int n_s = 2;  // layers of the SNR branch
  int n_i = 2;  // layers of the temporal branch
  std::vector<int> conv_channels{4, 4};  // hidden channels; conv layers = size + 1
  std::vector<int> gat_dims{32, 32, 32};
  int heads = 4;
  int n_le = 8;
  int n_we = 8;
  int n_m = 32;
  int n_j = 3;
  int temporal_bits = 4;
  // Patch geometry the conv branch is built for.
  int n_doppler = 32;
  int patch_cols = 5;

  void validate() const;
  int fused_dim() const { return 4 * n_h; }
  int n_gat() const { return static_cast<int>(gat_dims.size()); }
  int conv_layers() const { return static_cast<int>(conv_channels.size()) + 1; }
  // Width of the node features handed to the edge head.
  int node_out_dim() const { return gat_dims.empty() ? fused_dim() : gat_dims.back(); }
  int raw_input_dim() const { return 2 + temporal_bits + n_doppler * patch_cols; }
  friend bool operator==(const ModelDims&, const ModelDims&) = default;
};

enum class Variant { Full, NfenOnly, StefOnly, OajnOnly, NfenStef, NfenOajn, StefOajn, NfenGcnOajn };

const char* variant_name(Variant v);
Variant parse_variant(const std::string& name);
bool variant_has_nfen(Variant v);
bool variant_has_stef(Variant v);
bool variant_has_gcn(Variant v);
bool variant_has_oajn(Variant v);

// Named parameter arrays in allocation order.
struct ParamStore {
  std::vector<std::string> names;
  std::vector<Array> values;

  std::size_t add(std::string name, Array value);
  std::size_t index_of(const std::string& name) const;
  bool contains(const std::string& name) const;
  Array& get(const std::string& name) { return values[index_of(name)]; }
  const Array& get(const std::string& name) const { return values[index_of(name)]; }
  std::size_t size() const { return values.size(); }
  std::size_t scalar_count() const;
  // Scalars held by parameters whose name starts with `prefix`.
  std::size_t scalar_count(const std::string& prefix) const;
  friend bool operator==(const ParamStore&, const ParamStore&) = default;
};

struct Model {
  ModelDims dims;
  Variant variant = Variant::Full;
  ParamStore params;
  std::uint64_t seed = 0;
};

// Glorot-uniform weights, zero biases.
Model init_model(const ModelDims& dims, Variant variant, std::uint64_t seed);

struct ParameterCount {
  std::size_t nfen_d = 0, nfen_s = 0, nfen_i = 0;
  std::size_t nfen_conv = 0;  // conv kernels and biases
  std::size_t nfen_proj = 0;  // flatten -> n_h projection
  std::size_t stef = 0;
  std::size_t oajn = 0;
  std::size_t total() const { return nfen_d + nfen_s + nfen_i + nfen_conv + nfen_proj + stef + oajn; }
  friend bool operator==(const ParameterCount&, const ParameterCount&) = default;
};

// Closed-form counts for the full network.
ParameterCount parameter_count(const ModelDims& dims);
// Tally of an allocated full-variant parameter store.
ParameterCount allocated_parameter_count(const ParamStore& params);

// Output geometry of the conv branch for the configured patch shape.
struct ConvGeometry {
  std::vector<tensor::Conv2dSpec> specs;
  std::size_t out_h = 0, out_w = 0;
  std::size_t flat() const { return out_h * out_w; }
};
ConvGeometry conv_geometry(const ModelDims& dims);

std::array<double, 4> encode_temporal(int frame);

// Constant network inputs derived from a graph, already scaled.
struct GraphTensors {
  std::size_t n_nodes = 0;
  std::size_t n_edges = 0;
  Array d;      // [N,1] channel / N_D
  Array s;      // [N,1] SNR dB / 20
  Array i;      // [N,4] temporal code
  Array patch;  // [N,1,N_D,P] log(1 + power)
  Array ef;     // [E,2] F_E / (v_u/2), earlier node first
  Array dcd;    // [E,1] dcd / N_D
  std::vector<std::size_t> eu, ew;
  std::vector<int> labels;  // EdgeLabel as int
};

GraphTensors prepare_inputs(const AssocGraph& graph, const ModelDims& dims);

struct AttentionTrace {
  int layer = 0;
  int head = 0;
  std::vector<std::size_t> dst;  // receiving node per coefficient
  std::vector<double> alpha;
};

// Parameters of one head of one attention layer, bound on a tape.
struct GatHead {
  Var W_G;     // [in, n_h]
  Var L_E;     // [2, N_LE]
  Var W_E;     // [2, N_WE]
  Var a_G;     // [2 n_h + N_WE]
  Var beta_G;  // [n_h + N_LE, n_h]
};

// Directed message lists: every undirected edge contributes u->w with
// features [F_u, F_w] and w->u with [F_w, F_u].
struct MessageLists {
  std::size_t n_nodes = 0;
  std::vector<std::size_t> src, dst;
  Array ef;  // [2E, 2]
};
MessageLists message_lists(std::size_t n_nodes, std::span<const std::size_t> eu, std::span<const std::size_t> ew,
                           const Array& ef);

Var gat_layer(const Var& x, std::span<const GatHead> heads, const MessageLists& msgs, int layer_index = 0,
              std::vector<AttentionTrace>* trace = nullptr);

// ELU(D^-1/2 (A + I) D^-1/2 X W).
Var gcn_layer(const Var& x, const Var& W, const MessageLists& msgs);

struct ForwardResult {
  Var fused;      // [N, fused_dim] (or adapter output)
  Var node;       // [N, node_out_dim]
  Var log_probs;  // [E, 3]
};

// Binds every parameter of the store on the tape; gradients flow into
// grads (same layout as params) on backward when grads is non-null.
std::vector<Var> bind_params(Tape& tape, const ParamStore& params, std::vector<Array>* grads);

ForwardResult forward(const Model& model, std::span<const Var> bound, const GraphTensors& in,
                      std::vector<AttentionTrace>* trace = nullptr);

// Mean over edges of weighted categorical cross-entropy for one graph.
Var graph_loss(const Var& log_probs, std::span<const int> labels, const std::array<double, 3>& class_weights);

// Inference without gradient bookkeeping.
std::vector<std::array<double, 3>> predict(const Model& model, const GraphTensors& in,
                                           std::vector<AttentionTrace>* trace = nullptr);
void annotate_predictions(const Model& model, AssocGraph& graph);

}  // namespace glpmfd
