#include "glpmfd/mflpn.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace glpmfd {

namespace t = glpmfd::tensor;

// ---------------------------------------------------------------- dims & variants

ConvGeometry conv_geometry(const ModelDims& dims) {
  ConvGeometry g;
  std::size_t h = static_cast<std::size_t>(dims.n_doppler);
  std::size_t w = static_cast<std::size_t>(dims.patch_cols);
  for (int p = 0; p < dims.conv_layers(); ++p) {
    t::Conv2dSpec spec;
    spec.stride_h = p == 0 ? 2 : 1;
    spec.pad_h = 1;
    // zero range padding only once the range extent drops below the kernel
    spec.pad_w = w < 3 ? 1 : 0;
    const t::Shape out = t::conv2d_output_shape({1, 1, h, w}, {1, 1, 3, 3}, spec);
    h = out[2];
    w = out[3];
    g.specs.push_back(spec);
  }
  g.out_h = h;
  g.out_w = w;
  return g;
}

void ModelDims::validate() const {
  auto fail = [](const std::string& what) { throw std::invalid_argument("ModelDims: " + what); };
  if (n_h < 1) fail("n_h must be positive");
  if (n_d < 1 || n_s < 1 || n_i < 1) fail("branch depths must be positive");
  if (temporal_bits != 4) fail("temporal_bits must be 4");
  if (heads < 1) fail("heads must be positive");
  for (int w : gat_dims)
    if (w < 1 || w % heads != 0) fail("attention layer width " + std::to_string(w) + " not divisible by heads");
  for (int c : conv_channels)
    if (c < 1) fail("conv channels must be positive");
  if (n_le < 1 || n_we < 1 || n_m < 1) fail("edge and hidden widths must be positive");
  if (n_j < 2) fail("n_j must be at least 2");
  if (n_doppler < 2 || patch_cols < 1) fail("patch geometry must be at least 2 x 1");
  conv_geometry(*this);
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::Full: return "FULL";
    case Variant::NfenOnly: return "NFEN_ONLY";
    case Variant::StefOnly: return "STEF_ONLY";
    case Variant::OajnOnly: return "OAJN_ONLY";
    case Variant::NfenStef: return "NFEN+STEF";
    case Variant::NfenOajn: return "NFEN+OAJN";
    case Variant::StefOajn: return "STEF+OAJN";
    case Variant::NfenGcnOajn: return "NFEN+GCN+OAJN";
  }
  return "?";
}

Variant parse_variant(const std::string& name) {
  for (Variant v : {Variant::Full, Variant::NfenOnly, Variant::StefOnly, Variant::OajnOnly, Variant::NfenStef,
                    Variant::NfenOajn, Variant::StefOajn, Variant::NfenGcnOajn}) {
    if (name == variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown variant '" + name + "'");
}

bool variant_has_nfen(Variant v) {
  return v == Variant::Full || v == Variant::NfenOnly || v == Variant::NfenStef || v == Variant::NfenOajn ||
         v == Variant::NfenGcnOajn;
}
bool variant_has_stef(Variant v) {
  return v == Variant::Full || v == Variant::StefOnly || v == Variant::NfenStef || v == Variant::StefOajn;
}
bool variant_has_gcn(Variant v) { return v == Variant::NfenGcnOajn; }
bool variant_has_oajn(Variant v) {
  return v == Variant::Full || v == Variant::OajnOnly || v == Variant::NfenOajn || v == Variant::StefOajn ||
         v == Variant::NfenGcnOajn;
}

// ---------------------------------------------------------------- params

std::size_t ParamStore::add(std::string name, Array value) {
  if (contains(name)) throw std::invalid_argument("ParamStore: duplicate parameter " + name);
  names.push_back(std::move(name));
  values.push_back(std::move(value));
  return values.size() - 1;
}

std::size_t ParamStore::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw std::out_of_range("ParamStore: no parameter named " + name);
  return static_cast<std::size_t>(it - names.begin());
}

bool ParamStore::contains(const std::string& name) const {
  return std::find(names.begin(), names.end(), name) != names.end();
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const Array& a : values) n += a.size();
  return n;
}

std::size_t ParamStore::scalar_count(const std::string& prefix) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i].rfind(prefix, 0) == 0) n += values[i].size();
  return n;
}

namespace {

class Initializer {
 public:
  Initializer(ParamStore& store, std::uint64_t seed) : store_(store), rng_(make_rng(seed, "init")) {}

  void weight(const std::string& name, t::Shape shape, std::size_t fan_in, std::size_t fan_out) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Array a(std::move(shape));
    std::uniform_real_distribution<double> u(-bound, bound);
    for (double& v : a.data()) v = u(rng_);
    store_.add(name, std::move(a));
  }
  void matrix(const std::string& name, std::size_t in, std::size_t out) { weight(name, {in, out}, in, out); }
  void bias(const std::string& name, std::size_t n) { store_.add(name, Array({n})); }
  void dense(const std::string& prefix, std::size_t in, std::size_t out) {
    matrix(prefix + ".W", in, out);
    bias(prefix + ".b", out);
  }

 private:
  ParamStore& store_;
  Rng rng_;
};

}  // namespace

Model init_model(const ModelDims& dims, Variant variant, std::uint64_t seed) {
  dims.validate();
  Model m;
  m.dims = dims;
  m.variant = variant;
  m.seed = seed;
  Initializer init(m.params, seed);
  const auto nh = static_cast<std::size_t>(dims.n_h);

  if (variant_has_nfen(variant)) {
    auto branch = [&](const std::string& b, std::size_t in, int layers) {
      for (int k = 0; k < layers; ++k) init.dense("nfen." + b + ".L" + std::to_string(k), k == 0 ? in : nh, nh);
    };
    branch("d", 1, dims.n_d);
    branch("s", 1, dims.n_s);
    branch("i", static_cast<std::size_t>(dims.temporal_bits), dims.n_i);
    std::vector<std::size_t> ch{1};
    for (int c : dims.conv_channels) ch.push_back(static_cast<std::size_t>(c));
    ch.push_back(1);
    for (std::size_t p = 0; p + 1 < ch.size(); ++p) {
      const std::string pre = "nfen.a.conv" + std::to_string(p);
      init.weight(pre + ".W", {ch[p + 1], ch[p], 3, 3}, ch[p] * 9, ch[p + 1] * 9);
      init.bias(pre + ".b", ch[p + 1]);
    }
    init.dense("nfen.a.proj", conv_geometry(dims).flat(), nh);
  } else {
    init.dense("adapter", static_cast<std::size_t>(dims.raw_input_dim()), static_cast<std::size_t>(dims.fused_dim()));
  }

  std::size_t width = static_cast<std::size_t>(dims.fused_dim());
  if (variant_has_stef(variant)) {
    const auto le = static_cast<std::size_t>(dims.n_le), we = static_cast<std::size_t>(dims.n_we);
    for (int k = 0; k < dims.n_gat(); ++k) {
      const auto out = static_cast<std::size_t>(dims.gat_dims[static_cast<std::size_t>(k)]);
      const std::size_t nh_head = out / static_cast<std::size_t>(dims.heads);
      for (int h = 0; h < dims.heads; ++h) {
        const std::string pre = "gat" + std::to_string(k) + ".h" + std::to_string(h);
        init.matrix(pre + ".W_G", width, nh_head);
        init.matrix(pre + ".L_E", 2, le);
        init.matrix(pre + ".W_E", 2, we);
        init.weight(pre + ".a_G", {2 * nh_head + we}, 2 * nh_head + we, 1);
        init.matrix(pre + ".beta_G", nh_head + le, nh_head);
      }
      width = out;
    }
  } else if (variant_has_gcn(variant)) {
    for (int k = 0; k < dims.n_gat(); ++k) {
      const auto out = static_cast<std::size_t>(dims.gat_dims[static_cast<std::size_t>(k)]);
      init.matrix("gcn" + std::to_string(k) + ".W", width, out);
      width = out;
    }
  }

  if (variant_has_oajn(variant)) {
    const auto nm = static_cast<std::size_t>(dims.n_m);
    init.matrix("oajn.W_ed", 3, nm);
    init.bias("oajn.b_ed", nm);
    for (int k = 0; k < dims.n_j; ++k) {
      const std::size_t in = k == 0 ? 2 * width + nm : nm;
      const std::size_t out = k == dims.n_j - 1 ? 3 : nm;
      init.dense("oajn.J" + std::to_string(k), in, out);
    }
  } else {
    init.dense("head", 2 * width + 3, 3);
  }
  return m;
}

ParameterCount parameter_count(const ModelDims& dims) {
  dims.validate();
  const std::size_t nh = static_cast<std::size_t>(dims.n_h);
  auto branch = [&](std::size_t lead, int depth) {
    // lead*N_h + (depth-2)(N_h+1)N_h + (N_h+1)N_h, written without negative intermediates
    return lead * nh + static_cast<std::size_t>(depth - 1) * (nh + 1) * nh;
  };
  ParameterCount c;
  c.nfen_d = branch(2, dims.n_d);
  c.nfen_s = branch(2, dims.n_s);
  c.nfen_i = branch(static_cast<std::size_t>(dims.temporal_bits) + 1, dims.n_i);

  std::vector<std::size_t> ch{1};
  for (int v : dims.conv_channels) ch.push_back(static_cast<std::size_t>(v));
  ch.push_back(1);
  for (std::size_t p = 0; p + 1 < ch.size(); ++p) c.nfen_conv += (ch[p] * 9 + 1) * ch[p + 1];
  c.nfen_proj = (conv_geometry(dims).flat() + 1) * nh;

  const std::size_t le = static_cast<std::size_t>(dims.n_le), we = static_cast<std::size_t>(dims.n_we);
  const std::size_t H = static_cast<std::size_t>(dims.heads);
  std::size_t x_in = static_cast<std::size_t>(dims.fused_dim());
  for (int w : dims.gat_dims) {
    const std::size_t n = static_cast<std::size_t>(w) / H;
    c.stef += H * (2 * le + x_in * n + 3 * we + (le + n) * n + 2 * n);
    x_in = static_cast<std::size_t>(w);
  }

  const std::size_t nm = static_cast<std::size_t>(dims.n_m);
  const std::size_t nx = static_cast<std::size_t>(dims.node_out_dim());
  c.oajn = 4 * nm + (2 * nx + nm + 1) * nm + static_cast<std::size_t>(dims.n_j - 2) * (nm + 1) * nm + 3 * (nm + 1);
  return c;
}

ParameterCount allocated_parameter_count(const ParamStore& params) {
  ParameterCount c;
  c.nfen_d = params.scalar_count("nfen.d.");
  c.nfen_s = params.scalar_count("nfen.s.");
  c.nfen_i = params.scalar_count("nfen.i.");
  c.nfen_conv = params.scalar_count("nfen.a.conv");
  c.nfen_proj = params.scalar_count("nfen.a.proj");
  c.stef = params.scalar_count("gat");
  c.oajn = params.scalar_count("oajn.");
  return c;
}

// ---------------------------------------------------------------- inputs

std::array<double, 4> encode_temporal(int frame) {
  if (frame < 0 || frame >= 16) {
    throw std::out_of_range("encode_temporal: frame " + std::to_string(frame) + " does not fit in 4 bits");
  }
  return {double(frame & 1), double((frame >> 1) & 1), double((frame >> 2) & 1), double((frame >> 3) & 1)};
}

GraphTensors prepare_inputs(const AssocGraph& graph, const ModelDims& dims) {
  const std::size_t N = graph.n_nodes(), E = graph.n_edges();
  const auto ND = static_cast<std::size_t>(dims.n_doppler), P = static_cast<std::size_t>(dims.patch_cols);
  GraphTensors in;
  in.n_nodes = N;
  in.n_edges = E;
  in.d = Array({N, 1});
  in.s = Array({N, 1});
  in.i = Array({N, 4});
  in.patch = Array({N, 1, ND, P});
  for (std::size_t k = 0; k < N; ++k) {
    const Observation& z = graph.nodes[k];
    if (z.patch.rows != dims.n_doppler || z.patch.cols != dims.patch_cols) {
      throw t::ShapeError("prepare_inputs: patch " + std::to_string(z.patch.rows) + "x" +
                          std::to_string(z.patch.cols) + " does not match model geometry " +
                          std::to_string(ND) + "x" + std::to_string(P));
    }
    in.d[k] = static_cast<double>(z.d) / static_cast<double>(ND);
    in.s[k] = z.s / 20.0;
    const auto code = encode_temporal(z.frame);
    for (std::size_t b = 0; b < 4; ++b) in.i[k * 4 + b] = code[b];
    for (std::size_t c = 0; c < ND * P; ++c) in.patch[k * ND * P + c] = std::log1p(std::max(0.0, z.patch.values[c]));
  }
  const double fe_scale = 2.0 / graph.radar.v_u;
  in.ef = Array({E, 2});
  in.dcd = Array({E, 1});
  for (std::size_t k = 0; k < E; ++k) {
    const Edge& e = graph.edges[k];
    in.eu.push_back(static_cast<std::size_t>(e.u));
    in.ew.push_back(static_cast<std::size_t>(e.w));
    in.ef[2 * k] = e.fe[0] * fe_scale;
    in.ef[2 * k + 1] = e.fe[1] * fe_scale;
    in.dcd[k] = static_cast<double>(e.dcd) / static_cast<double>(ND);
    in.labels.push_back(static_cast<int>(e.label));
  }
  return in;
}

MessageLists message_lists(std::size_t n_nodes, std::span<const std::size_t> eu, std::span<const std::size_t> ew,
                           const Array& ef) {
  const std::size_t E = eu.size();
  if (ew.size() != E || ef.size() != 2 * E) throw t::ShapeError("message_lists: edge arrays disagree");
  MessageLists m;
  m.n_nodes = n_nodes;
  m.ef = Array({2 * E, 2});
  m.src.reserve(2 * E);
  m.dst.reserve(2 * E);
  for (std::size_t k = 0; k < E; ++k) {
    m.src.push_back(eu[k]);
    m.dst.push_back(ew[k]);
    m.ef[4 * k] = ef[2 * k];
    m.ef[4 * k + 1] = ef[2 * k + 1];
    m.src.push_back(ew[k]);
    m.dst.push_back(eu[k]);
    m.ef[4 * k + 2] = ef[2 * k + 1];
    m.ef[4 * k + 3] = ef[2 * k];
  }
  return m;
}

// ---------------------------------------------------------------- layers

Var gat_layer(const Var& x, std::span<const GatHead> heads, const MessageLists& msgs, int layer_index,
              std::vector<AttentionTrace>* trace) {
  Tape& tape = *x.tape();
  const std::size_t N = x.value().rows();
  if (N != msgs.n_nodes) throw t::ShapeError("gat_layer: node count differs from message lists");
  const std::size_t K = msgs.src.size();
  const bool has_nb = K > 0;

  std::vector<std::size_t> seg(msgs.dst);
  for (std::size_t i = 0; i < N; ++i) seg.push_back(i);
  Var ef = tape.constant(msgs.ef);

  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads.size(); ++h) {
    const GatHead& p = heads[h];
    const std::size_t nh = p.W_G.value().cols();
    const std::size_t len = p.a_G.value().size();
    if (len != 2 * nh + p.W_E.value().cols()) throw t::ShapeError("gat_layer: a_G length does not match head widths");
    Var Z = t::matmul(x, p.W_G);
    Var a = t::reshape(p.a_G, {len, 1});
    Var s_dst = t::matmul(Z, t::slice_rows(a, 0, nh));
    Var s_src = t::matmul(Z, t::slice_rows(a, nh, 2 * nh));
    // self term: e_ii = 0 contributes nothing through W_E
    Var logits = t::add(s_dst, s_src);
    if (has_nb) {
      Var s_e = t::matmul(t::matmul(ef, p.W_E), t::slice_rows(a, 2 * nh, len));
      Var nb = t::add(t::add(t::gather_rows(s_dst, msgs.dst), t::gather_rows(s_src, msgs.src)), s_e);
      const Var parts[] = {nb, logits};
      logits = t::concat_rows(parts);
    }
    Var alpha = t::segment_softmax(t::leaky_relu(logits, 0.2), seg, N);
    Var agg = t::mul_rows(Z, t::slice_rows(alpha, K, K + N));
    if (has_nb) {
      const Var cat[] = {t::gather_rows(Z, msgs.src), t::matmul(ef, p.L_E)};
      Var msg = t::matmul(t::concat_cols(cat), p.beta_G);
      agg = t::add(agg, t::scatter_add_rows(t::mul_rows(msg, t::slice_rows(alpha, 0, K)), msgs.dst, N));
    }
    outs.push_back(t::elu(agg));
    if (trace) {
      const auto av = alpha.value().data();
      trace->push_back({layer_index, static_cast<int>(h), seg, std::vector<double>(av.begin(), av.end())});
    }
  }
  return outs.size() == 1 ? outs[0] : t::concat_cols(outs);
}

Var gcn_layer(const Var& x, const Var& W, const MessageLists& msgs) {
  Tape& tape = *x.tape();
  const std::size_t N = x.value().rows();
  if (N != msgs.n_nodes) throw t::ShapeError("gcn_layer: node count differs from message lists");
  std::vector<double> deg(N, 1.0);
  for (std::size_t d : msgs.dst) deg[d] += 1.0;
  Var XW = t::matmul(x, W);
  Array self_w({N});
  for (std::size_t i = 0; i < N; ++i) self_w[i] = 1.0 / deg[i];
  Var out = t::mul_rows(XW, tape.constant(std::move(self_w)));
  const std::size_t K = msgs.src.size();
  if (K > 0) {
    Array w({K});
    for (std::size_t k = 0; k < K; ++k) w[k] = 1.0 / std::sqrt(deg[msgs.src[k]] * deg[msgs.dst[k]]);
    Var msg = t::mul_rows(t::gather_rows(XW, msgs.src), tape.constant(std::move(w)));
    out = t::add(out, t::scatter_add_rows(msg, msgs.dst, N));
  }
  return t::elu(out);
}

// ---------------------------------------------------------------- forward

std::vector<Var> bind_params(Tape& tape, const ParamStore& params, std::vector<Array>* grads) {
  if (grads && grads->size() != params.size()) {
    grads->clear();
    for (const Array& a : params.values) grads->emplace_back(a.shape());
  }
  std::vector<Var> bound;
  bound.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i)
    bound.push_back(tape.param(params.values[i], grads ? &(*grads)[i] : nullptr));
  return bound;
}

ForwardResult forward(const Model& model, std::span<const Var> bound, const GraphTensors& in,
                      std::vector<AttentionTrace>* trace) {
  if (bound.size() != model.params.size()) throw std::invalid_argument("forward: bound parameter count mismatch");
  if (bound.empty()) throw std::invalid_argument("forward: model has no parameters");
  const ModelDims& D = model.dims;
  Tape& tape = *bound[0].tape();
  auto P = [&](const std::string& name) -> const Var& { return bound[model.params.index_of(name)]; };
  auto dense = [&](const Var& h, const std::string& pre) { return t::add_bias(t::matmul(h, P(pre + ".W")), P(pre + ".b")); };
  const std::size_t N = in.n_nodes;

  ForwardResult r;
  if (variant_has_nfen(model.variant)) {
    auto branch = [&](const Array& x, const std::string& b, int layers) {
      Var h = tape.constant(x);
      for (int k = 0; k < layers; ++k) h = t::elu(dense(h, "nfen." + b + ".L" + std::to_string(k)));
      return h;
    };
    Var fd = branch(in.d, "d", D.n_d);
    Var fs = branch(in.s, "s", D.n_s);
    Var fi = branch(in.i, "i", D.n_i);
    const ConvGeometry geo = conv_geometry(D);
    Var h = tape.constant(in.patch);
    for (int p = 0; p < D.conv_layers(); ++p) {
      const std::string pre = "nfen.a.conv" + std::to_string(p);
      h = t::elu(t::conv2d(h, P(pre + ".W"), P(pre + ".b"), geo.specs[static_cast<std::size_t>(p)]));
    }
    Var fa = t::elu(dense(t::reshape(h, {N, geo.flat()}), "nfen.a.proj"));
    const Var parts[] = {fd, fs, fi, fa};
    r.fused = t::concat_cols(parts);
  } else {
    const std::size_t pc = in.patch.size() / std::max<std::size_t>(N, 1);
    Array raw({N, static_cast<std::size_t>(D.raw_input_dim())});
    const std::size_t w = raw.cols();
    if (w != 6 + pc && N > 0) throw t::ShapeError("forward: raw input width mismatch");
    for (std::size_t k = 0; k < N; ++k) {
      raw[k * w] = in.d[k];
      raw[k * w + 1] = in.s[k];
      for (std::size_t b = 0; b < 4; ++b) raw[k * w + 2 + b] = in.i[k * 4 + b];
      for (std::size_t c = 0; c < pc; ++c) raw[k * w + 6 + c] = in.patch[k * pc + c];
    }
    r.fused = t::elu(dense(tape.constant(std::move(raw)), "adapter"));
  }

  const MessageLists msgs = message_lists(N, in.eu, in.ew, in.ef);
  Var x = r.fused;
  if (variant_has_stef(model.variant)) {
    for (int k = 0; k < D.n_gat(); ++k) {
      std::vector<GatHead> heads;
      for (int h = 0; h < D.heads; ++h) {
        const std::string pre = "gat" + std::to_string(k) + ".h" + std::to_string(h);
        heads.push_back({P(pre + ".W_G"), P(pre + ".L_E"), P(pre + ".W_E"), P(pre + ".a_G"), P(pre + ".beta_G")});
      }
      x = gat_layer(x, heads, msgs, k, trace);
    }
  } else if (variant_has_gcn(model.variant)) {
    for (int k = 0; k < D.n_gat(); ++k) x = gcn_layer(x, P("gcn" + std::to_string(k) + ".W"), msgs);
  }
  r.node = x;

  const std::size_t E = in.n_edges;
  if (E == 0) {
    r.log_probs = tape.constant(Array({0, 3}));
    return r;
  }
  Var xw = t::gather_rows(x, in.ew);
  Var xu = t::gather_rows(x, in.eu);
  const Var edge_parts[] = {tape.constant(in.ef), tape.constant(in.dcd)};
  Var edge_in = t::concat_cols(edge_parts);
  Var logits;
  if (variant_has_oajn(model.variant)) {
    Var emb = t::add_bias(t::matmul(edge_in, P("oajn.W_ed")), P("oajn.b_ed"));
    const Var cat[] = {xw, xu, emb};
    Var h = t::concat_cols(cat);
    for (int k = 0; k < D.n_j - 1; ++k) h = t::elu(dense(h, "oajn.J" + std::to_string(k)));
    logits = dense(h, "oajn.J" + std::to_string(D.n_j - 1));
  } else {
    const Var cat[] = {xw, xu, edge_in};
    logits = dense(t::concat_cols(cat), "head");
  }
  r.log_probs = t::log_softmax_rows(logits);
  return r;
}

Var graph_loss(const Var& log_probs, std::span<const int> labels, const std::array<double, 3>& class_weights) {
  const std::size_t E = log_probs.value().rows();
  if (E == 0) throw std::invalid_argument("graph_loss: graph has no edges");
  if (labels.size() != E) throw t::ShapeError("graph_loss: label count does not match edges");
  Tape& tape = *log_probs.tape();
  std::vector<std::size_t> pick(E);
  Array w({E});
  for (std::size_t k = 0; k < E; ++k) {
    const int c = labels[k];
    if (c < 0 || c > 2) throw std::invalid_argument("graph_loss: label out of range");
    pick[k] = 3 * k + static_cast<std::size_t>(c);
    w[k] = class_weights[static_cast<std::size_t>(c)];
  }
  Var picked = t::gather_rows(t::reshape(log_probs, {3 * E, 1}), pick);
  Var weighted = t::mul_rows(picked, tape.constant(std::move(w)));
  return t::scale(t::sum(weighted), -1.0 / static_cast<double>(E));
}

std::vector<std::array<double, 3>> predict(const Model& model, const GraphTensors& in,
                                           std::vector<AttentionTrace>* trace) {
  Tape tape(false);
  const std::vector<Var> bound = bind_params(tape, model.params, nullptr);
  const ForwardResult r = forward(model, bound, in, trace);
  const Array& lp = r.log_probs.value();
  std::vector<std::array<double, 3>> out(in.n_edges);
  for (std::size_t k = 0; k < in.n_edges; ++k)
    for (std::size_t c = 0; c < 3; ++c) out[k][c] = std::exp(lp[3 * k + c]);
  return out;
}

void annotate_predictions(const Model& model, AssocGraph& graph) {
  const auto probs = predict(model, prepare_inputs(graph, model.dims));
  for (std::size_t k = 0; k < graph.edges.size(); ++k) graph.edges[k].pred = probs[k];
}

}  // namespace glpmfd
