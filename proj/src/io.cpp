#include "glpmfd/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

#include <boost/archive/iterators/base64_from_binary.hpp>
#include <boost/archive/iterators/binary_from_base64.hpp>
#include <boost/archive/iterators/transform_width.hpp>

namespace glpmfd::io {

namespace fs = std::filesystem;

namespace {

static_assert(std::endian::native == std::endian::little, "base64 arrays assume a little-endian host");

// Non-finite doubles have no JSON literal; spell them as strings.
json put(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

double get_double(const json& j, const std::string& ctx) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) {
    const auto& s = j.get_ref<const std::string&>();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
  }
  throw FormatError(ctx + ": expected a number");
}

template <std::integral I>
json put(I v) {
  return v;
}
json put(const std::string& s) { return s; }
json put(Variant v) { return variant_name(v); }
json put(const std::vector<double>& v) {
  json a = json::array();
  for (double x : v) a.push_back(put(x));
  return a;
}
json put(const std::vector<int>& v) { return v; }
json put(const std::array<double, 3>& v) { return put(std::vector<double>(v.begin(), v.end())); }

void get(const json& j, double& out, const std::string& ctx) { out = get_double(j, ctx); }
template <std::integral I>
void get(const json& j, I& out, const std::string& ctx) {
  if constexpr (std::same_as<I, bool>) {
    if (!j.is_boolean()) throw FormatError(ctx + ": expected true or false");
  } else {
    if (!j.is_number_integer()) throw FormatError(ctx + ": expected an integer");
    if constexpr (std::is_unsigned_v<I>)
      if (j.is_number_integer() && !j.is_number_unsigned() && j.get<long long>() < 0)
        throw FormatError(ctx + ": expected a non-negative integer");
  }
  out = j.get<I>();
}
void get(const json& j, std::string& out, const std::string& ctx) {
  if (!j.is_string()) throw FormatError(ctx + ": expected a string");
  out = j.get<std::string>();
}
void get(const json& j, Variant& out, const std::string& ctx) {
  std::string s;
  get(j, s, ctx);
  try {
    out = parse_variant(s);
  } catch (const std::exception& e) {
    throw FormatError(ctx + ": " + e.what());
  }
}
void get(const json& j, std::vector<double>& out, const std::string& ctx) {
  if (!j.is_array()) throw FormatError(ctx + ": expected an array");
  out.clear();
  for (const json& x : j) out.push_back(get_double(x, ctx));
}
void get(const json& j, std::vector<int>& out, const std::string& ctx) {
  if (!j.is_array()) throw FormatError(ctx + ": expected an array");
  out.clear();
  for (const json& x : j) {
    int v = 0;
    get(x, v, ctx);
    out.push_back(v);
  }
}
void get(const json& j, std::array<double, 3>& out, const std::string& ctx) {
  std::vector<double> v;
  get(j, v, ctx);
  if (v.size() != 3) throw FormatError(ctx + ": expected 3 numbers");
  std::copy(v.begin(), v.end(), out.begin());
}

template <class T>
  requires(!std::integral<T>)
json put(const T& t);
template <class T>
void get(const json& j, T& out, const std::string& ctx);

struct Writer {
  json j = json::object();
  template <class M>
  void operator()(const char* key, const M& m) {
    j[key] = put(m);
  }
};

// Strict reader: absent keys keep their current value, unknown keys throw.
struct Reader {
  const json& j;
  std::string ctx;
  std::set<std::string> known;
  template <class M>
  void operator()(const char* key, M& m) {
    known.insert(key);
    if (auto it = j.find(key); it != j.end()) get(*it, m, ctx + "." + key);
  }
  void finish() const {
    for (const auto& [k, v] : j.items())
      if (!known.count(k)) throw FormatError("unknown key '" + ctx + "." + k + "'");
  }
};

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, RadarConfig>
void fields(V& v, T& c) {
  v("range_res_m", c.range_res_m);
  v("az_res_deg", c.az_res_deg);
  v("n_pulses", c.n_pulses);
  v("r_min_m", c.r_min_m);
  v("r_max_m", c.r_max_m);
  v("az_min_deg", c.az_min_deg);
  v("az_max_deg", c.az_max_deg);
  v("v_u", c.v_u);
  v("frame_period_s", c.frame_period_s);
  v("pfa1", c.pfa1);
  v("patch_range_cells", c.patch_range_cells);
  v("noise_coeff", c.noise_coeff);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, SceneConfig>
void fields(V& v, T& c) {
  v("min_targets", c.min_targets);
  v("max_targets", c.max_targets);
  v("min_speed", c.min_speed);
  v("max_speed", c.max_speed);
  v("snr_list_db", c.snr_list_db);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, GraphConfig>
void fields(V& v, T& c) {
  v("v_max", c.v_max);
  v("Q", c.Q);
  v("L", c.L);
  v("M", c.M);
  v("max_paths", c.max_paths);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, ModelDims>
void fields(V& v, T& d) {
  v("n_h", d.n_h);
  v("n_d", d.n_d);
  v("n_s", d.n_s);
  v("n_i", d.n_i);
  v("conv_channels", d.conv_channels);
  v("gat_dims", d.gat_dims);
  v("heads", d.heads);
  v("n_le", d.n_le);
  v("n_we", d.n_we);
  v("n_m", d.n_m);
  v("n_j", d.n_j);
  v("temporal_bits", d.temporal_bits);
  v("n_doppler", d.n_doppler);
  v("patch_cols", d.patch_cols);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, TrainHyper>
void fields(V& v, T& h) {
  v("batch_size", h.batch_size);
  v("epochs", h.epochs);
  v("lr0", h.lr0);
  v("lr_decay", h.lr_decay);
  v("decay_every", h.decay_every);
  v("seed", h.seed);
  v("class_weighting", h.class_weighting);
  v("variant", h.variant);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, ScoreParams>
void fields(V& v, T& s) {
  v("alpha", s.alpha);
  v("lambda", s.lambda);
  v("gamma2", s.gamma2);
  v("edge_gate_eps", s.edge_gate_eps);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, OspaParams>
void fields(V& v, T& o) {
  v("xi", o.xi);
  v("eta", o.eta);
  v("kappa", o.kappa);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, NciParams>
void fields(V& v, T& n) {
  v("fe_gate", n.fe_gate);
  v("dcd_gate", n.dcd_gate);
  v("gamma", n.gamma);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, CfarParams>
void fields(V& v, T& c) {
  v("n_ref", c.n_ref);
  v("n_guard", c.n_guard);
  v("pfa", c.pfa);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, EvalSettings>
void fields(V& v, T& e) {
  v("snr_list_db", e.snr_list_db);
  v("max_windows", e.max_windows);
  v("n_runs", e.n_runs);
  v("cfar", e.cfar);
  v("pfa2", e.pfa2);
  v("calib_trials", e.calib_trials);
  v("kappa_quantile", e.kappa_quantile);
  v("kappa_trials", e.kappa_trials);
  v("eta_multiple", e.eta_multiple);
  v("snr_ref_db", e.snr_ref_db);
  v("importance_repeats", e.importance_repeats);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, RunPaths>
void fields(V& v, T& p) {
  v("data", p.data);
  v("checkpoint", p.checkpoint);
  v("out", p.out);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, TargetTruth>
void fields(V& v, T& t) {
  v("id", t.id);
  v("x", t.x);
  v("vx", t.vx);
  v("y", t.y);
  v("vy", t.vy);
  v("snr_db", t.snr_db);
}

template <class V, class T>
  requires std::same_as<std::remove_const_t<T>, RunConfig>
void fields(V& v, T& c) {
  v("radar", c.radar);
  v("scene", c.scene);
  v("graph", c.graph);
  v("dims", c.dims);
  v("hyper", c.hyper);
  v("score", c.score);
  v("ospa", c.ospa);
  v("nci", c.nci);
  v("eval", c.eval);
  v("n_graphs", c.n_graphs);
  v("seed", c.seed);
  v("paths", c.paths);
}

template <class T>
  requires(!std::integral<T>)
json put(const T& t) {
  Writer w;
  fields(w, t);
  return std::move(w.j);
}

template <class T>
void get(const json& j, T& out, const std::string& ctx) {
  if (!j.is_object()) throw FormatError(ctx + ": expected an object");
  Reader r{j, ctx, {}};
  fields(r, out);
  r.finish();
}

template <class T>
T read_struct(const json& j, const std::string& ctx) {
  T t{};
  get(j, t, ctx);
  return t;
}

const json& at(const json& j, const char* key) {
  if (!j.is_object()) throw FormatError(std::string("expected an object holding '") + key + "'");
  auto it = j.find(key);
  if (it == j.end()) throw FormatError(std::string("missing key '") + key + "'");
  return *it;
}

double num(const json& j, const char* key) { return get_double(at(j, key), key); }

template <class I>
I integer(const json& j, const char* key) {
  I v{};
  get(at(j, key), v, key);
  return v;
}

std::string base64_encode(const unsigned char* p, std::size_t n) {
  using namespace boost::archive::iterators;
  using It = base64_from_binary<transform_width<const unsigned char*, 6, 8>>;
  std::string s(It(p), It(p + n));
  s.append((3 - n % 3) % 3, '=');
  return s;
}

std::vector<unsigned char> base64_decode(std::string s) {
  using namespace boost::archive::iterators;
  using It = transform_width<binary_from_base64<std::string::const_iterator>, 8, 6>;
  if (s.size() % 4 != 0) throw FormatError("base64 data length is not a multiple of 4");
  std::size_t pad = 0;
  while (!s.empty() && s.back() == '=') {
    s.pop_back();
    ++pad;
  }
  if (pad > 2) throw FormatError("base64 data has too much padding");
  std::vector<unsigned char> out;
  try {
    for (It it(s.cbegin()), end(s.cend()); it != end; ++it) out.push_back(static_cast<unsigned char>(*it));
  } catch (const std::exception&) {
    throw FormatError("base64 data contains invalid characters");
  }
  // the decoder emits whole bytes only; trailing partial bits are dropped
  const std::size_t expect = (s.size() + pad) / 4 * 3 - pad;
  out.resize(std::min(out.size(), expect));
  if (out.size() != expect) throw FormatError("base64 data is truncated");
  return out;
}

void flatten(const json& j, std::vector<double>& out, std::vector<std::size_t>& shape, std::size_t depth) {
  if (!j.is_array()) {
    if (depth != shape.size()) throw FormatError("ragged numeric array");
    out.push_back(get_double(j, "array element"));
    return;
  }
  if (depth == shape.size()) shape.push_back(j.size());
  else if (shape[depth] != j.size()) throw FormatError("ragged numeric array");
  for (const json& x : j) flatten(x, out, shape, depth + 1);
}

json nest(const std::vector<double>& v, const std::vector<std::size_t>& shape, std::size_t depth, std::size_t& pos) {
  json a = json::array();
  for (std::size_t k = 0; k < shape[depth]; ++k) {
    if (depth + 1 == shape.size()) a.push_back(put(v[pos++]));
    else a.push_back(nest(v, shape, depth + 1, pos));
  }
  return a;
}

std::string csv_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

template <class F>
auto wrap_load(const fs::path& p, F&& f) {
  try {
    return f();
  } catch (const FormatError&) {
    throw;
  } catch (const json::exception& e) {
    throw FormatError(p.string() + ": " + e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(p.string() + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- config

SceneConfig RunConfig::scene_with_radar() const {
  SceneConfig s = scene;
  s.radar = radar;
  return s;
}

void RunConfig::validate() const {
  radar.validate();
  scene_with_radar().validate();
  graph.validate();
  dims.validate();
  hyper.validate();
  score.validate();
  ospa.validate();
  if (dims.n_doppler != radar.n_doppler() || dims.patch_cols != radar.patch_range_cells)
    throw std::invalid_argument("RunConfig: dims patch geometry must match the radar (n_pulses x patch_range_cells)");
  if (n_graphs < 1) throw std::invalid_argument("RunConfig: n_graphs must be positive");
  if (eval.max_windows < 1 || eval.n_runs < 1 || eval.calib_trials < 1 || eval.kappa_trials < 1 ||
      eval.importance_repeats < 1)
    throw std::invalid_argument("RunConfig: eval counts must be positive");
  if (eval.snr_list_db.empty()) throw std::invalid_argument("RunConfig: eval.snr_list_db is empty");
  if (!(eval.pfa2 > 0.0 && eval.pfa2 < 1.0)) throw std::invalid_argument("RunConfig: eval.pfa2 must lie in (0, 1)");
}

RunConfig run_config_from_json(const json& j) {
  RunConfig c;
  get(j, c, "config");
  c.validate();
  return c;
}

json to_json(const RunConfig& c) { return put(c); }

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return wrap_load(path, [&] { return run_config_from_json(json::parse(ss.str())); });
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string config_hash(const RunConfig& c) {
  json j = to_json(c);
  // paths and seed do not change what a config means
  j.erase("paths");
  j.erase("seed");
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(j.dump())));
  return buf;
}

// ---------------------------------------------------------------- documents

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

json make_document(const std::string& kind, const DocMeta& meta, json payload) {
  json d = json::object();
  d["schema_version"] = kSchemaVersion;
  d["kind"] = kind;
  d["config_hash"] = meta.config_hash;
  d["seed"] = meta.seed;
  d["payload"] = std::move(payload);
  return d;
}

json parse_document(const std::string& text, const std::string& kind, DocMeta* meta) {
  json d;
  try {
    d = json::parse(text);
  } catch (const json::parse_error& e) {
    throw FormatError(std::string("malformed JSON: ") + e.what());
  }
  if (!d.is_object() || !d.contains("schema_version")) throw FormatError("not a versioned document");
  const json& v = d["schema_version"];
  if (!v.is_number_integer()) throw FormatError("schema_version must be an integer");
  if (v.get<long long>() != kSchemaVersion)
    throw VersionError("unsupported schema_version " + v.dump() + " (this build reads " +
                       std::to_string(kSchemaVersion) + ")");
  if (!d.contains("kind") || d["kind"] != kind)
    throw FormatError("expected a '" + kind + "' document, found " + (d.contains("kind") ? d["kind"].dump() : "none"));
  if (!d.contains("payload")) throw FormatError("document has no payload");
  if (meta) {
    meta->config_hash = d.value("config_hash", std::string());
    meta->seed = d.value("seed", std::uint64_t{0});
  }
  return std::move(d["payload"]);
}

json read_document(const fs::path& path, const std::string& kind, DocMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_document(ss.str(), kind, meta);
  } catch (const VersionError& e) {
    throw VersionError(path.string() + ": " + e.what());
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

json encode_doubles(const std::vector<double>& v, const std::vector<std::size_t>& shape, const SaveOptions& opt) {
  std::size_t n = 1;
  for (std::size_t s : shape) n *= s;
  if (n != v.size()) throw std::invalid_argument("encode_doubles: shape does not match data size");
  if (opt.base64) {
    json j = json::object();
    j["encoding"] = "base64-f64le";
    j["shape"] = shape;
    j["data"] = base64_encode(reinterpret_cast<const unsigned char*>(v.data()), v.size() * sizeof(double));
    return j;
  }
  if (shape.empty()) return put(v.empty() ? 0.0 : v[0]);
  std::size_t pos = 0;
  return nest(v, shape, 0, pos);
}

std::vector<double> decode_doubles(const json& j, std::vector<std::size_t>* shape) {
  std::vector<double> out;
  std::vector<std::size_t> sh;
  if (j.is_object()) {
    if (j.value("encoding", std::string()) != "base64-f64le")
      throw FormatError("unknown array encoding " + (j.contains("encoding") ? j["encoding"].dump() : "(none)"));
    sh = at(j, "shape").get<std::vector<std::size_t>>();
    const auto bytes = base64_decode(at(j, "data").get<std::string>());
    std::size_t n = 1;
    for (std::size_t s : sh) n *= s;
    if (bytes.size() != n * sizeof(double)) throw FormatError("base64 array size does not match its shape");
    out.resize(n);
    std::memcpy(out.data(), bytes.data(), bytes.size());
  } else {
    flatten(j, out, sh, 0);
    // an empty outer array leaves the inner extents unknown
    if (!sh.empty() && sh[0] == 0) sh.resize(1);
  }
  if (shape) *shape = sh;
  return out;
}

json to_json(const RadarConfig& c) { return put(c); }
RadarConfig radar_from_json(const json& j) { return read_struct<RadarConfig>(j, "radar"); }
json to_json(const GraphConfig& c) { return put(c); }
GraphConfig graph_config_from_json(const json& j) { return read_struct<GraphConfig>(j, "graph"); }
json to_json(const ModelDims& d) { return put(d); }
ModelDims dims_from_json(const json& j) { return read_struct<ModelDims>(j, "dims"); }

json to_json(const Observation& z, const SaveOptions& opt) {
  json j = json::object();
  j["t"] = put(z.t);
  j["r"] = put(z.r);
  j["theta"] = put(z.theta);
  j["v"] = put(z.v);
  j["d"] = z.d;
  j["s"] = put(z.s);
  j["power"] = put(z.power);
  j["frame"] = z.frame;
  j["origin"] = z.origin;
  j["patch"] = encode_doubles(z.patch.values,
                              {static_cast<std::size_t>(z.patch.rows), static_cast<std::size_t>(z.patch.cols)}, opt);
  return j;
}

Observation observation_from_json(const json& j) {
  Observation z;
  z.t = num(j, "t");
  z.r = num(j, "r");
  z.theta = num(j, "theta");
  z.v = num(j, "v");
  z.d = integer<int>(j, "d");
  z.s = num(j, "s");
  z.power = num(j, "power");
  z.frame = integer<int>(j, "frame");
  z.origin = integer<int>(j, "origin");
  std::vector<std::size_t> shape;
  z.patch.values = decode_doubles(at(j, "patch"), &shape);
  if (z.patch.values.empty()) {
    z.patch.rows = shape.empty() ? 0 : static_cast<int>(shape[0]);
    z.patch.cols = 0;
  } else {
    if (shape.size() != 2) throw FormatError("patch must be a 2-D array");
    z.patch.rows = static_cast<int>(shape[0]);
    z.patch.cols = static_cast<int>(shape[1]);
  }
  return z;
}

json to_json(const TargetTruth& t) { return put(t); }
TargetTruth truth_from_json(const json& j) { return read_struct<TargetTruth>(j, "truth"); }

json to_json(const SimulatedWindow& w, const SaveOptions& opt) {
  json j = json::object();
  j["radar"] = to_json(w.window.config);
  json frames = json::array();
  for (const auto& f : w.window.frames) {
    json a = json::array();
    for (const Observation& z : f) a.push_back(to_json(z, opt));
    frames.push_back(std::move(a));
  }
  j["frames"] = std::move(frames);
  json truths = json::array();
  for (const auto& f : w.truths) {
    json a = json::array();
    for (const TargetTruth& t : f) a.push_back(to_json(t));
    truths.push_back(std::move(a));
  }
  j["truths"] = std::move(truths);
  return j;
}

SimulatedWindow window_from_json(const json& j) {
  SimulatedWindow w;
  w.window.config = radar_from_json(at(j, "radar"));
  for (const json& f : at(j, "frames")) {
    std::vector<Observation> frame;
    for (const json& z : f) frame.push_back(observation_from_json(z));
    w.window.frames.push_back(std::move(frame));
  }
  for (const json& f : at(j, "truths")) {
    std::vector<TargetTruth> frame;
    for (const json& t : f) frame.push_back(truth_from_json(t));
    w.truths.push_back(std::move(frame));
  }
  return w;
}

json to_json(const AssocGraph& g, const SaveOptions& opt) {
  json j = json::object();
  j["radar"] = to_json(g.radar);
  j["snr_db"] = put(g.snr_db);
  j["gate_evaluations"] = g.gate_evaluations;
  json nodes = json::array();
  for (const Observation& z : g.nodes) nodes.push_back(to_json(z, opt));
  j["nodes"] = std::move(nodes);
  json edges = json::array();
  for (const Edge& e : g.edges) {
    json x = json::object();
    x["u"] = e.u;
    x["w"] = e.w;
    x["e"] = json::array({put(e.fe[0]), put(e.fe[1])});
    x["dcd"] = e.dcd;
    x["label"] = label_name(e.label);
    if (e.pred) x["pred"] = put(*e.pred);
    edges.push_back(std::move(x));
  }
  j["edges"] = std::move(edges);
  return j;
}

AssocGraph graph_from_json(const json& j) {
  AssocGraph g;
  g.radar = radar_from_json(at(j, "radar"));
  g.snr_db = num(j, "snr_db");
  g.gate_evaluations = integer<std::size_t>(j, "gate_evaluations");
  for (const json& z : at(j, "nodes")) g.nodes.push_back(observation_from_json(z));
  for (const json& x : at(j, "edges")) {
    Edge e;
    e.u = integer<int>(x, "u");
    e.w = integer<int>(x, "w");
    std::vector<double> fe;
    get(at(x, "e"), fe, "edge.e");
    if (fe.size() != 2) throw FormatError("edge.e must hold 2 numbers");
    e.fe = {fe[0], fe[1]};
    e.dcd = integer<int>(x, "dcd");
    const std::string lab = at(x, "label").get<std::string>();
    if (lab == "FF") e.label = EdgeLabel::FF;
    else if (lab == "TF") e.label = EdgeLabel::TF;
    else if (lab == "TT") e.label = EdgeLabel::TT;
    else throw FormatError("unknown edge label '" + lab + "'");
    if (x.contains("pred")) {
      std::array<double, 3> p{};
      get(x["pred"], p, "edge.pred");
      e.pred = p;
    }
    const auto n = static_cast<int>(g.nodes.size());
    if (e.u < 0 || e.w < 0 || e.u >= n || e.w >= n) throw FormatError("edge endpoint out of range");
    g.edges.push_back(e);
  }
  return g;
}

json to_json(const Checkpoint& c, const SaveOptions& opt) {
  json j = json::object();
  j["dims"] = to_json(c.model.dims);
  j["variant"] = variant_name(c.model.variant);
  j["seed"] = c.model.seed;
  j["epoch"] = c.epoch;
  j["lr"] = put(c.lr);
  json params = json::array();
  const ParamStore& ps = c.model.params;
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const Array& a = ps.values[k];
    json p = json::object();
    p["name"] = ps.names[k];
    p["shape"] = a.shape();
    p["value"] = encode_doubles(std::vector<double>(a.data().begin(), a.data().end()), a.shape(), opt);
    params.push_back(std::move(p));
  }
  j["params"] = std::move(params);
  return j;
}

Checkpoint checkpoint_from_json(const json& j) {
  Checkpoint c;
  const ModelDims dims = dims_from_json(at(j, "dims"));
  Variant variant = Variant::Full;
  get(at(j, "variant"), variant, "variant");
  const auto seed = integer<std::uint64_t>(j, "seed");
  c.model = init_model(dims, variant, seed);
  c.epoch = integer<int>(j, "epoch");
  c.lr = num(j, "lr");
  const json& params = at(j, "params");
  ParamStore& ps = c.model.params;
  if (!params.is_array() || params.size() != ps.size())
    throw FormatError("checkpoint holds " + std::to_string(params.size()) + " parameters, model expects " +
                      std::to_string(ps.size()));
  for (std::size_t k = 0; k < ps.size(); ++k) {
    const json& p = params[k];
    const std::string name = at(p, "name").get<std::string>();
    if (name != ps.names[k]) throw FormatError("parameter " + std::to_string(k) + " is '" + name + "', expected '" +
                                               ps.names[k] + "'");
    const auto shape = at(p, "shape").get<tensor::Shape>();
    if (shape != ps.values[k].shape()) throw FormatError("parameter '" + name + "' has the wrong shape");
    std::vector<double> v = decode_doubles(at(p, "value"));
    if (v.size() != ps.values[k].size()) throw FormatError("parameter '" + name + "' has the wrong size");
    ps.values[k] = Array(shape, std::move(v));
  }
  return c;
}

namespace {
json confusion_json(const Confusion& c) {
  json m = json::array();
  for (const auto& row : c.m) m.push_back(row);
  return m;
}
Confusion confusion_from(const json& j) {
  Confusion c;
  if (!j.is_array() || j.size() != 3) throw FormatError("confusion must be 3x3");
  for (std::size_t i = 0; i < 3; ++i) {
    if (!j[i].is_array() || j[i].size() != 3) throw FormatError("confusion must be 3x3");
    for (std::size_t k = 0; k < 3; ++k) get(j[i][k], c.m[i][k], "confusion");
  }
  return c;
}
json box_json(const BoxStats& b) {
  json j = json::object();
  j["q1"] = put(b.q1);
  j["median"] = put(b.median);
  j["q3"] = put(b.q3);
  j["lo_whisker"] = put(b.lo_whisker);
  j["hi_whisker"] = put(b.hi_whisker);
  j["outliers"] = put(b.outliers);
  return j;
}
BoxStats box_from(const json& j) {
  BoxStats b;
  b.q1 = num(j, "q1");
  b.median = num(j, "median");
  b.q3 = num(j, "q3");
  b.lo_whisker = num(j, "lo_whisker");
  b.hi_whisker = num(j, "hi_whisker");
  get(at(j, "outliers"), b.outliers, "outliers");
  return b;
}
}  // namespace

json to_json(const TrainReport& r) {
  json j = json::object();
  j["train_loss"] = put(r.train_loss);
  j["val_loss"] = put(r.val_loss);
  j["best_epoch"] = r.best_epoch;
  j["best_val_loss"] = put(r.best_val_loss);
  j["skipped_graphs"] = r.skipped_graphs;
  json per = json::array();
  for (const SnrAccuracy& s : r.per_snr) {
    json x = json::object();
    x["snr_db"] = put(s.snr_db);
    x["accuracy"] = put(s.confusion.accuracy());
    x["confusion"] = confusion_json(s.confusion);
    per.push_back(std::move(x));
  }
  j["per_snr"] = std::move(per);
  j["seconds"] = put(r.seconds);
  return j;
}

TrainReport train_report_from_json(const json& j) {
  TrainReport r;
  get(at(j, "train_loss"), r.train_loss, "train_loss");
  get(at(j, "val_loss"), r.val_loss, "val_loss");
  r.best_epoch = integer<int>(j, "best_epoch");
  r.best_val_loss = num(j, "best_val_loss");
  r.skipped_graphs = integer<int>(j, "skipped_graphs");
  for (const json& x : at(j, "per_snr")) r.per_snr.push_back({num(x, "snr_db"), confusion_from(at(x, "confusion"))});
  r.seconds = num(j, "seconds");
  return r;
}

json to_json(const EvalReport& r) {
  json j = json::object();
  json rows = json::array();
  for (const CurvePoint& c : r.rows) {
    json x = json::object();
    x["snr_db"] = put(c.snr_db);
    x["windows"] = c.windows;
    x["method"] = c.method;
    x["pd"] = put(c.pd);
    x["pd_stderr"] = put(c.pd_stderr);
    x["pfa2_achieved"] = put(c.pfa2_achieved);
    x["n_targets"] = c.n_targets;
    rows.push_back(std::move(x));
  }
  j["rows"] = std::move(rows);
  j["upb_exceptions"] = r.upb_exceptions;
  j["exceptions_satisfy_criterion"] = r.exceptions_satisfy_criterion;
  j["cfar_analytic_pd"] = put(r.cfar_analytic_pd);
  j["n_runs"] = r.n_runs;
  j["seconds"] = put(r.seconds);
  return j;
}

EvalReport eval_report_from_json(const json& j) {
  EvalReport r;
  for (const json& x : at(j, "rows")) {
    CurvePoint c;
    c.snr_db = num(x, "snr_db");
    c.windows = integer<int>(x, "windows");
    c.method = at(x, "method").get<std::string>();
    c.pd = num(x, "pd");
    c.pd_stderr = num(x, "pd_stderr");
    c.pfa2_achieved = num(x, "pfa2_achieved");
    c.n_targets = integer<long>(x, "n_targets");
    r.rows.push_back(std::move(c));
  }
  r.upb_exceptions = integer<long>(j, "upb_exceptions");
  r.exceptions_satisfy_criterion = integer<bool>(j, "exceptions_satisfy_criterion");
  r.cfar_analytic_pd = num(j, "cfar_analytic_pd");
  r.n_runs = integer<int>(j, "n_runs");
  r.seconds = num(j, "seconds");
  return r;
}

json to_json(const ImportanceResult& r) {
  json j = json::object();
  j["feature"] = feature_name(r.feature);
  j["class_context"] = r.class_context < 0 ? std::string("ALL") : label_name(static_cast<EdgeLabel>(r.class_context));
  j["base_accuracy"] = put(r.base_accuracy);
  j["drops"] = put(r.drops);
  j["box"] = box_json(r.box);
  return j;
}

ImportanceResult importance_from_json(const json& j) {
  ImportanceResult r;
  r.feature = parse_feature(at(j, "feature").get<std::string>());
  const std::string ctx = at(j, "class_context").get<std::string>();
  r.class_context = ctx == "ALL" ? -1 : ctx == "FF" ? 0 : ctx == "TF" ? 1 : ctx == "TT" ? 2 : -2;
  if (r.class_context == -2) throw FormatError("unknown class_context '" + ctx + "'");
  r.base_accuracy = num(j, "base_accuracy");
  get(at(j, "drops"), r.drops, "drops");
  r.box = box_from(at(j, "box"));
  return r;
}

json to_json(const DetectionResult& d, const AssocGraph& g, double gamma2) {
  json j = json::object();
  j["gamma2"] = put(gamma2);
  j["truncated"] = d.truncated;
  json tracks = json::array();
  for (const CandidateTrack& t : d.tracks) {
    json x = json::object();
    x["node_ids"] = t.node_ids;
    x["edge_ids"] = t.edge_ids;
    x["rho"] = put(t.rho);
    x["S"] = put(t.S);
    json nodes = json::array();
    for (int n : t.node_ids) nodes.push_back(to_json(g.nodes[static_cast<std::size_t>(n)]));
    x["nodes"] = std::move(nodes);
    tracks.push_back(std::move(x));
  }
  j["tracks"] = std::move(tracks);
  return j;
}

void save_window(const fs::path& p, const SimulatedWindow& w, const DocMeta& m, const SaveOptions& o) {
  write_atomic(p, make_document("window", m, to_json(w, o)).dump());
}
SimulatedWindow load_window(const fs::path& p, DocMeta* m) {
  return wrap_load(p, [&] { return window_from_json(read_document(p, "window", m)); });
}
void save_graph(const fs::path& p, const AssocGraph& g, const DocMeta& m, const SaveOptions& o) {
  write_atomic(p, make_document("graph", m, to_json(g, o)).dump());
}
AssocGraph load_graph(const fs::path& p, DocMeta* m) {
  return wrap_load(p, [&] { return graph_from_json(read_document(p, "graph", m)); });
}
void save_checkpoint(const fs::path& p, const Checkpoint& c, const DocMeta& m, const SaveOptions& o) {
  write_atomic(p, make_document("checkpoint", m, to_json(c, o)).dump(1));
}
Checkpoint load_checkpoint(const fs::path& p, DocMeta* m) {
  return wrap_load(p, [&] { return checkpoint_from_json(read_document(p, "checkpoint", m)); });
}
void save_eval_report(const fs::path& p, const EvalReport& r, const DocMeta& m) {
  write_atomic(p, make_document("eval-report", m, to_json(r)).dump(1));
}
EvalReport load_eval_report(const fs::path& p, DocMeta* m) {
  return wrap_load(p, [&] { return eval_report_from_json(read_document(p, "eval-report", m)); });
}
void save_train_report(const fs::path& p, const TrainReport& r, const DocMeta& m) {
  write_atomic(p, make_document("train-report", m, to_json(r)).dump(1));
}
TrainReport load_train_report(const fs::path& p, DocMeta* m) {
  return wrap_load(p, [&] { return train_report_from_json(read_document(p, "train-report", m)); });
}

std::vector<AssocGraph> load_graph_dir(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw FormatError("not a directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".json") files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::vector<AssocGraph> out;
  for (const fs::path& f : files) out.push_back(load_graph(f));
  return out;
}

// ---------------------------------------------------------------- CSV

std::string eval_csv(const std::vector<EvalReport>& reports) {
  std::string s = "snr_db,windows,method,pd,pd_stderr,pfa2_achieved,n_runs\n";
  for (const EvalReport& r : reports)
    for (const CurvePoint& c : r.rows)
      s += csv_num(c.snr_db) + "," + std::to_string(c.windows) + "," + c.method + "," + csv_num(c.pd) + "," +
           csv_num(c.pd_stderr) + "," + csv_num(c.pfa2_achieved) + "," + std::to_string(r.n_runs) + "\n";
  return s;
}

std::string boxplot_csv(const std::vector<ImportanceResult>& results) {
  std::string s = "feature,class_context,q1,median,q3,lo_whisker,hi_whisker,outliers\n";
  for (const ImportanceResult& r : results) {
    s += std::string(feature_name(r.feature)) + "," +
         (r.class_context < 0 ? std::string("ALL") : label_name(static_cast<EdgeLabel>(r.class_context))) + "," +
         csv_num(r.box.q1) + "," + csv_num(r.box.median) + "," + csv_num(r.box.q3) + "," + csv_num(r.box.lo_whisker) +
         "," + csv_num(r.box.hi_whisker);
    for (double o : r.box.outliers) s += "," + csv_num(o);
    s += "\n";
  }
  return s;
}

std::string loss_csv(const TrainReport& r) {
  std::string s = "epoch,train_loss,val_loss\n";
  for (std::size_t k = 0; k < r.train_loss.size(); ++k)
    s += std::to_string(k) + "," + csv_num(r.train_loss[k]) + "," +
         (k < r.val_loss.size() ? csv_num(r.val_loss[k]) : std::string()) + "\n";
  return s;
}

}  // namespace glpmfd::io
