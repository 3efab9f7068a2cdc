#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "glpmfd/eval.hpp"
#include "glpmfd/io.hpp"
#include "glpmfd/trainer.hpp"

namespace py = pybind11;
using namespace glpmfd;

namespace {

std::vector<Point2> to_points(const std::vector<std::pair<double, double>>& v) {
  std::vector<Point2> out;
  for (const auto& [x, y] : v) out.push_back({x, y});
  return out;
}

}  // namespace

PYBIND11_MODULE(_glpmfd, m) {
  m.doc() = "Multi-frame radar detection by graph link prediction";
  m.attr("__version__") = "0.1.0";

  py::class_<RadarConfig>(m, "RadarConfig")
      .def(py::init<>())
      .def_readwrite("range_res_m", &RadarConfig::range_res_m)
      .def_readwrite("az_res_deg", &RadarConfig::az_res_deg)
      .def_readwrite("n_pulses", &RadarConfig::n_pulses)
      .def_readwrite("r_min_m", &RadarConfig::r_min_m)
      .def_readwrite("r_max_m", &RadarConfig::r_max_m)
      .def_readwrite("az_min_deg", &RadarConfig::az_min_deg)
      .def_readwrite("az_max_deg", &RadarConfig::az_max_deg)
      .def_readwrite("v_u", &RadarConfig::v_u)
      .def_readwrite("frame_period_s", &RadarConfig::frame_period_s)
      .def_readwrite("pfa1", &RadarConfig::pfa1)
      .def_readwrite("patch_range_cells", &RadarConfig::patch_range_cells)
      .def_readwrite("noise_coeff", &RadarConfig::noise_coeff)
      .def("validate", &RadarConfig::validate)
      .def("n_cells", &RadarConfig::n_cells)
      .def("gamma1", &RadarConfig::gamma1);
  m.def("desk_radar", &desk_radar);

  py::class_<GraphConfig>(m, "GraphConfig")
      .def(py::init<>())
      .def_readwrite("v_max", &GraphConfig::v_max)
      .def_readwrite("Q", &GraphConfig::Q)
      .def_readwrite("L", &GraphConfig::L)
      .def_readwrite("M", &GraphConfig::M)
      .def_readwrite("max_paths", &GraphConfig::max_paths)
      .def("validate", &GraphConfig::validate);

  py::class_<SceneConfig>(m, "SceneConfig")
      .def(py::init<>())
      .def_readwrite("radar", &SceneConfig::radar)
      .def_readwrite("min_targets", &SceneConfig::min_targets)
      .def_readwrite("max_targets", &SceneConfig::max_targets)
      .def_readwrite("min_speed", &SceneConfig::min_speed)
      .def_readwrite("max_speed", &SceneConfig::max_speed)
      .def_readwrite("snr_list_db", &SceneConfig::snr_list_db);

  py::class_<ModelDims>(m, "ModelDims")
      .def(py::init<>())
      .def_readwrite("n_h", &ModelDims::n_h)
      .def_readwrite("n_d", &ModelDims::n_d)
      .def_readwrite("n_s", &ModelDims::n_s)
      .def_readwrite("n_i", &ModelDims::n_i)
      .def_readwrite("conv_channels", &ModelDims::conv_channels)
      .def_readwrite("gat_dims", &ModelDims::gat_dims)
      .def_readwrite("heads", &ModelDims::heads)
      .def_readwrite("n_le", &ModelDims::n_le)
      .def_readwrite("n_we", &ModelDims::n_we)
      .def_readwrite("n_m", &ModelDims::n_m)
      .def_readwrite("n_j", &ModelDims::n_j)
      .def("validate", &ModelDims::validate);

  py::class_<OspaParams>(m, "OspaParams")
      .def(py::init<>())
      .def_readwrite("xi", &OspaParams::xi)
      .def_readwrite("eta", &OspaParams::eta)
      .def_readwrite("kappa", &OspaParams::kappa);

  py::class_<CfarParams>(m, "CfarParams")
      .def(py::init<>())
      .def_readwrite("n_ref", &CfarParams::n_ref)
      .def_readwrite("n_guard", &CfarParams::n_guard)
      .def_readwrite("pfa", &CfarParams::pfa);

  py::class_<Edge>(m, "Edge")
      .def_readonly("u", &Edge::u)
      .def_readonly("w", &Edge::w)
      .def_readonly("fe", &Edge::fe)
      .def_readonly("dcd", &Edge::dcd)
      .def_property_readonly("label", [](const Edge& e) { return std::string(label_name(e.label)); })
      .def_readonly("pred", &Edge::pred);

  py::class_<AssocGraph>(m, "AssocGraph")
      .def_property_readonly("n_nodes", &AssocGraph::n_nodes)
      .def_property_readonly("n_edges", &AssocGraph::n_edges)
      .def_readonly("edges", &AssocGraph::edges)
      .def_readonly("snr_db", &AssocGraph::snr_db)
      .def("node_origins", [](const AssocGraph& g) {
        std::vector<int> o;
        for (const Observation& z : g.nodes) o.push_back(z.origin);
        return o;
      });

  py::class_<CandidateTrack>(m, "CandidateTrack")
      .def_readonly("node_ids", &CandidateTrack::node_ids)
      .def_readonly("edge_ids", &CandidateTrack::edge_ids)
      .def_readonly("rho", &CandidateTrack::rho)
      .def_readonly("S", &CandidateTrack::S);

  py::class_<Model>(m, "Model")
      .def_readonly("dims", &Model::dims)
      .def_property_readonly("variant", [](const Model& md) { return std::string(variant_name(md.variant)); })
      .def_property_readonly("n_parameters", [](const Model& md) { return md.params.scalar_count(); });

  m.def("threshold_from_pfa", &threshold_from_pfa, py::arg("pfa"));
  m.def("cfar_alpha", &cfar_alpha, py::arg("n_ref"), py::arg("pfa"));
  m.def(
      "ca_cfar", [](const std::vector<double>& cells, const CfarParams& p) { return ca_cfar(cells, p); },
      py::arg("cells"), py::arg("params") = CfarParams{});
  m.def("resolve_ambiguity",
        [](double v, double v_u, double v_hat) {
          const AmbiguityResolution r = resolve_ambiguity(v, v_u, v_hat);
          return py::make_tuple(r.m, r.fe);
        },
        py::arg("v"), py::arg("v_u"), py::arg("v_hat"));
  m.def(
      "ospa",
      [](const std::vector<std::pair<double, double>>& X, const std::vector<std::pair<double, double>>& Y,
         const OspaParams& p) { return ospa(to_points(X), to_points(Y), p); },
      py::arg("X"), py::arg("Y"), py::arg("params") = OspaParams{});
  m.def(
      "hungarian", [](const std::vector<std::vector<double>>& cost) { return hungarian(cost); }, py::arg("cost"));

  m.def(
      "make_graphs",
      [](int n, const SceneConfig& scene, const GraphConfig& gc, std::uint64_t seed) {
        return make_graphs(n, scene, gc, seed);
      },
      py::arg("n"), py::arg("scene") = SceneConfig{}, py::arg("graph") = GraphConfig{}, py::arg("seed") = 1);
  m.def(
      "candidate_paths",
      [](const AssocGraph& g, const GraphConfig& gc) { return enumerate_candidate_paths(g, gc).paths; },
      py::arg("graph"), py::arg("config") = GraphConfig{});

  m.def(
      "init_model",
      [](const ModelDims& dims, const std::string& variant, std::uint64_t seed) {
        return init_model(dims, parse_variant(variant), seed);
      },
      py::arg("dims") = ModelDims{}, py::arg("variant") = "FULL", py::arg("seed") = 1);
  m.def("parameter_count", [](const ModelDims& dims) { return parameter_count(dims).total(); });
  m.def(
      "predict",
      [](const Model& model, const AssocGraph& g) { return predict(model, prepare_inputs(g, model.dims)); },
      py::arg("model"), py::arg("graph"));
  m.def(
      "train",
      [](const std::vector<AssocGraph>& train_graphs, const std::vector<AssocGraph>& val_graphs, int epochs,
         std::uint64_t seed, const std::string& variant) {
        TrainHyper h;
        h.epochs = epochs;
        h.decay_every = std::max(1, epochs / 4);
        h.seed = seed;
        h.variant = parse_variant(variant);
        return train(Dataset{train_graphs, val_graphs}, h, ModelDims{}).model;
      },
      py::arg("train"), py::arg("val"), py::arg("epochs") = 10, py::arg("seed") = 1, py::arg("variant") = "FULL");
  m.def(
      "accuracy",
      [](const Model& model, const std::vector<AssocGraph>& graphs) {
        return confusion_and_accuracy(model, graphs).accuracy();
      },
      py::arg("model"), py::arg("graphs"));

  m.def(
      "save_checkpoint",
      [](const std::filesystem::path& p, const Model& model) { io::save_checkpoint(p, io::Checkpoint{model}, {}); },
      py::arg("path"), py::arg("model"));
  m.def(
      "load_checkpoint", [](const std::filesystem::path& p) { return io::load_checkpoint(p).model; }, py::arg("path"));
  m.def(
      "save_graph", [](const std::filesystem::path& p, const AssocGraph& g) { io::save_graph(p, g, {}); },
      py::arg("path"), py::arg("graph"));
  m.def(
      "load_graph", [](const std::filesystem::path& p) { return io::load_graph(p); }, py::arg("path"));

  py::register_exception<io::FormatError>(m, "FormatError", PyExc_ValueError);
}
