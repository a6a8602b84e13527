#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "grassketch/data.hpp"
#include "grassketch/errors.hpp"
#include "grassketch/harness.hpp"
#include "grassketch/kernels_approx.hpp"
#include "grassketch/kernels_exact.hpp"
#include "grassketch/sketch.hpp"
#include "grassketch/subspace.hpp"

namespace py = pybind11;
using namespace grassketch;

namespace {

std::vector<Subspace> as_subspaces(const py::sequence& seq) {
  std::vector<Subspace> out;
  out.reserve(py::len(seq));
  for (auto item : seq) out.push_back(item.cast<Subspace>());
  return out;
}

py::object harness_json(const nlohmann::json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

// `kind` is filled in when the dict leaves it out.
ExperimentConfig config_from_py(const py::dict& config, ExperimentKind kind) {
  const std::string text = py::module_::import("json").attr("dumps")(config).cast<std::string>();
  auto j = nlohmann::json::parse(text);
  if (!j.contains("kind")) j["kind"] = to_string(kind);
  return config_from_json(j);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Grassmannian kernels and rank-one-projection sketches";

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<EnsembleMismatch>(m, "EnsembleMismatch", PyExc_ValueError);
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<FormatError>(m, "FormatError", PyExc_RuntimeError);
  py::register_exception<DataError>(m, "DataError", PyExc_RuntimeError);

  py::class_<Subspace>(m, "Subspace")
      .def(py::init<Eigen::MatrixXd, double>(), py::arg("basis"), py::arg("tol") = 1e-10)
      .def_property_readonly("basis", &Subspace::basis)
      .def_property_readonly("n", &Subspace::n)
      .def_property_readonly("k", &Subspace::k)
      .def("__repr__", [](const Subspace& s) {
        return "Subspace(n=" + std::to_string(s.n()) + ", k=" + std::to_string(s.k()) + ")";
      });

  m.def("random_subspace", &random_subspace, py::arg("n"), py::arg("k"), py::arg("seed"));
  m.def("perturb_subspace", &perturb_subspace, py::arg("base"), py::arg("sigma"), py::arg("seed"));
  m.def(
      "subspace_pair_with_angles",
      [](int n, std::vector<double> angles, std::uint64_t seed) { return subspace_pair_with_angles(n, angles, seed); },
      py::arg("n"), py::arg("angles"), py::arg("seed"));
  m.def("principal_angles", [](const Subspace& a, const Subspace& b) { return principal_angles(a, b).theta; });
  m.def("geodesic_distance", &geodesic_distance);
  m.def("save_subspace", &save_subspace);
  m.def("load_subspace", &load_subspace);

  m.def("projection_kernel", &projection_kernel);
  m.def("binet_cauchy_kernel", &binet_cauchy_kernel);
  m.def(
      "gram_matrix",
      [](const py::sequence& data, const std::string& kernel) {
        const auto us = as_subspaces(data);
        return gram_matrix(us, kernel_name_from_string(kernel)).values;
      },
      py::arg("subspaces"), py::arg("kernel") = "projection");

  py::class_<RopEnsemble>(m, "RopEnsemble")
      .def(py::init([](std::uint64_t seed, std::uint64_t features, int n) { return RopEnsemble{seed, features, n}; }),
           py::arg("seed"), py::arg("m"), py::arg("n"))
      .def_readonly("master_seed", &RopEnsemble::master_seed)
      .def_readonly("m", &RopEnsemble::m)
      .def_readonly("n", &RopEnsemble::n)
      .def_property_readonly("id", &RopEnsemble::id)
      .def("__eq__", [](const RopEnsemble& a, const RopEnsemble& b) { return a == b; });

  py::class_<RealSketch>(m, "RealSketch")
      .def_readonly("ensemble", &RealSketch::ensemble)
      .def_readonly("k", &RealSketch::k)
      .def_property_readonly("values", [](const RealSketch& s) {
        return Eigen::Map<const Eigen::VectorXd>(s.values.data(), static_cast<Eigen::Index>(s.values.size()));
      });
  py::class_<BitSketch>(m, "BitSketch")
      .def_readonly("ensemble", &BitSketch::ensemble)
      .def_readonly("k", &BitSketch::k)
      .def_readonly("words", &BitSketch::words)
      .def("signs", [](const BitSketch& s) {
        const auto v = pm1_expand(s);
        return Eigen::VectorXd(Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size())));
      });

  m.def("rop_sketch", &rop_sketch);
  m.def("sign_sketch", &sign_sketch);
  m.def("binarize", &binarize);
  m.def("rop_values", [](const py::sequence& data, const RopEnsemble& e) {
    const auto us = as_subspaces(data);
    return Eigen::MatrixXd(rop_values(us, e));
  });
  m.def("pm1_dot", &pm1_dot);
  m.def("save_sketch", [](const std::filesystem::path& p, const RealSketch& s) { save_sketch(p, s); });
  m.def("save_sketch", [](const std::filesystem::path& p, const BitSketch& s) { save_sketch(p, s); });
  m.def("load_sketch", [](const std::filesystem::path& p) -> py::object {
    return std::visit([](auto&& s) { return py::cast(s); }, load_sketch(p));
  });

  m.def("kappa1_approx", &kappa1_approx);
  m.def("kappa2_approx", &kappa2_approx);
  m.def("kappa2_symmetrised", [](const RealSketch& x, const RealSketch& y) {
    return kappa2_symmetrised(DualSketch::from_real(x), DualSketch::from_real(y));
  });
  m.def("kappa3_approx", &kappa3_approx);
  m.def("c_k", &c_k);

  m.def(
      "synth_benchmark",
      [](int classes, int per_class_train, int per_class_test, int n, int k, double sigma, std::uint64_t seed) {
        const auto d = synth_benchmark({classes, per_class_train, per_class_test, n, k, sigma, seed});
        return py::make_tuple(d.train.samples, d.train.labels, d.test.samples, d.test.labels);
      },
      py::arg("classes") = 8, py::arg("per_class_train") = 20, py::arg("per_class_test") = 20, py::arg("n") = 256,
      py::arg("k") = 5, py::arg("sigma") = 0.1, py::arg("seed") = 0);

  m.def(
      "mc_validate",
      [](const py::dict& config) {
        const auto c = config_from_py(config, ExperimentKind::mc_validate);
        McReport report;
        {
          py::gil_scoped_release release;
          report = mc_validate(c);
        }
        return harness_json(to_json(report, c));
      },
      py::arg("config"));
  m.def(
      "classify_synth",
      [](const py::dict& config) {
        const auto c = config_from_py(config, ExperimentKind::synth_classify);
        ClassificationReport report;
        {
          py::gil_scoped_release release;
          report = synth_experiment(c);
        }
        return harness_json(to_json(report, c));
      },
      py::arg("config"));
  m.def(
      "bench",
      [](const py::dict& config) {
        const auto c = config_from_py(config, ExperimentKind::bench);
        BenchReport report;
        {
          py::gil_scoped_release release;
          report = bench(c);
        }
        return harness_json(to_json(report, c));
      },
      py::arg("config"));
}
