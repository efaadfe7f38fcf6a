#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "xtangle/cli.hpp"
#include "xtangle/subspace.hpp"
#include "xtangle/xtension.hpp"

namespace py = pybind11;
using namespace xtangle;

namespace {

py::dict certification_dict(const CertificationResult& c) {
  py::dict d;
  d["verdict"] = to_string(c.verdict);
  d["k"] = c.k;
  d["rank"] = c.rank;
  d["complement_dim"] = c.complement_dim;
  d["sym_power_dim"] = c.sym_power_dim;
  d["sigma_min"] = c.sigma_min;
  d["nu"] = c.nu;
  d["borderline"] = c.borderline;
  return d;
}

}  // namespace

PYBIND11_MODULE(_xtangle, m) {
  m.doc() = "X-tanglement certification hierarchies";
  m.attr("__version__") = XTANGLE_VERSION;

  py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<CapExceeded>(m, "CapExceeded", PyExc_MemoryError);
  py::register_exception<ConsistencyError>(m, "ConsistencyError", PyExc_RuntimeError);

  py::class_<VarietySpec>(m, "VarietySpec")
      .def_property_readonly("family", &VarietySpec::family)
      .def_property_readonly("key", &VarietySpec::key)
      .def_property_readonly("ambient_dim", &VarietySpec::ambient_dim)
      .def("__eq__", [](const VarietySpec& a, const VarietySpec& b) { return a == b; })
      .def("__repr__", [](const VarietySpec& s) { return "VarietySpec(" + s.key() + ")"; });

  m.def("sep", &VarietySpec::sep, py::arg("dims"));
  m.def("schmidt_rank", &VarietySpec::schmidt_rank, py::arg("r"), py::arg("n1"), py::arg("n2"));
  m.def("bosonic", &VarietySpec::bosonic, py::arg("m"), py::arg("n"));
  m.def("fermionic", &VarietySpec::fermionic, py::arg("m"), py::arg("n"));
  m.def("bisep", &VarietySpec::bisep, py::arg("dims"));
  m.def("lsep", &VarietySpec::lsep, py::arg("l"), py::arg("dims"));
  m.def("tprod", &VarietySpec::tprod, py::arg("t"), py::arg("dims"));
  m.def("mps", &VarietySpec::mps, py::arg("r"), py::arg("dims"));
  m.def("surrogate", &VarietySpec::surrogate, py::arg("r"), py::arg("dims"), py::arg("side"));

  m.def("complement_basis", [](const VarietySpec& s, int k) { return Matrix(complement_basis(s, k)->columns); },
        py::arg("spec"), py::arg("k"));
  m.def("complement_dim", [](const VarietySpec& s, int k) { return complement_basis(s, k)->rank(); },
        py::arg("spec"), py::arg("k"));
  m.def("nu_max", [](const Matrix& H, const VarietySpec& s, int k) { return nu_max(H, s, k).value; },
        py::arg("H"), py::arg("spec"), py::arg("k"));
  m.def("nu_min", [](const Matrix& H, const VarietySpec& s, int k) { return nu_min(H, s, k).value; },
        py::arg("H"), py::arg("spec"), py::arg("k"));
  m.def(
      "certify_subspace",
      [](const Matrix& columns, const VarietySpec& s, int k) {
        return certification_dict(nullstellensatz_certify(Subspace::span_of(columns), s, k));
      },
      py::arg("columns"), py::arg("spec"), py::arg("k"));
  m.def(
      "gm_lower_bound",
      [](const Matrix& columns, const VarietySpec& s, int k) { return gm_lower_bound(Subspace::span_of(columns), s, k); },
      py::arg("columns"), py::arg("spec"), py::arg("k"));
  m.def(
      "tension",
      [](const Matrix& rho, const VarietySpec& s, int k, int max_iters) {
        TensionOptions opt;
        opt.max_iters = max_iters;
        const auto t = tension_feasibility(rho, s, k, opt);
        py::dict d;
        d["verdict"] = to_string(t.verdict);
        d["iterations"] = t.iterations;
        d["sigma"] = t.tension ? py::cast(Matrix(t.tension->Sigma)) : py::none();
        d["witness"] = t.witness ? py::cast(*t.witness) : py::none();
        d["witness_gap"] = t.witness_gap;
        return d;
      },
      py::arg("rho"), py::arg("spec"), py::arg("k"), py::arg("max_iters") = 20000);
  m.def(
      "definetti_bound",
      [](const VarietySpec& s, int k) {
        const auto b = definetti_bound(s, k);
        return py::make_tuple(b.num, b.den);
      },
      py::arg("spec"), py::arg("k"));
  m.def(
      "worst_case_degree",
      [](const VarietySpec& s) {
        const auto d = worst_case_degree(s);
        py::dict out;
        out["worst_case"] = d.worst_case ? py::cast(*d.worst_case) : py::none();
        out["exact"] = d.exact;
        out["upper_bound"] = d.upper_bound;
        out["general_bound"] = d.general_bound;
        return out;
      },
      py::arg("spec"));
  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}
