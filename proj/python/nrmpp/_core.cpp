#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nrmpp/cli.hpp"
#include "nrmpp/nrm.hpp"
#include "nrmpp/specfun.hpp"
#include "nrmpp/summaries.hpp"

namespace py = pybind11;
using namespace nrmpp;

namespace {

Config make_config(const std::map<std::string, std::string>& overrides) {
  Config c = Config::defaults();
  for (const auto& [k, v] : overrides) c.set(k, v);
  return c;
}

Region interval(const std::pair<double, double>& ab) { return Region::interval(ab.first, ab.second); }

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Normalized random measures with point-process atoms";
  py::register_exception<std::domain_error>(m, "DomainError", PyExc_ValueError);

  m.def("version", &version_string);
  m.def("default_config", [] { return Config::defaults().values(); });

  m.def(
      "gfc",
      [](long n, long k, double alpha) { return gfc(n, k, alpha).value(); },
      py::arg("n"), py::arg("k"), py::arg("alpha"), "Generalized factorial coefficient C(n, k; alpha).");
  m.def("log_pochhammer", &log_pochhammer, py::arg("alpha"), py::arg("n"));

  m.def("psi", [](double shape, double rate, double u) { return JumpModel(shape, rate).psi(u); }, py::arg("shape"),
        py::arg("rate"), py::arg("u"));
  m.def("kappa", [](double shape, double rate, double u, long n) { return JumpModel(shape, rate).kappa(u, n); },
        py::arg("shape"), py::arg("rate"), py::arg("u"), py::arg("n"));

  m.def(
      "prior_moments",
      [](const std::map<std::string, std::string>& config, std::pair<double, double> a, std::pair<double, double> b) {
        const Model md = build_model(make_config(config));
        const PriorMoments pm = prior_moments(md.pp, md.jm, interval(a), interval(b));
        return py::dict(py::arg("mean_mu_a") = pm.mean_mu_a, py::arg("cov_mu_ab") = pm.cov_mu_ab,
                        py::arg("mean_p_a") = pm.mean_p_a, py::arg("monte_carlo") = pm.monte_carlo);
      },
      py::arg("config") = std::map<std::string, std::string>{}, py::arg("a"), py::arg("b"),
      "E[mu(A)], Cov(mu(A), mu(B)) and E[p(A)] for the configured process and jumps.");

  m.def(
      "joint_kn_law",
      [](const std::map<std::string, std::string>& config, int n, const std::vector<double>& anchors) {
        const Model md = build_model(make_config(config));
        return joint_kn_law(md.pp, md.jm, n, PointConfig(1, anchors)).value;
      },
      py::arg("config") = std::map<std::string, std::string>{}, py::arg("n"), py::arg("anchors"),
      "Density of (K_n = k, distinct values = anchors).");

  m.def(
      "prior_analysis",
      [](const std::map<std::string, std::string>& config) {
        py::list out;
        for (const auto& p : prior_analysis(make_config(config)))
          out.append(py::make_tuple(p.setting, p.x, p.k, p.value));
        return out;
      },
      py::arg("config") = std::map<std::string, std::string>{});

  m.def(
      "synthetic",
      [](const std::string& generator, long n, std::uint64_t seed) {
        return make_synthetic(generator, n, seed).points.data();
      },
      py::arg("generator"), py::arg("n"), py::arg("seed"));

  m.def(
      "fit",
      [](const std::map<std::string, std::string>& config, const std::vector<double>& data) {
        const Config cfg = make_config(config);
        const Model md = build_model(cfg);
        ChainConfig cc = build_chain(cfg);
        cc.store_measures = false;
        Trace tr;
        {
          py::gil_scoped_release release;
          tr = run_chain(cc, Dataset(PointConfig(1, data)), md);
        }
        py::list k, u, alloc;
        for (const auto& r : tr.records) {
          k.append(r.k);
          u.append(r.u);
          alloc.append(r.allocations);
        }
        return py::dict(py::arg("k") = k, py::arg("u") = u, py::arg("allocations") = alloc,
                        py::arg("algorithm") = tr.algorithm, py::arg("family") = tr.family);
      },
      py::arg("config"), py::arg("data"), "Runs one chain on one-dimensional data; returns the kept trace.");

  m.def(
      "run",
      [](const std::string& command, const std::map<std::string, std::string>& config, int chains) {
        py::gil_scoped_release release;
        return run(command, make_config(config), chains);
      },
      py::arg("command"), py::arg("config") = std::map<std::string, std::string>{}, py::arg("chains") = 1,
      "Same as the command-line tool; returns the exit status.");
}
