#include <pybind11/complex.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <cstdint>
#include <span>
#include <sstream>

#include "gm/digraph.hpp"
#include "gm/gmatrix.hpp"
#include "gm/locstats.hpp"
#include "gm/pagerank.hpp"
#include "gm/runner.hpp"
#include "gm/spectra.hpp"
#include "gm/version.hpp"

namespace py = pybind11;
using cd = std::complex<double>;

namespace {

py::array_t<double> to_array(const std::vector<double>& v) {
  py::array_t<double> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<cd> to_array(const std::vector<cd>& v) {
  py::array_t<cd> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

py::array_t<int> to_array(const std::vector<int>& v) {
  py::array_t<int> out(static_cast<py::ssize_t>(v.size()));
  std::copy(v.begin(), v.end(), out.mutable_data());
  return out;
}

std::vector<double> from_array(py::array_t<double, py::array::c_style | py::array::forcecast> a) {
  return std::vector<double>(a.data(), a.data() + a.size());
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Google-matrix spectral analysis of directed networks";
  m.attr("__version__") = gm::kVersion;

  py::class_<gm::DirectedGraph>(m, "DirectedGraph")
      .def(py::init([](int n, const std::vector<std::pair<int, int>>& edges) {
             return gm::DirectedGraph::from_edges(n, edges);
           }),
           py::arg("n"), py::arg("edges"))
      .def_readonly("n", &gm::DirectedGraph::n)
      .def_property_readonly("edge_count", &gm::DirectedGraph::edge_count)
      .def("out_neighbors",
           [](const gm::DirectedGraph& g, int v) { return g.out_adj.at(static_cast<std::size_t>(v)); })
      .def("in_neighbors",
           [](const gm::DirectedGraph& g, int v) { return g.in_adj.at(static_cast<std::size_t>(v)); })
      .def("has_edge", &gm::DirectedGraph::has_edge)
      .def("edges",
           [](const gm::DirectedGraph& g) {
             std::vector<std::pair<int, int>> edges;
             for (int u = 0; u < g.n; ++u)
               for (int v : g.out_adj[static_cast<std::size_t>(u)]) edges.emplace_back(u, v);
             return edges;
           })
      .def("to_edge_list",
           [](const gm::DirectedGraph& g) {
             std::ostringstream out;
             gm::write_edge_list(g, out);
             return out.str();
           })
      .def("__eq__", [](const gm::DirectedGraph& a, const gm::DirectedGraph& b) { return a == b; })
      .def("__repr__", [](const gm::DirectedGraph& g) {
        return "DirectedGraph(n=" + std::to_string(g.n) +
               ", edges=" + std::to_string(g.edge_count()) + ")";
      });

  m.def(
      "ab_generate",
      [](int n, int m_links, double p, double q, std::uint64_t seed) {
        return gm::ab_generate({m_links, p, q, n, seed});
      },
      py::arg("n"), py::arg("m") = 5, py::arg("p") = 0.2, py::arg("q") = 0.1, py::arg("seed") = 1);

  m.def(
      "load_edge_list",
      [](const std::string& text) {
        std::istringstream in(text);
        gm::LoadedGraph loaded = gm::load_edge_list(in);
        return py::make_tuple(loaded.graph, loaded.labels);
      },
      py::arg("text"), "Parse an edge-list string; returns (graph, labels).");

  m.def("load_edge_list_file", [](const std::string& path) {
    gm::LoadedGraph loaded = gm::load_edge_list_file(path);
    return py::make_tuple(loaded.graph, loaded.labels);
  });

  m.def(
      "rewire_preserving_degrees",
      [](const gm::DirectedGraph& g, std::int64_t n_swaps, std::uint64_t seed) {
        if (n_swaps < 0) n_swaps = gm::default_rewire_swaps(g);
        gm::RewireResult r = gm::rewire_preserving_degrees(g, n_swaps, seed);
        return py::make_tuple(r.graph, r.accepted, r.exhausted);
      },
      py::arg("graph"), py::arg("n_swaps") = -1, py::arg("seed") = 1);

  m.def("degree_stats", [](const gm::DirectedGraph& g) {
    const gm::DegreeStats stats = gm::degree_stats(g);
    py::dict out;
    out["in_degrees"] = to_array(stats.in_degrees);
    out["out_degrees"] = to_array(stats.out_degrees);
    out["cumulative_in"] = to_array(stats.cumulative_in);
    out["cumulative_out"] = to_array(stats.cumulative_out);
    out["mean_total"] = stats.mean_total;
    out["connectivity"] = stats.connectivity;
    return out;
  });

  m.def(
      "fit_tail",
      [](const std::vector<double>& cumulative, const std::string& model, int k_min, int k_max) {
        const gm::TailModel tail_model =
            model == "algebraic" ? gm::TailModel::algebraic : gm::TailModel::exponential;
        const gm::TailFit fit = k_min < 0 ? gm::fit_tail(cumulative, tail_model)
                                          : gm::fit_tail(cumulative, tail_model, k_min, k_max);
        py::dict out;
        out["model"] = model;
        out["value"] = fit.value;
        out["stderr"] = fit.stderr_;
        out["k_min"] = fit.k_min;
        out["k_max"] = fit.k_max;
        return out;
      },
      py::arg("cumulative"), py::arg("model"), py::arg("k_min") = -1, py::arg("k_max") = -1);

  py::class_<gm::GoogleOperator>(m, "GoogleMatrix")
      .def(py::init([](const gm::DirectedGraph& g, double alpha) {
             return gm::GoogleOperator(gm::StochasticMatrix::from_graph(g), alpha);
           }),
           py::arg("graph"), py::arg("alpha") = 0.85)
      .def_property_readonly("n", &gm::GoogleOperator::n)
      .def_readonly("alpha", &gm::GoogleOperator::alpha)
      .def_property_readonly(
          "dangling", [](const gm::GoogleOperator& op) { return to_array(op.s.dangling); })
      .def("apply",
           [](const gm::GoogleOperator& op,
              py::array_t<double, py::array::c_style | py::array::forcecast> v) {
             return to_array(gm::apply_g(op, from_array(v)));
           })
      .def("dense", [](const gm::GoogleOperator& op) {
        const gm::DenseMatrix dense = gm::materialize_dense(op);
        py::array_t<double> out({dense.n, dense.n});
        std::copy(dense.a.begin(), dense.a.end(), out.mutable_data());
        return out;
      });

  m.def(
      "pagerank",
      [](const gm::GoogleOperator& op, double tol, int max_iter, std::uint64_t seed) {
        const gm::PageRankVector pr = gm::power_iterate(op, tol, max_iter, seed);
        py::dict out;
        out["p"] = to_array(pr.p);
        out["order"] = to_array(pr.order);
        out["iterations"] = pr.iterations_used;
        out["residual"] = pr.final_residual;
        return out;
      },
      py::arg("op"), py::arg("tol") = 1e-12, py::arg("max_iter") = 1000, py::arg("seed") = 1);

  m.def(
      "fit_beta",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> p, int j_min, int j_max) {
        gm::PageRankVector pr;
        pr.p = from_array(p);
        pr.order = gm::rank_order(pr.p);
        const gm::DecayFit fit = gm::fit_beta(pr, j_min, j_max);
        py::dict out;
        out["beta"] = fit.beta;
        out["nu"] = fit.nu;
        out["stderr"] = fit.stderr_;
        out["j_min"] = fit.j_min;
        out["j_max"] = fit.j_max;
        return out;
      },
      py::arg("p"), py::arg("j_min") = 0, py::arg("j_max") = 0);

  m.def(
      "full_spectrum",
      [](const gm::GoogleOperator& op, const std::string& vectors, double gamma_lo,
         double gamma_hi, double lambda_floor, std::uint64_t seed) {
        gm::SpectrumOptions options;
        options.lambda_floor = lambda_floor;
        options.seed = seed;
        if (vectors == "none")
          options.vectors = gm::SpectrumOptions::Vectors::none;
        else if (vectors == "all")
          options.vectors = gm::SpectrumOptions::Vectors::all;
        else if (vectors == "window") {
          options.vectors = gm::SpectrumOptions::Vectors::gamma_window;
          options.gamma_lo = gamma_lo;
          options.gamma_hi = gamma_hi;
        } else {
          throw std::invalid_argument("vectors must be 'none', 'all', or 'window'");
        }
        const gm::SpectrumResult s = gm::analyze_spectrum(gm::materialize_dense(op), options);
        py::dict out;
        out["eigenvalues"] = to_array(s.eigenvalues);
        out["zero_count"] = s.zero_count;
        out["lambda_floor"] = s.lambda_floor;
        py::list pairs;
        for (const auto& pair : s.pairs) {
          py::dict entry;
          entry["eigenvalue"] = pair.lambda;
          entry["psi"] = to_array(pair.psi);
          entry["residual"] = pair.residual;
          entry["verified"] = pair.verified;
          pairs.append(entry);
        }
        out["pairs"] = pairs;
        return out;
      },
      py::arg("op"), py::arg("vectors") = "none", py::arg("gamma_lo") = 0.0,
      py::arg("gamma_hi") = 10.0, py::arg("lambda_floor") = 1e-8, py::arg("seed") = 1);

  m.def("ipr", [](py::array a) -> double {
    if (py::isinstance<py::array_t<cd>>(a)) {
      auto arr = py::cast<py::array_t<cd, py::array::c_style | py::array::forcecast>>(a);
      std::vector<cd> v(arr.data(), arr.data() + arr.size());
      return gm::ipr(std::span<const cd>(v));
    }
    auto arr = py::cast<py::array_t<double, py::array::c_style | py::array::forcecast>>(a);
    std::vector<double> v(arr.data(), arr.data() + arr.size());
    return gm::ipr(std::span<const double>(v));
  });

  m.def("gamma_of", [](cd lambda) { return gm::gamma_of(lambda); });

  m.def(
      "density_w",
      [](const std::vector<cd>& eigenvalues, double bin_width, double gamma_max,
         double lambda_floor) {
        const gm::GammaDensity d = gm::density_w(eigenvalues, bin_width, gamma_max, lambda_floor);
        py::dict out;
        out["w"] = to_array(d.w);
        out["bin_width"] = d.bin_width;
        out["gamma_max"] = d.gamma_max;
        out["excluded_zero_states"] = d.excluded_zero_states;
        out["samples"] = d.samples;
        return out;
      },
      py::arg("eigenvalues"), py::arg("bin_width") = 0.25, py::arg("gamma_max") = 10.0,
      py::arg("lambda_floor") = 1e-8);

  m.def(
      "scaling_fit",
      [](const std::vector<double>& sizes, const std::vector<double>& xis) {
        const gm::ScalingFit fit = gm::scaling_fit(sizes, xis);
        py::dict out;
        out["mu"] = fit.mu;
        out["intercept"] = fit.intercept;
        out["stderr"] = fit.stderr_;
        return out;
      },
      py::arg("sizes"), py::arg("xis"));

  m.def(
      "run_scan",
      [](const std::string& config_json) {
        const gm::RunManifest manifest =
            gm::run(gm::ExperimentConfig::from_json_text(config_json));
        py::dict out;
        out["version"] = manifest.version;
        out["failures"] = manifest.failures;
        py::list files;
        for (const auto& entry : manifest.outputs) files.append(entry.path);
        out["outputs"] = files;
        return out;
      },
      py::arg("config_json"), "Run a scan from a JSON config string.");
}
