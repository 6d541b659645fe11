#include <complex>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <span>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gm/digraph.hpp"
#include "gm/errors.hpp"
#include "gm/gmatrix.hpp"
#include "gm/locstats.hpp"
#include "gm/pagerank.hpp"
#include "gm/runner.hpp"
#include "gm/spectra.hpp"
#include "gm/version.hpp"

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;

gm::DirectedGraph load_input(const std::string& path) {
  return gm::load_edge_list_file(path).graph;
}

int cmd_generate(const gm::AbParams& params, const std::string& out_path,
                 const std::string& degrees_path) {
  const gm::DirectedGraph graph = gm::ab_generate(params);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw gm::ConfigError("cannot open for writing: " + out_path);
  gm::write_edge_list(graph, out);
  const gm::DegreeStats stats = gm::degree_stats(graph);
  if (!degrees_path.empty()) gm::write_degree_csv(stats, degrees_path);
  std::cout << "nodes " << graph.n << " edges " << graph.edge_count() << " connectivity "
            << stats.connectivity << "\n";
  return kExitOk;
}

int cmd_pagerank(const std::string& input, double alpha, double tol, int max_iter,
                 std::uint64_t seed, const std::string& out_path,
                 const std::string& cumulative_path, int grid_points) {
  const gm::DirectedGraph graph = load_input(input);
  gm::GoogleOperator op(gm::StochasticMatrix::from_graph(graph), alpha);
  const gm::PageRankVector pr = gm::power_iterate(op, tol, max_iter, seed);
  gm::write_pagerank_csv(pr, out_path);
  if (!cumulative_path.empty()) {
    const double lo = *std::min_element(pr.p.begin(), pr.p.end());
    const double hi = *std::max_element(pr.p.begin(), pr.p.end());
    const auto table = gm::cumulative_pagerank(pr, gm::log_grid(lo, lo < hi ? hi : 2 * lo, grid_points));
    gm::write_cumulative_csv(table, graph.n, cumulative_path);
  }
  std::cout << "converged in " << pr.iterations_used << " iterations, residual "
            << pr.final_residual << ", ipr " << gm::ipr(std::span<const double>(pr.p)) << "\n";
  return kExitOk;
}

int cmd_spectrum(const std::string& input, double alpha, std::uint64_t seed,
                 const std::string& out_path, const std::string& vectors, double lo, double hi,
                 double floor, const std::string& dump_g) {
  const gm::DirectedGraph graph = load_input(input);
  gm::GoogleOperator op(gm::StochasticMatrix::from_graph(graph), alpha);
  const gm::DenseMatrix dense = gm::materialize_dense(op);
  if (!dump_g.empty()) {
    std::ofstream out(dump_g, std::ios::binary);
    if (!out) throw gm::ConfigError("cannot open for writing: " + dump_g);
    gm::write_dense_csv(dense, out);
  }
  gm::SpectrumOptions options;
  options.lambda_floor = floor;
  options.seed = seed;
  if (vectors == "none")
    options.vectors = gm::SpectrumOptions::Vectors::none;
  else if (vectors == "all")
    options.vectors = gm::SpectrumOptions::Vectors::all;
  else if (vectors == "window") {
    options.vectors = gm::SpectrumOptions::Vectors::gamma_window;
    options.gamma_lo = lo;
    options.gamma_hi = hi;
  } else {
    throw gm::ConfigError("--vectors must be none, all, or window");
  }
  const gm::SpectrumResult spectrum = gm::analyze_spectrum(dense, options);
  gm::write_spectrum_csv(spectrum, out_path);
  const gm::GapEstimate gap = gm::estimate_gap(spectrum, alpha);
  std::cout << "n " << graph.n << " zero_states " << spectrum.zero_count << " gamma_c "
            << gap.gamma_c << " (gamma_alpha " << gap.gamma_alpha << ")\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  if (openblas_set_num_threads) openblas_set_num_threads(1);

  CLI::App app{"Google-matrix spectral analysis of directed networks"};
  app.set_version_flag("--version", std::string(gm::kVersion));
  app.require_subcommand(1);

  // generate
  auto* generate = app.add_subcommand("generate", "generate a directed growth-model network");
  gm::AbParams params;
  std::string gen_out, gen_degrees;
  generate->add_option("--n", params.n_target, "node count")->required();
  generate->add_option("--m", params.m, "links per step");
  generate->add_option("--p", params.p, "add-links probability");
  generate->add_option("--q", params.q, "rewire probability");
  generate->add_option("--seed", params.seed, "RNG seed");
  generate->add_option("--out", gen_out, "edge list output path")->required();
  generate->add_option("--degrees", gen_degrees, "degree statistics CSV path");

  // pagerank
  auto* pagerank = app.add_subcommand("pagerank", "stationary vector by power iteration");
  std::string pr_input, pr_out, pr_cumulative;
  double pr_alpha = 0.85, pr_tol = 1e-12;
  int pr_max_iter = 1000, pr_grid = 64;
  std::uint64_t pr_seed = 1;
  pagerank->add_option("--input", pr_input, "edge list path")->required();
  pagerank->add_option("--alpha", pr_alpha, "damping factor");
  pagerank->add_option("--tol", pr_tol, "L1 convergence tolerance");
  pagerank->add_option("--max-iter", pr_max_iter, "iteration cap");
  pagerank->add_option("--seed", pr_seed, "start-vector seed");
  pagerank->add_option("--out", pr_out, "rank CSV path")->required();
  pagerank->add_option("--cumulative", pr_cumulative, "cumulative distribution CSV path");
  pagerank->add_option("--grid-points", pr_grid, "cumulative grid size");

  // spectrum
  auto* spectrum = app.add_subcommand("spectrum", "full complex spectrum of the dense matrix");
  std::string sp_input, sp_out, sp_vectors = "all", sp_dump;
  double sp_alpha = 0.85, sp_lo = 0.0, sp_hi = 10.0, sp_floor = 1e-8;
  std::uint64_t sp_seed = 1;
  spectrum->add_option("--input", sp_input, "edge list path")->required();
  spectrum->add_option("--alpha", sp_alpha, "damping factor");
  spectrum->add_option("--seed", sp_seed, "eigenvector start seed");
  spectrum->add_option("--out", sp_out, "spectrum CSV path")->required();
  spectrum->add_option("--vectors", sp_vectors, "eigenvectors: none, all, or window");
  spectrum->add_option("--gamma-lo", sp_lo, "window lower edge");
  spectrum->add_option("--gamma-hi", sp_hi, "window upper edge");
  spectrum->add_option("--floor", sp_floor, "|lambda| floor separating the degenerate subspace");
  spectrum->add_option("--dump-g", sp_dump, "write the dense matrix as CSV");

  // scan
  auto* scan = app.add_subcommand("scan", "seeded multi-size multi-realization experiment");
  std::string scan_config, scan_out;
  int scan_jobs = 0;
  std::uint64_t scan_seed = 0;
  bool scan_quiet = false;
  scan->add_option("--config", scan_config, "experiment config (JSON)")->required();
  scan->add_option("--out", scan_out, "override output_dir");
  scan->add_option("--jobs", scan_jobs, "parallel realizations");
  auto* scan_seed_opt = scan->add_option("--seed", scan_seed, "override base seed");
  scan->add_flag("--quiet", scan_quiet, "suppress progress output");

  // figure
  auto* figure = app.add_subcommand("figure", "rebuild figure CSVs from scan outputs");
  std::string fig_tag, fig_out;
  std::vector<std::string> fig_scans;
  figure->add_option("--tag", fig_tag, "fig1..fig5")->required();
  figure->add_option("--scan", fig_scans, "scan output directory (repeatable)")->required();
  figure->add_option("--out", fig_out, "output directory for the CSVs")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*generate) return cmd_generate(params, gen_out, gen_degrees);
    if (*pagerank)
      return cmd_pagerank(pr_input, pr_alpha, pr_tol, pr_max_iter, pr_seed, pr_out, pr_cumulative,
                          pr_grid);
    if (*spectrum)
      return cmd_spectrum(sp_input, sp_alpha, sp_seed, sp_out, sp_vectors, sp_lo, sp_hi, sp_floor,
                          sp_dump);
    if (*scan) {
      gm::ExperimentConfig config = gm::ExperimentConfig::from_json_file(scan_config);
      if (!scan_out.empty()) config.output_dir = scan_out;
      if (scan_jobs > 0) config.jobs = scan_jobs;
      if (scan_seed_opt->count() > 0) config.seed = scan_seed;
      config.validate();
      const gm::RunManifest manifest = gm::run(config);
      if (!scan_quiet) {
        std::cout << "wrote " << manifest.outputs.size() << " files to " << config.output_dir
                  << " in " << manifest.stage_seconds.at("total") << " s\n";
        for (const auto& failure : manifest.failures) std::cerr << "failure: " << failure << "\n";
      }
      return manifest.failures.empty() ? kExitOk : kExitNumerical;
    }
    if (*figure) {
      const auto files =
          gm::emit_figure(gm::figure_tag_from_string(fig_tag), fig_scans, fig_out);
      for (const auto& f : files) std::cout << f << "\n";
      return kExitOk;
    }
  } catch (const gm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}
