#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace gm {

struct NetworkSpec {
  enum class Kind { ab, edge_list } kind = Kind::ab;
  // growth model parameters (kind == ab)
  int m = 5;
  double p = 0.2;
  double q = 0.1;
  // ingested edge list (kind == edge_list)
  std::string path;
  std::int64_t randomize_swaps = 0;  // 0 keeps the file's links as they are
};

// One scan: a network family, a ladder of sizes, N_r seeded realizations
// per size, and the analysis mode.
struct ExperimentConfig {
  NetworkSpec network;
  double alpha = 0.85;
  std::vector<int> sizes;      // ab only; edge_list derives its single size from the file
  int n_realizations = 0;      // 0 = per-size ladder default (100,50,20,10,5 at 2^10..2^14)
  enum class Mode { pagerank_only, full_spectrum } mode = Mode::pagerank_only;
  std::uint64_t seed = 1;
  std::string output_dir;
  int jobs = 1;

  double tol = 1e-12;
  int max_iter = 1000;
  double lambda_floor = 1e-8;
  double bin_width = 0.25;
  double gamma_max = 10.0;
  double vector_gamma_lo = 0.0;   // eigenvector selection window (full_spectrum)
  double vector_gamma_hi = 10.0;
  double bulk_gamma_lo = 3.0;     // bulk-state window for scaling fits
  double bulk_gamma_hi = 4.0;
  int grid_points = 64;

  int realizations_for(int size) const;
  std::string label() const;
  void validate() const;  // throws ConfigError

  // Strict parser: unknown keys anywhere are rejected.
  static ExperimentConfig from_json_text(const std::string& text);
  static ExperimentConfig from_json_file(const std::string& path);
  std::string to_json() const;
};

struct FileEntry {
  std::string path;  // relative to output_dir
  std::uint64_t bytes = 0;
  std::string fnv1a64;
};

struct RunManifest {
  std::string version;
  std::string config_json;
  std::vector<std::array<std::uint64_t, 3>> task_seeds;  // (size, realization, seed)
  std::map<std::string, double> stage_seconds;
  std::vector<FileEntry> outputs;
  std::vector<std::string> failures;
};

// Executes the scan: per (size, realization) generate/ingest the graph,
// build G, run PageRank and (in full_spectrum mode) the dense eigensolve,
// write per-realization products, aggregate across realizations, emit the
// figure CSVs, and write manifest.json.  Identical config and seed give
// byte-identical CSVs regardless of the jobs count.  Task failures are
// recorded in the manifest without stopping the other tasks.
RunManifest run(const ExperimentConfig& config);

enum class FigureTag { fig1, fig2, fig3, fig4, fig5 };

FigureTag figure_tag_from_string(const std::string& name);

// Rebuilds the figure products of one or more completed scan directories.
// Returns the written paths.  Missing upstream products are named in the
// thrown error.
std::vector<std::string> emit_figure(FigureTag tag, const std::vector<std::string>& scan_dirs,
                                     const std::string& out_dir);

std::uint64_t fnv1a64_file(const std::string& path);

}  // namespace gm
