#include "gm/runner.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "gm/csv.hpp"
#include "gm/digraph.hpp"
#include "gm/errors.hpp"
#include "gm/gmatrix.hpp"
#include "gm/locstats.hpp"
#include "gm/pagerank.hpp"
#include "gm/rng.hpp"
#include "gm/spectra.hpp"
#include "gm/version.hpp"

extern "C" void openblas_set_num_threads(int) __attribute__((weak));

namespace gm {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (const auto& [key, value] : obj.items())
    if (!allowed.count(key))
      throw ConfigError("config: unknown key \"" + key + "\" in " + where);
}

std::string trimmed_double(double v) { return format_double(v); }

// Everything one (size, realization) task contributes to aggregation.
struct TaskResult {
  bool ok = false;
  std::string error;
  int size = 0;
  int realization = 0;
  std::uint64_t seed = 0;

  std::int64_t edges = 0;
  double connectivity = 0.0;
  double mean_total = 0.0;
  double in_tail_algebraic = std::nan("");
  double in_tail_exponential = std::nan("");

  double pr_xi = 0.0;
  int pr_iterations = 0;
  double pr_residual = 0.0;
  double beta = std::nan("");
  double beta_stderr = std::nan("");

  // full_spectrum extras
  bool has_spectrum = false;
  double zero_fraction = std::nan("");
  double gamma_c = std::nan("");
  double bulk_xi = std::nan("");
  int bulk_count = 0;
  std::vector<std::int64_t> w_counts;      // histogram of gamma
  std::int64_t w_samples = 0;
  std::vector<double> xi_bin_sums;         // per gamma bin
  std::vector<int> xi_bin_counts;

  double t_generate = 0.0, t_pagerank = 0.0, t_spectrum = 0.0, t_stats = 0.0, t_io = 0.0;
};

struct SizeAggregate {
  int size = 0;
  int tasks_ok = 0;
  double pr_xi_mean = std::nan(""), pr_xi_se = std::nan("");
  double beta_mean = std::nan("");
  double bulk_xi_mean = std::nan(""), bulk_xi_se = std::nan("");
  int bulk_tasks = 0;
  double zero_fraction_mean = std::nan("");
  double gamma_c_mean = std::nan(""), gamma_c_min = std::nan("");
  std::vector<double> w;             // pooled density
  std::vector<std::int64_t> w_counts;
  std::int64_t w_samples = 0;
  std::vector<double> xi_curve;      // pooled per-bin mean
  std::vector<int> xi_counts;
};

struct MeanSe {
  double mean = std::nan("");
  double se = std::nan("");
  int n = 0;
};

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  out.n = static_cast<int>(xs.size());
  if (xs.empty()) return out;
  double s = 0.0;
  for (double x : xs) s += x;
  out.mean = s / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - out.mean) * (x - out.mean);
    out.se = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
  } else {
    out.se = 0.0;
  }
  return out;
}

std::string json_or_blank(double v) { return std::isnan(v) ? std::string() : format_double(v); }

void set_if_finite(json& obj, const char* key, double v) {
  if (!std::isnan(v)) obj[key] = v;
}

// --- tiny reader for our own CSV products -------------------------------

std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing input: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    rows.push_back(std::move(fields));
  }
  return rows;
}

}  // namespace

int ExperimentConfig::realizations_for(int size) const {
  if (n_realizations > 0) return n_realizations;
  if (size <= (1 << 10)) return 100;
  if (size <= (1 << 11)) return 50;
  if (size <= (1 << 12)) return 20;
  if (size <= (1 << 13)) return 10;
  return 5;
}

std::string ExperimentConfig::label() const {
  if (network.kind == NetworkSpec::Kind::ab) {
    std::ostringstream name;
    name << "ab_q" << trimmed_double(network.q);
    return name.str();
  }
  return "edgelist_" + fs::path(network.path).stem().string();
}

void ExperimentConfig::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("config: alpha must lie in (0,1)");
  if (output_dir.empty()) throw ConfigError("config: output_dir is required");
  if (n_realizations < 0) throw ConfigError("config: n_realizations must be >= 1");
  if (jobs < 1) throw ConfigError("config: jobs must be >= 1");
  if (!(tol > 0.0)) throw ConfigError("config: tol must be positive");
  if (max_iter < 1) throw ConfigError("config: max_iter must be >= 1");
  if (!(bin_width > 0.0) || !(gamma_max > 0.0))
    throw ConfigError("config: bin_width and gamma_max must be positive");
  if (grid_points < 2) throw ConfigError("config: grid_points must be >= 2");
  if (network.kind == NetworkSpec::Kind::ab) {
    if (sizes.empty()) throw ConfigError("config: ab network needs a sizes list");
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      if (sizes[i] < network.m)
        throw ConfigError("config: size " + std::to_string(sizes[i]) + " below m");
      if (i > 0 && sizes[i] <= sizes[i - 1])
        throw ConfigError("config: sizes must be strictly increasing");
    }
    AbParams probe{network.m, network.p, network.q, sizes.front(), 0};
    try {
      probe.validate();
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
    if (mode == Mode::full_spectrum && sizes.back() > dense_cap())
      throw ConfigError("config: full_spectrum mode needs every size <= dense cap " +
                        std::to_string(dense_cap()));
  } else {
    if (network.path.empty()) throw ConfigError("config: edge_list network needs a path");
    if (!sizes.empty()) throw ConfigError("config: sizes apply only to ab networks");
    if (network.randomize_swaps < 0) throw ConfigError("config: randomize_swaps must be >= 0");
    if (n_realizations > 1 && network.randomize_swaps == 0)
      throw ConfigError("config: several realizations of an edge list need randomize_swaps > 0");
  }
}

ExperimentConfig ExperimentConfig::from_json_text(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!root.is_object()) throw ConfigError("config: top level must be an object");
  check_keys(root,
             {"network", "alpha", "sizes", "n_realizations", "mode", "seed", "output_dir",
              "jobs", "tol", "max_iter", "lambda_floor", "bin_width", "gamma_max",
              "vector_gamma", "bulk_gamma", "grid_points"},
             "top level");

  ExperimentConfig config;
  try {
    if (!root.contains("network")) throw ConfigError("config: network is required");
    const json& net = root.at("network");
    if (!net.is_object() || !net.contains("type"))
      throw ConfigError("config: network needs a type");
    const std::string type = net.at("type").get<std::string>();
    if (type == "ab") {
      check_keys(net, {"type", "m", "p", "q"}, "network");
      config.network.kind = NetworkSpec::Kind::ab;
      if (net.contains("m")) config.network.m = net.at("m").get<int>();
      if (net.contains("p")) config.network.p = net.at("p").get<double>();
      if (net.contains("q")) config.network.q = net.at("q").get<double>();
    } else if (type == "edge_list") {
      check_keys(net, {"type", "path", "randomize_swaps"}, "network");
      config.network.kind = NetworkSpec::Kind::edge_list;
      if (net.contains("path")) config.network.path = net.at("path").get<std::string>();
      if (net.contains("randomize_swaps"))
        config.network.randomize_swaps = net.at("randomize_swaps").get<std::int64_t>();
    } else {
      throw ConfigError("config: network type must be \"ab\" or \"edge_list\"");
    }

    if (root.contains("alpha")) config.alpha = root.at("alpha").get<double>();
    if (root.contains("sizes")) config.sizes = root.at("sizes").get<std::vector<int>>();
    if (root.contains("n_realizations"))
      config.n_realizations = root.at("n_realizations").get<int>();
    if (root.contains("mode")) {
      const std::string mode = root.at("mode").get<std::string>();
      if (mode == "pagerank_only")
        config.mode = Mode::pagerank_only;
      else if (mode == "full_spectrum")
        config.mode = Mode::full_spectrum;
      else
        throw ConfigError("config: mode must be \"pagerank_only\" or \"full_spectrum\"");
    }
    if (root.contains("seed")) config.seed = root.at("seed").get<std::uint64_t>();
    if (root.contains("output_dir")) config.output_dir = root.at("output_dir").get<std::string>();
    if (root.contains("jobs")) config.jobs = root.at("jobs").get<int>();
    if (root.contains("tol")) config.tol = root.at("tol").get<double>();
    if (root.contains("max_iter")) config.max_iter = root.at("max_iter").get<int>();
    if (root.contains("lambda_floor")) config.lambda_floor = root.at("lambda_floor").get<double>();
    if (root.contains("bin_width")) config.bin_width = root.at("bin_width").get<double>();
    if (root.contains("gamma_max")) config.gamma_max = root.at("gamma_max").get<double>();
    if (root.contains("vector_gamma")) {
      const auto window = root.at("vector_gamma").get<std::vector<double>>();
      if (window.size() != 2 || window[0] > window[1])
        throw ConfigError("config: vector_gamma must be [lo, hi]");
      config.vector_gamma_lo = window[0];
      config.vector_gamma_hi = window[1];
    }
    if (root.contains("bulk_gamma")) {
      const auto window = root.at("bulk_gamma").get<std::vector<double>>();
      if (window.size() != 2 || window[0] > window[1])
        throw ConfigError("config: bulk_gamma must be [lo, hi]");
      config.bulk_gamma_lo = window[0];
      config.bulk_gamma_hi = window[1];
    }
    if (root.contains("grid_points")) config.grid_points = root.at("grid_points").get<int>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  config.validate();
  return config;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return from_json_text(text.str());
}

std::string ExperimentConfig::to_json() const {
  json root;
  if (network.kind == NetworkSpec::Kind::ab) {
    root["network"] = {{"type", "ab"}, {"m", network.m}, {"p", network.p}, {"q", network.q}};
    root["sizes"] = sizes;
  } else {
    root["network"] = {{"type", "edge_list"},
                       {"path", network.path},
                       {"randomize_swaps", network.randomize_swaps}};
  }
  root["alpha"] = alpha;
  root["n_realizations"] = n_realizations;
  root["mode"] = mode == Mode::pagerank_only ? "pagerank_only" : "full_spectrum";
  root["seed"] = seed;
  root["output_dir"] = output_dir;
  // jobs is an execution knob, not part of the experiment identity; outputs
  // are independent of it, so the echo omits it
  root["tol"] = tol;
  root["max_iter"] = max_iter;
  root["lambda_floor"] = lambda_floor;
  root["bin_width"] = bin_width;
  root["gamma_max"] = gamma_max;
  root["vector_gamma"] = {vector_gamma_lo, vector_gamma_hi};
  root["bulk_gamma"] = {bulk_gamma_lo, bulk_gamma_hi};
  root["grid_points"] = grid_points;
  return root.dump(2);
}

std::uint64_t fnv1a64_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot checksum missing file: " + path);
  std::uint64_t h = 1469598103934665603ULL;
  char buf[1 << 14];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
    if (!in) break;
  }
  return h;
}

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf);
}

// Runs one (size, realization) pipeline and writes its raw products.
TaskResult run_task(const ExperimentConfig& config, const DirectedGraph* base_graph, int size,
                    int realization, std::uint64_t task_seed, const fs::path& task_dir) {
  TaskResult result;
  result.size = size;
  result.realization = realization;
  result.seed = task_seed;

  auto t0 = std::chrono::steady_clock::now();
  DirectedGraph graph;
  if (config.network.kind == NetworkSpec::Kind::ab) {
    AbParams params{config.network.m, config.network.p, config.network.q, size,
                    derive_seed(task_seed, 0)};
    graph = ab_generate(params);
  } else if (config.network.randomize_swaps > 0) {
    graph = rewire_preserving_degrees(*base_graph, config.network.randomize_swaps,
                                      derive_seed(task_seed, 0))
                .graph;
  } else {
    graph = *base_graph;
  }
  result.t_generate = elapsed_since(t0);

  t0 = std::chrono::steady_clock::now();
  const DegreeStats degrees = degree_stats(graph);
  result.edges = graph.edge_count();
  result.connectivity = degrees.connectivity;
  result.mean_total = degrees.mean_total;
  try {
    result.in_tail_algebraic = fit_tail(degrees.cumulative_in, TailModel::algebraic).value;
  } catch (const std::exception&) {
  }
  try {
    result.in_tail_exponential = fit_tail(degrees.cumulative_in, TailModel::exponential).value;
  } catch (const std::exception&) {
  }
  result.t_stats += elapsed_since(t0);

  GoogleOperator op(StochasticMatrix::from_graph(graph), config.alpha);

  t0 = std::chrono::steady_clock::now();
  const PageRankVector pr = power_iterate(op, config.tol, config.max_iter, derive_seed(task_seed, 1));
  result.t_pagerank = elapsed_since(t0);

  t0 = std::chrono::steady_clock::now();
  result.pr_xi = ipr(std::span<const double>(pr.p));
  result.pr_iterations = pr.iterations_used;
  result.pr_residual = pr.final_residual;
  try {
    const DecayFit fit = fit_beta(pr);
    result.beta = fit.beta;
    result.beta_stderr = fit.stderr_;
  } catch (const std::exception&) {
  }
  result.t_stats += elapsed_since(t0);

  t0 = std::chrono::steady_clock::now();
  write_pagerank_csv(pr, (task_dir / "pagerank.csv").string());
  write_degree_csv(degrees, (task_dir / "degrees.csv").string());
  {
    double lo = *std::min_element(pr.p.begin(), pr.p.end());
    double hi = *std::max_element(pr.p.begin(), pr.p.end());
    if (!(lo < hi)) hi = lo * 2.0;
    const auto table = cumulative_pagerank(pr, log_grid(lo, hi, config.grid_points));
    write_cumulative_csv(table, graph.n, (task_dir / "cumulative.csv").string());
  }
  result.t_io += elapsed_since(t0);

  if (config.mode == ExperimentConfig::Mode::full_spectrum) {
    t0 = std::chrono::steady_clock::now();
    const DenseMatrix dense = materialize_dense(op);
    SpectrumOptions options;
    options.lambda_floor = config.lambda_floor;
    options.vectors = SpectrumOptions::Vectors::gamma_window;
    options.gamma_lo = config.vector_gamma_lo;
    options.gamma_hi = config.vector_gamma_hi;
    options.seed = derive_seed(task_seed, 2);
    const SpectrumResult spectrum = analyze_spectrum(dense, options);
    result.t_spectrum = elapsed_since(t0);

    t0 = std::chrono::steady_clock::now();
    result.has_spectrum = true;
    result.zero_fraction = static_cast<double>(spectrum.zero_count) / static_cast<double>(graph.n);
    result.gamma_c = estimate_gap(spectrum, config.alpha).gamma_c;

    const GammaDensity density =
        density_w(spectrum.eigenvalues, config.bin_width, config.gamma_max, config.lambda_floor);
    result.w_counts = density.counts;
    result.w_samples = density.samples;

    const IprCurve curve = ipr_vs_gamma(spectrum, config.bin_width, config.gamma_max);
    result.xi_bin_counts = curve.count;
    result.xi_bin_sums.resize(curve.mean_xi.size());
    for (std::size_t b = 0; b < curve.mean_xi.size(); ++b)
      result.xi_bin_sums[b] = curve.mean_xi[b] * static_cast<double>(curve.count[b]);

    // bulk window: mean xi and the rank-indexed mean |psi|^2 profile
    double bulk_sum = 0.0;
    std::vector<double> profile(static_cast<std::size_t>(graph.n), 0.0);
    for (const auto& pair : spectrum.pairs) {
      if (!pair.verified) continue;
      const double gamma = std::max(0.0, -2.0 * std::log(std::abs(pair.lambda)));
      if (gamma < config.bulk_gamma_lo || gamma > config.bulk_gamma_hi) continue;
      bulk_sum += ipr(std::span<const std::complex<double>>(pair.psi));
      ++result.bulk_count;
      for (int r = 0; r < graph.n; ++r)
        profile[static_cast<std::size_t>(r)] +=
            std::norm(pair.psi[static_cast<std::size_t>(pr.order[static_cast<std::size_t>(r)])]);
    }
    if (result.bulk_count > 0) result.bulk_xi = bulk_sum / static_cast<double>(result.bulk_count);
    result.t_stats += elapsed_since(t0);

    t0 = std::chrono::steady_clock::now();
    write_spectrum_csv(spectrum, (task_dir / "spectrum.csv").string());
    if (result.bulk_count > 0) {
      CsvWriter csv((task_dir / "bulk_profile.csv").string());
      csv.row({"rank", "psi2_mean"});
      for (int r = 0; r < graph.n; ++r)
        csv.row({CsvWriter::num(static_cast<std::int64_t>(r + 1)),
                 CsvWriter::num(profile[static_cast<std::size_t>(r)] /
                                static_cast<double>(result.bulk_count))});
    }
    result.t_io += elapsed_since(t0);
  }

  result.ok = true;
  return result;
}

}  // namespace

RunManifest run(const ExperimentConfig& config) {
  config.validate();
  const auto wall0 = std::chrono::steady_clock::now();

  // Deterministic numerics regardless of the jobs count: the realization
  // level is the only parallelism.
  setenv("OPENBLAS_NUM_THREADS", "1", 1);
  setenv("OMP_NUM_THREADS", "1", 1);
  if (openblas_set_num_threads) openblas_set_num_threads(1);

  const fs::path out_root(config.output_dir);
  fs::create_directories(out_root / "raw");
  fs::create_directories(out_root / "summary");
  fs::create_directories(out_root / "figures");

  // edge_list graphs load once; sizes collapse to the file's node count
  DirectedGraph base_graph;
  std::vector<int> sizes = config.sizes;
  if (config.network.kind == NetworkSpec::Kind::edge_list) {
    base_graph = load_edge_list_file(config.network.path).graph;
    if (config.mode == ExperimentConfig::Mode::full_spectrum && base_graph.n > dense_cap())
      throw ConfigError("config: edge list has " + std::to_string(base_graph.n) +
                        " nodes, above the dense cap " + std::to_string(dense_cap()));
    sizes = {base_graph.n};
  }

  struct TaskSpec {
    int size_index;
    int size;
    int realization;
    std::uint64_t seed;
  };
  std::vector<TaskSpec> tasks;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    const int n_r = config.realizations_for(sizes[si]);
    for (int r = 0; r < n_r; ++r) {
      const std::uint64_t task_seed = derive_seed(config.seed, tasks.size());
      tasks.push_back({static_cast<int>(si), sizes[si], r, task_seed});
    }
  }

  // task directories made upfront, workers only write files
  for (const auto& task : tasks)
    fs::create_directories(out_root / "raw" / ("N" + std::to_string(task.size)) /
                           ("r" + std::to_string(task.realization)));

  std::vector<TaskResult> results(tasks.size());
  std::atomic<std::size_t> next{0};
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(tasks.size())));
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const TaskSpec& task = tasks[i];
      const fs::path task_dir = out_root / "raw" / ("N" + std::to_string(task.size)) /
                                ("r" + std::to_string(task.realization));
      try {
        results[i] = run_task(config, &base_graph, task.size, task.realization, task.seed, task_dir);
      } catch (const std::exception& e) {
        results[i].ok = false;
        results[i].size = task.size;
        results[i].realization = task.realization;
        results[i].seed = task.seed;
        results[i].error = e.what();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  RunManifest manifest;
  manifest.version = kVersion;
  manifest.config_json = config.to_json();
  for (const auto& task : tasks)
    manifest.task_seeds.push_back({static_cast<std::uint64_t>(task.size),
                                   static_cast<std::uint64_t>(task.realization), task.seed});
  for (const auto& result : results)
    if (!result.ok)
      manifest.failures.push_back("size=" + std::to_string(result.size) +
                                  " realization=" + std::to_string(result.realization) + ": " +
                                  result.error);

  // ---- aggregate per size (results are already in deterministic order) ----
  const auto agg0 = std::chrono::steady_clock::now();
  const int bins = static_cast<int>(std::ceil(config.gamma_max / config.bin_width));
  std::vector<SizeAggregate> aggregates;
  for (std::size_t si = 0; si < sizes.size(); ++si) {
    SizeAggregate agg;
    agg.size = sizes[si];
    std::vector<double> pr_xis, betas, zero_fracs, gamma_cs, bulk_xis;
    agg.w_counts.assign(static_cast<std::size_t>(bins), 0);
    agg.xi_curve.assign(static_cast<std::size_t>(bins), 0.0);
    agg.xi_counts.assign(static_cast<std::size_t>(bins), 0);
    for (const auto& result : results) {
      if (!result.ok || result.size != sizes[si]) continue;
      ++agg.tasks_ok;
      pr_xis.push_back(result.pr_xi);
      if (!std::isnan(result.beta)) betas.push_back(result.beta);
      if (result.has_spectrum) {
        zero_fracs.push_back(result.zero_fraction);
        if (!std::isnan(result.gamma_c)) gamma_cs.push_back(result.gamma_c);
        if (result.bulk_count > 0) bulk_xis.push_back(result.bulk_xi);
        for (int b = 0; b < bins; ++b) {
          agg.w_counts[static_cast<std::size_t>(b)] += result.w_counts[static_cast<std::size_t>(b)];
          agg.xi_curve[static_cast<std::size_t>(b)] += result.xi_bin_sums[static_cast<std::size_t>(b)];
          agg.xi_counts[static_cast<std::size_t>(b)] += result.xi_bin_counts[static_cast<std::size_t>(b)];
        }
        agg.w_samples += result.w_samples;
      }
    }
    const MeanSe pr_stat = mean_se(pr_xis);
    agg.pr_xi_mean = pr_stat.mean;
    agg.pr_xi_se = pr_stat.se;
    agg.beta_mean = mean_se(betas).mean;
    const MeanSe bulk_stat = mean_se(bulk_xis);
    agg.bulk_xi_mean = bulk_stat.mean;
    agg.bulk_xi_se = bulk_stat.se;
    agg.bulk_tasks = static_cast<int>(bulk_xis.size());
    agg.zero_fraction_mean = mean_se(zero_fracs).mean;
    agg.gamma_c_mean = mean_se(gamma_cs).mean;
    if (!gamma_cs.empty()) agg.gamma_c_min = *std::min_element(gamma_cs.begin(), gamma_cs.end());
    if (agg.w_samples > 0) {
      agg.w.resize(static_cast<std::size_t>(bins));
      for (int b = 0; b < bins; ++b)
        agg.w[static_cast<std::size_t>(b)] = static_cast<double>(agg.w_counts[static_cast<std::size_t>(b)]) /
                                             (static_cast<double>(agg.w_samples) * config.bin_width);
    }
    for (int b = 0; b < bins; ++b)
      if (agg.xi_counts[static_cast<std::size_t>(b)] > 0)
        agg.xi_curve[static_cast<std::size_t>(b)] /= static_cast<double>(agg.xi_counts[static_cast<std::size_t>(b)]);
    aggregates.push_back(std::move(agg));
  }

  // cross-size scaling of the PageRank and bulk IPRs
  json scaling = json::object();
  {
    std::vector<double> ns, pr_xi, bulk_ns, bulk_xi;
    for (const auto& agg : aggregates) {
      if (agg.tasks_ok == 0) continue;
      ns.push_back(static_cast<double>(agg.size));
      pr_xi.push_back(agg.pr_xi_mean);
      if (agg.bulk_tasks > 0 && !std::isnan(agg.bulk_xi_mean)) {
        bulk_ns.push_back(static_cast<double>(agg.size));
        bulk_xi.push_back(agg.bulk_xi_mean);
      }
    }
    if (ns.size() >= 3) {
      const ScalingFit fit = scaling_fit(ns, pr_xi);
      scaling["pagerank"] = {{"mu", fit.mu}, {"stderr", fit.stderr_}, {"intercept", fit.intercept}};
    }
    if (bulk_ns.size() >= 3) {
      const ScalingFit fit = scaling_fit(bulk_ns, bulk_xi);
      scaling["bulk"] = {{"mu", fit.mu}, {"stderr", fit.stderr_}, {"intercept", fit.intercept}};
    }
  }

  // delocalization edge from the pooled per-size IPR curves
  std::optional<double> gamma_d;
  {
    std::vector<IprCurve> curves;
    std::vector<double> curve_sizes;
    for (const auto& agg : aggregates) {
      if (agg.w_samples == 0) continue;
      IprCurve curve;
      curve.bin_width = config.bin_width;
      curve.gamma_max = config.gamma_max;
      curve.mean_xi = agg.xi_curve;
      curve.count = agg.xi_counts;
      curves.push_back(std::move(curve));
      curve_sizes.push_back(static_cast<double>(agg.size));
    }
    if (curves.size() >= 3) gamma_d = delocalization_edge(curves, curve_sizes);
  }

  // ---- summary products ----
  {
    CsvWriter csv((out_root / "summary" / "stats.csv").string());
    csv.row({"size", "realization", "seed", "edges", "connectivity", "mean_total", "pr_xi",
             "pr_iterations", "pr_residual", "beta", "beta_stderr", "zero_fraction", "gamma_c",
             "bulk_xi", "bulk_count", "ok"});
    for (const auto& r : results) {
      csv.row({CsvWriter::num(r.size), CsvWriter::num(r.realization), hex64(r.seed),
               CsvWriter::num(static_cast<std::int64_t>(r.edges)), json_or_blank(r.connectivity),
               json_or_blank(r.mean_total), json_or_blank(r.pr_xi), CsvWriter::num(r.pr_iterations),
               json_or_blank(r.pr_residual), json_or_blank(r.beta), json_or_blank(r.beta_stderr),
               json_or_blank(r.zero_fraction), json_or_blank(r.gamma_c), json_or_blank(r.bulk_xi),
               CsvWriter::num(r.bulk_count), r.ok ? "1" : "0"});
    }
  }

  json summary;
  summary["label"] = config.label();
  summary["version"] = kVersion;
  summary["config"] = json::parse(config.to_json());
  summary["sizes"] = sizes;
  summary["binning"] = {{"bin_width", config.bin_width}, {"gamma_max", config.gamma_max}};
  summary["mode"] =
      config.mode == ExperimentConfig::Mode::pagerank_only ? "pagerank_only" : "full_spectrum";
  json per_size = json::array();
  for (const auto& agg : aggregates) {
    json s;
    s["size"] = agg.size;
    s["tasks_ok"] = agg.tasks_ok;
    set_if_finite(s, "pr_xi_mean", agg.pr_xi_mean);
    set_if_finite(s, "pr_xi_se", agg.pr_xi_se);
    set_if_finite(s, "beta_mean", agg.beta_mean);
    set_if_finite(s, "bulk_xi_mean", agg.bulk_xi_mean);
    set_if_finite(s, "bulk_xi_se", agg.bulk_xi_se);
    s["bulk_tasks"] = agg.bulk_tasks;
    set_if_finite(s, "zero_fraction_mean", agg.zero_fraction_mean);
    set_if_finite(s, "gamma_c_mean", agg.gamma_c_mean);
    set_if_finite(s, "gamma_c_min", agg.gamma_c_min);
    if (agg.w_samples > 0) {
      s["w"] = agg.w;
      s["w_counts"] = agg.w_counts;
      s["w_samples"] = agg.w_samples;
      json curve = json::array(), counts = json::array();
      for (int b = 0; b < bins; ++b) {
        counts.push_back(agg.xi_counts[static_cast<std::size_t>(b)]);
        if (agg.xi_counts[static_cast<std::size_t>(b)] > 0)
          curve.push_back(agg.xi_curve[static_cast<std::size_t>(b)]);
        else
          curve.push_back(nullptr);
      }
      s["xi_curve"] = curve;
      s["xi_counts"] = counts;
    }
    per_size.push_back(std::move(s));
  }
  summary["per_size"] = per_size;
  summary["scaling"] = scaling;
  if (gamma_d)
    summary["gamma_d"] = *gamma_d;
  else
    summary["gamma_d"] = nullptr;
  {
    std::ofstream out(out_root / "summary" / "summary.json", std::ios::binary);
    out << summary.dump(2) << '\n';
  }

  // aggregation cross-check: the per-size means must equal the arithmetic
  // mean of the per-realization values persisted in stats.csv
  {
    const auto rows = read_csv((out_root / "summary" / "stats.csv").string());
    std::map<int, std::pair<double, int>> sums;
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i].size() < 16 || rows[i][15] != "1") continue;
      auto& [sum, count] = sums[std::stoi(rows[i][0])];
      sum += std::stod(rows[i][6]);
      ++count;
    }
    for (const auto& agg : aggregates) {
      if (agg.tasks_ok == 0) continue;
      const auto& [sum, count] = sums[agg.size];
      const double mean = sum / static_cast<double>(count);
      if (count != agg.tasks_ok ||
          std::abs(mean - agg.pr_xi_mean) > 1e-9 * std::max(1.0, std::abs(agg.pr_xi_mean)))
        throw NumericalError("aggregation cross-check failed at size " + std::to_string(agg.size));
    }
  }

  // ---- figures ----
  std::vector<std::string> figure_files;
  auto try_emit = [&](FigureTag tag) {
    try {
      auto files = emit_figure(tag, {config.output_dir}, (out_root / "figures").string());
      figure_files.insert(figure_files.end(), files.begin(), files.end());
    } catch (const std::exception& e) {
      manifest.failures.push_back(std::string("figure: ") + e.what());
    }
  };
  if (config.mode == ExperimentConfig::Mode::full_spectrum) {
    try_emit(FigureTag::fig1);
    try_emit(FigureTag::fig2);
  }
  if (sizes.size() >= 3) try_emit(FigureTag::fig4);
  try_emit(FigureTag::fig5);
  manifest.stage_seconds["aggregate"] = elapsed_since(agg0);

  // ---- manifest ----
  double t_generate = 0.0, t_pagerank = 0.0, t_spectrum = 0.0, t_stats = 0.0, t_io = 0.0;
  for (const auto& r : results) {
    t_generate += r.t_generate;
    t_pagerank += r.t_pagerank;
    t_spectrum += r.t_spectrum;
    t_stats += r.t_stats;
    t_io += r.t_io;
  }
  manifest.stage_seconds["generate"] = t_generate;
  manifest.stage_seconds["pagerank"] = t_pagerank;
  manifest.stage_seconds["spectrum"] = t_spectrum;
  manifest.stage_seconds["locstats"] = t_stats;
  manifest.stage_seconds["io"] = t_io;
  manifest.stage_seconds["total"] = elapsed_since(wall0);

  std::vector<std::string> output_files;
  for (const auto& task : tasks) {
    const fs::path dir = fs::path("raw") / ("N" + std::to_string(task.size)) /
                         ("r" + std::to_string(task.realization));
    for (const char* name : {"pagerank.csv", "degrees.csv", "cumulative.csv", "spectrum.csv",
                             "bulk_profile.csv"}) {
      if (fs::exists(out_root / dir / name)) output_files.push_back((dir / name).string());
    }
  }
  output_files.push_back("summary/stats.csv");
  output_files.push_back("summary/summary.json");
  for (const auto& f : figure_files)
    output_files.push_back(fs::relative(f, out_root).string());
  std::sort(output_files.begin(), output_files.end());
  output_files.erase(std::unique(output_files.begin(), output_files.end()), output_files.end());
  for (const auto& rel : output_files) {
    FileEntry entry;
    entry.path = rel;
    entry.bytes = static_cast<std::uint64_t>(fs::file_size(out_root / rel));
    entry.fnv1a64 = hex64(fnv1a64_file((out_root / rel).string()));
    manifest.outputs.push_back(std::move(entry));
  }

  json mj;
  mj["version"] = manifest.version;
  mj["config"] = json::parse(manifest.config_json);
  json seeds = json::array();
  for (const auto& [size, realization, seed] : manifest.task_seeds)
    seeds.push_back({{"size", size}, {"realization", realization}, {"seed", seed}});
  mj["task_seeds"] = seeds;
  mj["stage_seconds"] = manifest.stage_seconds;
  json outputs = json::array();
  for (const auto& entry : manifest.outputs)
    outputs.push_back({{"path", entry.path}, {"bytes", entry.bytes}, {"fnv1a64", entry.fnv1a64}});
  mj["outputs"] = outputs;
  mj["failures"] = manifest.failures;
  {
    std::ofstream out(out_root / "manifest.json", std::ios::binary);
    out << mj.dump(2) << '\n';
  }
  return manifest;
}

// ---- figure emission from completed scan directories ----------------------

namespace {

json load_summary(const std::string& scan_dir) {
  const fs::path path = fs::path(scan_dir) / "summary" / "summary.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("missing input: " + path.string());
  json summary;
  in >> summary;
  return summary;
}

}  // namespace

FigureTag figure_tag_from_string(const std::string& name) {
  if (name == "fig1") return FigureTag::fig1;
  if (name == "fig2") return FigureTag::fig2;
  if (name == "fig3") return FigureTag::fig3;
  if (name == "fig4") return FigureTag::fig4;
  if (name == "fig5") return FigureTag::fig5;
  throw ConfigError("unknown figure tag: " + name + " (expected fig1..fig5)");
}

std::vector<std::string> emit_figure(FigureTag tag, const std::vector<std::string>& scan_dirs,
                                     const std::string& out_dir) {
  if (scan_dirs.empty()) throw ConfigError("emit_figure: no scan directories given");
  fs::create_directories(out_dir);
  std::vector<std::string> written;

  auto realization_dirs = [](const std::string& scan_dir, int size) {
    std::vector<fs::path> dirs;
    for (int r = 0;; ++r) {
      fs::path dir = fs::path(scan_dir) / "raw" / ("N" + std::to_string(size)) / ("r" + std::to_string(r));
      if (!fs::exists(dir)) break;
      dirs.push_back(dir);
    }
    return dirs;
  };

  switch (tag) {
    case FigureTag::fig1: {
      const std::string path = (fs::path(out_dir) / "fig1.csv").string();
      CsvWriter csv(path);
      csv.row({"size", "realization", "re", "im", "abs", "gamma", "xi"});
      bool any = false;
      for (const auto& scan_dir : scan_dirs) {
        const json summary = load_summary(scan_dir);
        for (const int size : summary.at("sizes").get<std::vector<int>>()) {
          const auto dirs = realization_dirs(scan_dir, size);
          for (std::size_t r = 0; r < dirs.size(); ++r) {
            const fs::path spec_csv = dirs[r] / "spectrum.csv";
            if (!fs::exists(spec_csv)) continue;
            any = true;
            const auto rows = read_csv(spec_csv.string());
            for (std::size_t i = 1; i < rows.size(); ++i)
              csv.row({CsvWriter::num(size), CsvWriter::num(static_cast<int>(r)), rows[i][0],
                       rows[i][1], rows[i][2], rows[i][3], rows[i][4]});
          }
        }
      }
      if (!any) throw ConfigError("fig1 needs spectrum.csv products (full_spectrum mode)");
      written.push_back(path);
      break;
    }
    case FigureTag::fig2:
    case FigureTag::fig3: {
      const std::string prefix = tag == FigureTag::fig2 ? "fig2" : "fig3";
      if (scan_dirs.size() != 1)
        throw ConfigError(prefix + " takes exactly one scan directory");
      const json summary = load_summary(scan_dirs[0]);
      const double bin_width = summary.at("binning").at("bin_width").get<double>();
      bool any = false;
      const std::string w_path = (fs::path(out_dir) / (prefix + "_w.csv")).string();
      const std::string ipr_path = (fs::path(out_dir) / (prefix + "_ipr.csv")).string();
      const std::string pr_path = (fs::path(out_dir) / (prefix + "_pagerank.csv")).string();
      CsvWriter w_csv(w_path), ipr_csv(ipr_path), pr_csv(pr_path);
      w_csv.row({"size", "gamma_lo", "w"});
      ipr_csv.row({"size", "gamma_lo", "mean_xi", "count"});
      pr_csv.row({"size", "pr_xi_mean", "pr_xi_se"});
      for (const auto& s : summary.at("per_size")) {
        const int size = s.at("size").get<int>();
        if (s.contains("pr_xi_mean"))
          pr_csv.row({CsvWriter::num(size), CsvWriter::num(s.at("pr_xi_mean").get<double>()),
                      CsvWriter::num(s.value("pr_xi_se", 0.0))});
        if (!s.contains("w")) continue;
        any = true;
        const auto w = s.at("w").get<std::vector<double>>();
        for (std::size_t b = 0; b < w.size(); ++b)
          w_csv.row({CsvWriter::num(size), CsvWriter::num(bin_width * static_cast<double>(b)),
                     CsvWriter::num(w[b])});
        const auto& curve = s.at("xi_curve");
        const auto counts = s.at("xi_counts").get<std::vector<int>>();
        for (std::size_t b = 0; b < counts.size(); ++b) {
          ipr_csv.row({CsvWriter::num(size), CsvWriter::num(bin_width * static_cast<double>(b)),
                       curve[b].is_null() ? std::string() : format_double(curve[b].get<double>()),
                       CsvWriter::num(counts[b])});
        }
      }
      if (!any) throw ConfigError(prefix + " needs spectrum aggregates (full_spectrum mode)");
      written = {w_path, ipr_path, pr_path};
      break;
    }
    case FigureTag::fig4: {
      const std::string path = (fs::path(out_dir) / "fig4.csv").string();
      CsvWriter csv(path);
      csv.row({"series", "log10_n", "log10_xi", "se_log10_xi"});
      bool enough = false;
      for (const auto& scan_dir : scan_dirs) {
        const json summary = load_summary(scan_dir);
        const std::string label = summary.at("label").get<std::string>();
        int pagerank_points = 0;
        for (const auto& s : summary.at("per_size")) {
          if (!s.contains("pr_xi_mean")) continue;
          ++pagerank_points;
          const double xi = s.at("pr_xi_mean").get<double>();
          const double se = s.value("pr_xi_se", 0.0);
          csv.row({label + ":pagerank", CsvWriter::num(std::log10(s.at("size").get<double>())),
                   CsvWriter::num(std::log10(xi)), CsvWriter::num(se / xi / std::log(10.0))});
        }
        if (pagerank_points >= 3) enough = true;
        for (const auto& s : summary.at("per_size")) {
          if (!s.contains("bulk_xi_mean")) continue;
          const double xi = s.at("bulk_xi_mean").get<double>();
          const double se = s.value("bulk_xi_se", 0.0);
          csv.row({label + ":bulk", CsvWriter::num(std::log10(s.at("size").get<double>())),
                   CsvWriter::num(std::log10(xi)), CsvWriter::num(se / xi / std::log(10.0))});
        }
      }
      if (!enough)
        throw ConfigError("fig4 needs at least 3 sizes in some scan (slopes are meaningless below that)");
      written.push_back(path);
      break;
    }
    case FigureTag::fig5: {
      const std::string path = (fs::path(out_dir) / "fig5.csv").string();
      const std::string inset_path = (fs::path(out_dir) / "fig5_inset.csv").string();
      CsvWriter csv(path), inset(inset_path);
      csv.row({"series", "j", "value"});
      inset.row({"series", "p", "pc_over_n"});
      bool any = false;
      for (const auto& scan_dir : scan_dirs) {
        const json summary = load_summary(scan_dir);
        const std::string label = summary.at("label").get<std::string>();
        const auto all_sizes = summary.at("sizes").get<std::vector<int>>();
        std::vector<int> picks;
        if (!all_sizes.empty()) picks.push_back(all_sizes.front());
        if (all_sizes.size() > 1) picks.push_back(all_sizes.back());
        for (const int size : picks) {
          const auto dirs = realization_dirs(scan_dir, size);
          // rank-wise mean over realizations
          std::vector<double> mean_p;
          std::size_t n_used = 0;
          for (const auto& dir : dirs) {
            const fs::path pr_csv = dir / "pagerank.csv";
            if (!fs::exists(pr_csv)) continue;
            const auto rows = read_csv(pr_csv.string());
            if (mean_p.empty()) mean_p.assign(rows.size() - 1, 0.0);
            for (std::size_t i = 1; i < rows.size(); ++i) mean_p[i - 1] += std::stod(rows[i][2]);
            ++n_used;
          }
          if (n_used == 0) continue;
          any = true;
          for (std::size_t j = 0; j < mean_p.size(); ++j)
            csv.row({label + ":pagerank_N" + std::to_string(size),
                     CsvWriter::num(static_cast<std::int64_t>(j + 1)),
                     CsvWriter::num(mean_p[j] / static_cast<double>(n_used))});
          // bulk |psi|^2 profile, when present
          std::vector<double> mean_profile;
          std::size_t n_profiles = 0;
          for (const auto& dir : dirs) {
            const fs::path bp = dir / "bulk_profile.csv";
            if (!fs::exists(bp)) continue;
            const auto rows = read_csv(bp.string());
            if (mean_profile.empty()) mean_profile.assign(rows.size() - 1, 0.0);
            for (std::size_t i = 1; i < rows.size(); ++i) mean_profile[i - 1] += std::stod(rows[i][1]);
            ++n_profiles;
          }
          for (std::size_t j = 0; j < mean_profile.size(); ++j)
            csv.row({label + ":bulk_N" + std::to_string(size),
                     CsvWriter::num(static_cast<std::int64_t>(j + 1)),
                     CsvWriter::num(mean_profile[j] / static_cast<double>(n_profiles))});
        }
        // inset: cumulative of the largest size, first realization
        if (!all_sizes.empty()) {
          const auto dirs = realization_dirs(scan_dir, all_sizes.back());
          if (!dirs.empty() && fs::exists(dirs[0] / "cumulative.csv")) {
            const auto rows = read_csv((dirs[0] / "cumulative.csv").string());
            for (std::size_t i = 1; i < rows.size(); ++i)
              inset.row({label + ":N" + std::to_string(all_sizes.back()), rows[i][0], rows[i][2]});
          }
        }
      }
      if (!any) throw ConfigError("fig5 needs pagerank.csv products");
      written = {path, inset_path};
      break;
    }
  }
  return written;
}

}  // namespace gm
