#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gm/rng.hpp"

namespace gm {

// Immutable simple directed graph in dual adjacency layout.  No self-loops,
// no duplicate edges; in_adj is the exact transpose of out_adj.  Adjacency
// lists are kept sorted so equal graphs compare equal.
struct DirectedGraph {
  int n = 0;
  std::vector<std::vector<int>> out_adj;
  std::vector<std::vector<int>> in_adj;

  std::int64_t edge_count() const;
  int out_degree(int v) const { return static_cast<int>(out_adj[v].size()); }
  int in_degree(int v) const { return static_cast<int>(in_adj[v].size()); }
  // in-degree + out-degree, the weight basis for preferential attachment
  int total_degree(int v) const { return out_degree(v) + in_degree(v); }
  bool has_edge(int u, int v) const;

  // Canonicalizing constructor: drops self-loops, collapses duplicates,
  // sorts adjacency, builds the transpose.  Throws on out-of-range indices.
  static DirectedGraph from_edges(int n, const std::vector<std::pair<int, int>>& edges);

  bool operator==(const DirectedGraph& other) const = default;
};

// Parameters of the directed growth/add/rewire network model: at each step,
// with probability p add m links (uniform source, preferential target), with
// probability q re-aim m existing links preferentially, otherwise add a new
// node with m outgoing links.
struct AbParams {
  int m = 5;
  double p = 0.2;
  double q = 0.1;
  int n_target = 1024;
  std::uint64_t seed = 1;

  void validate() const;  // throws std::invalid_argument
};

struct DegreeStats {
  std::vector<int> in_degrees;
  std::vector<int> out_degrees;
  std::vector<double> cumulative_in;   // P_c(k) = #{v : k_in(v)  >= k} / n, k = 0..k_max
  std::vector<double> cumulative_out;  // P_c(k) = #{v : k_out(v) >= k} / n
  double mean_total = 0.0;    // mean of (k_in + k_out) = 2|E|/n
  double connectivity = 0.0;  // links per node |E|/n (= mean in- = mean out-degree)
};

enum class TailModel { algebraic, exponential };

struct TailFit {
  TailModel model = TailModel::algebraic;
  double value = 0.0;   // decay exponent (P_c ~ k^-value) or rate (P_c ~ e^{-value k})
  double stderr_ = 0.0;
  int k_min = 0;
  int k_max = 0;
};

struct RewireResult {
  DirectedGraph graph;
  std::int64_t accepted = 0;
  bool exhausted = false;  // set when no valid swap was found within the attempt budget
};

struct LoadedGraph {
  DirectedGraph graph;
  std::vector<std::string> labels;  // index -> original label, first-seen order
  std::unordered_map<std::string, int> index;
};

DirectedGraph ab_generate(const AbParams& params);

// Draws node i with probability (k_i + 1) / sum_j (k_j + 1).
int preferential_pick(const DirectedGraph& graph, Rng& rng);

// Degree-preserving randomization by repeated two-edge target swaps:
// (a->b),(c->d) becomes (a->d),(c->b) unless that would create a self-loop
// or a duplicate edge.  In/out degree sequences are preserved exactly.
RewireResult rewire_preserving_degrees(const DirectedGraph& graph, std::int64_t n_swaps,
                                       std::uint64_t seed);
std::int64_t default_rewire_swaps(const DirectedGraph& graph);  // 10 |E|

// Parses "source target" lines; '#' starts a comment line; labels are
// arbitrary strings mapped to dense indices in first-seen order.  Duplicate
// edges collapse, self-loops drop.  Throws ConfigError with the line number
// on malformed input and on empty input.
LoadedGraph load_edge_list(std::istream& in);
LoadedGraph load_edge_list_file(const std::string& path);

// One "source target" line per edge, with node indices relabeled in the
// order a reader first sees them.  load_edge_list of the output therefore
// reproduces the written graph exactly; graphs already in that canonical
// order serialize under their own indices.
void write_edge_list(const DirectedGraph& graph, std::ostream& out);

DegreeStats degree_stats(const DirectedGraph& graph);

// Least-squares tail fit of a cumulative degree table over k in
// [k_min, k_max]: slope of (log k, log P_c) for the algebraic model,
// (k, log P_c) for the exponential one.  Needs >= 5 populated k values.
TailFit fit_tail(const std::vector<double>& cumulative, TailModel model, int k_min, int k_max);
// Default window [2, k_max/4].
TailFit fit_tail(const std::vector<double>& cumulative, TailModel model);

// CSV with columns k, P_c_in, P_c_out.
void write_degree_csv(const DegreeStats& stats, const std::string& path);

}  // namespace gm
