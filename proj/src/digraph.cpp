#include "gm/digraph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <queue>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "gm/csv.hpp"
#include "gm/errors.hpp"
#include "gm/linfit.hpp"

namespace gm {

namespace {

// Fenwick tree over nonnegative integer weights; supports O(log n)
// increments and sampling proportional to weight.
class FenwickSampler {
 public:
  explicit FenwickSampler(int n) : n_(n), tree_(static_cast<std::size_t>(n) + 1, 0) {}

  void add(int i, std::int64_t delta) {
    for (int k = i + 1; k <= n_; k += k & -k) tree_[k] += delta;
    total_ += delta;
  }

  std::int64_t total() const { return total_; }

  // Index i such that prefix(i) <= u < prefix(i+1); u in [0, total).
  int sample(std::int64_t u) const {
    int idx = 0;
    int bit = 1;
    while ((bit << 1) <= n_) bit <<= 1;
    for (; bit != 0; bit >>= 1) {
      const int next = idx + bit;
      if (next <= n_ && tree_[next] <= u) {
        idx = next;
        u -= tree_[next];
      }
    }
    return idx;  // 0-based
  }

  int pick(Rng& rng) const { return sample(static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(total_)))); }

 private:
  int n_;
  std::vector<std::int64_t> tree_;
  std::int64_t total_ = 0;
};

constexpr int kCollisionRetries = 100;

std::uint64_t edge_key(int u, int v, int n) {
  return static_cast<std::uint64_t>(u) * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(v);
}

}  // namespace

std::int64_t DirectedGraph::edge_count() const {
  std::int64_t e = 0;
  for (const auto& lst : out_adj) e += static_cast<std::int64_t>(lst.size());
  return e;
}

bool DirectedGraph::has_edge(int u, int v) const {
  const auto& lst = out_adj[u];
  return std::binary_search(lst.begin(), lst.end(), v);
}

DirectedGraph DirectedGraph::from_edges(int n, const std::vector<std::pair<int, int>>& edges) {
  if (n < 0) throw std::invalid_argument("DirectedGraph: negative node count");
  DirectedGraph g;
  g.n = n;
  g.out_adj.assign(static_cast<std::size_t>(n), {});
  g.in_adj.assign(static_cast<std::size_t>(n), {});
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n)
      throw std::invalid_argument("DirectedGraph: edge index out of range");
    if (u == v) continue;
    g.out_adj[static_cast<std::size_t>(u)].push_back(v);
  }
  for (int u = 0; u < n; ++u) {
    auto& lst = g.out_adj[static_cast<std::size_t>(u)];
    std::sort(lst.begin(), lst.end());
    lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
    for (int v : lst) g.in_adj[static_cast<std::size_t>(v)].push_back(u);
  }
  // in_adj built by ascending u, already sorted
  return g;
}

void AbParams::validate() const {
  if (m < 1) throw std::invalid_argument("AbParams: m must be >= 1");
  if (p < 0.0 || q < 0.0 || p > 1.0 || q > 1.0)
    throw std::invalid_argument("AbParams: probabilities must be in [0,1]");
  if (p + q > 1.0) throw std::invalid_argument("AbParams: p + q must be <= 1");
  if (n_target < m) throw std::invalid_argument("AbParams: n_target must be >= m");
}

DirectedGraph ab_generate(const AbParams& params) {
  params.validate();
  const int n_target = params.n_target;
  const int m = params.m;
  Rng rng(params.seed);

  FenwickSampler weights(n_target);  // weight of node i is k_i + 1
  std::vector<std::pair<int, int>> edges;
  std::unordered_set<std::uint64_t> edge_set;
  edges.reserve(static_cast<std::size_t>(n_target) * static_cast<std::size_t>(m));

  auto insert_edge = [&](int u, int v) {
    edges.emplace_back(u, v);
    edge_set.insert(edge_key(u, v, n_target));
    weights.add(u, 1);
    weights.add(v, 1);
  };
  auto exists = [&](int u, int v) { return edge_set.count(edge_key(u, v, n_target)) != 0; };

  // Seed graph: m nodes in a directed ring, so every node starts with k >= 1.
  int n_cur = m;
  for (int i = 0; i < m; ++i) weights.add(i, 1);
  if (m >= 2)
    for (int i = 0; i < m; ++i) insert_edge(i, (i + 1) % m);

  while (n_cur < n_target) {
    const double r = rng.next_double();
    if (r < params.p) {
      // add m links: uniform source, preferential target
      for (int l = 0; l < m; ++l) {
        const int src = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n_cur)));
        for (int attempt = 0; attempt < kCollisionRetries; ++attempt) {
          const int tgt = weights.pick(rng);
          if (tgt == src || exists(src, tgt)) continue;
          insert_edge(src, tgt);
          break;
        }
      }
    } else if (r < params.p + params.q) {
      // re-aim m existing links: keep source, choose new target preferentially
      if (edges.empty()) continue;
      for (int l = 0; l < m; ++l) {
        const std::size_t e = static_cast<std::size_t>(rng.next_below(edges.size()));
        const auto [a, b] = edges[e];
        for (int attempt = 0; attempt < kCollisionRetries; ++attempt) {
          const int d = weights.pick(rng);
          if (d == a || exists(a, d)) continue;
          edge_set.erase(edge_key(a, b, n_target));
          weights.add(b, -1);
          edges[e] = {a, d};
          edge_set.insert(edge_key(a, d, n_target));
          weights.add(d, 1);
          break;
        }
      }
    } else {
      // grow: new node with m outgoing links, targets preferential
      const int id = n_cur;
      weights.add(id, 1);
      ++n_cur;
      for (int l = 0; l < m; ++l) {
        for (int attempt = 0; attempt < kCollisionRetries; ++attempt) {
          const int tgt = weights.pick(rng);
          if (tgt == id || exists(id, tgt)) continue;
          insert_edge(id, tgt);
          break;
        }
      }
    }
  }
  return DirectedGraph::from_edges(n_target, edges);
}

int preferential_pick(const DirectedGraph& graph, Rng& rng) {
  if (graph.n == 0) throw std::invalid_argument("preferential_pick: empty graph");
  std::int64_t total = 0;
  for (int i = 0; i < graph.n; ++i) total += graph.total_degree(i) + 1;
  std::int64_t u = static_cast<std::int64_t>(rng.next_below(static_cast<std::uint64_t>(total)));
  for (int i = 0; i < graph.n; ++i) {
    u -= graph.total_degree(i) + 1;
    if (u < 0) return i;
  }
  return graph.n - 1;  // unreachable
}

std::int64_t default_rewire_swaps(const DirectedGraph& graph) { return 10 * graph.edge_count(); }

RewireResult rewire_preserving_degrees(const DirectedGraph& graph, std::int64_t n_swaps,
                                       std::uint64_t seed) {
  RewireResult result;
  std::vector<std::pair<int, int>> edges;
  edges.reserve(static_cast<std::size_t>(graph.edge_count()));
  for (int u = 0; u < graph.n; ++u)
    for (int v : graph.out_adj[static_cast<std::size_t>(u)]) edges.emplace_back(u, v);

  if (edges.size() < 2 || n_swaps <= 0) {
    result.graph = graph;
    return result;
  }

  std::unordered_set<std::uint64_t> edge_set;
  edge_set.reserve(edges.size() * 2);
  for (const auto& [u, v] : edges) edge_set.insert(edge_key(u, v, graph.n));

  Rng rng(seed);
  constexpr int kSwapAttempts = 200;
  for (std::int64_t s = 0; s < n_swaps; ++s) {
    bool accepted = false;
    for (int attempt = 0; attempt < kSwapAttempts; ++attempt) {
      const std::size_t e1 = static_cast<std::size_t>(rng.next_below(edges.size()));
      std::size_t e2 = static_cast<std::size_t>(rng.next_below(edges.size() - 1));
      if (e2 >= e1) ++e2;
      const auto [a, b] = edges[e1];
      const auto [c, d] = edges[e2];
      if (a == d || c == b) continue;  // self-loops
      if (edge_set.count(edge_key(a, d, graph.n)) || edge_set.count(edge_key(c, b, graph.n)))
        continue;  // duplicates (also rejects no-op swaps)
      edge_set.erase(edge_key(a, b, graph.n));
      edge_set.erase(edge_key(c, d, graph.n));
      edges[e1] = {a, d};
      edges[e2] = {c, b};
      edge_set.insert(edge_key(a, d, graph.n));
      edge_set.insert(edge_key(c, b, graph.n));
      ++result.accepted;
      accepted = true;
      break;
    }
    if (!accepted) {
      result.exhausted = true;
      break;
    }
  }
  result.graph = DirectedGraph::from_edges(graph.n, edges);
  return result;
}

LoadedGraph load_edge_list(std::istream& in) {
  LoadedGraph loaded;
  std::vector<std::pair<int, int>> edges;
  std::string line;
  int line_no = 0;

  auto intern = [&](const std::string& label) {
    auto [it, inserted] = loaded.index.try_emplace(label, static_cast<int>(loaded.labels.size()));
    if (inserted) loaded.labels.push_back(label);
    return it->second;
  };

  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;  // blank
    if (line[start] == '#') continue;          // comment
    std::istringstream fields(line);
    std::string src, tgt, extra;
    if (!(fields >> src >> tgt) || (fields >> extra))
      throw ConfigError("edge list line " + std::to_string(line_no) +
                        ": expected \"source target\"");
    const int s = intern(src);  // source interned first: first-seen order
    const int t = intern(tgt);
    edges.emplace_back(s, t);
  }
  if (edges.empty()) throw ConfigError("edge list: no edges found");
  loaded.graph = DirectedGraph::from_edges(static_cast<int>(loaded.labels.size()), edges);
  return loaded;
}

LoadedGraph load_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open edge list: " + path);
  return load_edge_list(in);
}

void write_edge_list(const DirectedGraph& graph, std::ostream& out) {
  // Canonicalizing serialization: nodes are written under fresh indices
  // assigned in the order a reader of this output first encounters them, so
  // loading the output reproduces the written graph exactly (isolated nodes
  // have no lines and drop out).  Source groups appear in ascending index
  // order, which is what the reader expects for first-seen consistency.
  const int n = graph.n;
  std::vector<int> label(static_cast<std::size_t>(n), -1);
  std::vector<char> emitted(static_cast<std::size_t>(n), 0);
  std::priority_queue<std::pair<int, int>, std::vector<std::pair<int, int>>, std::greater<>> pending;
  int next_label = 0;

  auto assign = [&](int v) {
    if (label[static_cast<std::size_t>(v)] >= 0) return;
    label[static_cast<std::size_t>(v)] = next_label++;
    if (graph.out_degree(v) > 0) pending.push({label[static_cast<std::size_t>(v)], v});
  };
  auto emit = [&](int u) {
    emitted[static_cast<std::size_t>(u)] = 1;
    for (int v : graph.out_adj[static_cast<std::size_t>(u)]) {
      assign(v);
      out << label[static_cast<std::size_t>(u)] << ' ' << label[static_cast<std::size_t>(v)] << '\n';
    }
  };

  int fresh = 0;
  for (;;) {
    while (!pending.empty()) {
      const auto [lbl, u] = pending.top();
      pending.pop();
      if (!emitted[static_cast<std::size_t>(u)]) emit(u);
    }
    while (fresh < n && (label[static_cast<std::size_t>(fresh)] >= 0 || graph.out_degree(fresh) == 0))
      ++fresh;
    if (fresh == n) break;
    assign(fresh);
  }
}

DegreeStats degree_stats(const DirectedGraph& graph) {
  DegreeStats stats;
  const int n = graph.n;
  stats.in_degrees.resize(static_cast<std::size_t>(n));
  stats.out_degrees.resize(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    stats.in_degrees[static_cast<std::size_t>(v)] = graph.in_degree(v);
    stats.out_degrees[static_cast<std::size_t>(v)] = graph.out_degree(v);
  }

  auto cumulative = [n](const std::vector<int>& degrees) {
    int k_max = 0;
    for (int k : degrees) k_max = std::max(k_max, k);
    std::vector<std::int64_t> count(static_cast<std::size_t>(k_max) + 2, 0);
    for (int k : degrees) ++count[static_cast<std::size_t>(k)];
    std::vector<double> table(static_cast<std::size_t>(k_max) + 1, 0.0);
    std::int64_t at_least = 0;
    for (int k = k_max; k >= 0; --k) {
      at_least += count[static_cast<std::size_t>(k)];
      table[static_cast<std::size_t>(k)] = static_cast<double>(at_least) / static_cast<double>(n);
    }
    return table;
  };
  stats.cumulative_in = cumulative(stats.in_degrees);
  stats.cumulative_out = cumulative(stats.out_degrees);

  const double e = static_cast<double>(graph.edge_count());
  stats.connectivity = e / static_cast<double>(n);
  stats.mean_total = 2.0 * stats.connectivity;
  return stats;
}

TailFit fit_tail(const std::vector<double>& cumulative, TailModel model, int k_min, int k_max) {
  if (k_min < 0 || k_max >= static_cast<int>(cumulative.size()) || k_min > k_max)
    throw std::invalid_argument("fit_tail: range outside degree support");
  if (model == TailModel::algebraic && k_min < 1)
    throw std::invalid_argument("fit_tail: algebraic model needs k_min >= 1");

  std::vector<double> xs, ys;
  for (int k = k_min; k <= k_max; ++k) {
    const double pc = cumulative[static_cast<std::size_t>(k)];
    if (pc <= 0.0) continue;
    xs.push_back(model == TailModel::algebraic ? std::log(static_cast<double>(k))
                                               : static_cast<double>(k));
    ys.push_back(std::log(pc));
  }
  if (xs.size() < 5)
    throw NumericalError("fit_tail: fewer than 5 populated degrees in [" +
                         std::to_string(k_min) + "," + std::to_string(k_max) + "]");

  const LinearFit fit = linear_fit(xs, ys);
  TailFit out;
  out.model = model;
  out.value = -fit.slope;
  out.stderr_ = fit.slope_stderr;
  out.k_min = k_min;
  out.k_max = k_max;
  return out;
}

TailFit fit_tail(const std::vector<double>& cumulative, TailModel model) {
  // Default windows anchored on quantiles of the cumulative table rather
  // than on k_max: the far tail is finite-size cutoff, not the law.  The
  // algebraic fit takes the scaling body down to P_c = 0.1; the exponential
  // fit takes the tail flank between P_c = 0.5 and P_c = 0.01.
  const int k_top = static_cast<int>(cumulative.size()) - 1;
  auto k_at = [&](double level) {
    int k = 0;
    while (k < k_top && cumulative[static_cast<std::size_t>(k)] > level) ++k;
    return k;
  };
  int k_min, k_max;
  if (model == TailModel::algebraic) {
    k_min = 2;
    k_max = std::max(k_min + 4, k_at(0.1));
  } else {
    k_min = std::max(2, k_at(0.5));
    k_max = std::max(k_min + 4, k_at(0.01));
  }
  return fit_tail(cumulative, model, std::min(k_min, k_top), std::min(k_max, k_top));
}

void write_degree_csv(const DegreeStats& stats, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"k", "P_c_in", "P_c_out"});
  const std::size_t rows = std::max(stats.cumulative_in.size(), stats.cumulative_out.size());
  for (std::size_t k = 0; k < rows; ++k) {
    const double in = k < stats.cumulative_in.size() ? stats.cumulative_in[k] : 0.0;
    const double out = k < stats.cumulative_out.size() ? stats.cumulative_out[k] : 0.0;
    csv.row({CsvWriter::num(static_cast<std::int64_t>(k)), CsvWriter::num(in), CsvWriter::num(out)});
  }
}

}  // namespace gm
