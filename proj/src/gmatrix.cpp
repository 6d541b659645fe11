#include "gm/gmatrix.hpp"

#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <string>

#include "gm/csv.hpp"
#include "gm/errors.hpp"
#include "gm/numeric.hpp"

namespace gm {

StochasticMatrix StochasticMatrix::from_graph(const DirectedGraph& graph) {
  if (graph.n == 0) throw std::invalid_argument("StochasticMatrix: empty graph");
  StochasticMatrix s;
  s.n = graph.n;
  s.col_ptr.resize(static_cast<std::size_t>(graph.n) + 1, 0);
  s.col_value.resize(static_cast<std::size_t>(graph.n), 0.0);
  s.row_idx.reserve(static_cast<std::size_t>(graph.edge_count()));
  for (int j = 0; j < graph.n; ++j) {
    s.col_ptr[static_cast<std::size_t>(j)] = static_cast<int>(s.row_idx.size());
    const auto& targets = graph.out_adj[static_cast<std::size_t>(j)];
    if (targets.empty()) {
      s.dangling.push_back(j);
    } else {
      s.col_value[static_cast<std::size_t>(j)] = 1.0 / static_cast<double>(targets.size());
      for (int i : targets) s.row_idx.push_back(i);
    }
  }
  s.col_ptr[static_cast<std::size_t>(graph.n)] = static_cast<int>(s.row_idx.size());
  return s;
}

GoogleOperator::GoogleOperator(StochasticMatrix s_, double alpha_) : s(std::move(s_)), alpha(alpha_) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("GoogleOperator: alpha must lie in (0,1)");
}

double DenseMatrix::trace() const {
  double t = 0.0;
  for (int i = 0; i < n; ++i) t += at(i, i);
  return t;
}

void apply_g(const GoogleOperator& op, std::span<const double> v, std::span<double> out) {
  const StochasticMatrix& s = op.s;
  const std::size_t n = static_cast<std::size_t>(s.n);
  if (v.size() != n || out.size() != n)
    throw std::invalid_argument("apply_g: dimension mismatch");

  const double total = kahan_sum(v);
  double dangling_mass = 0.0;
  {
    double c = 0.0;
    for (int j : s.dangling) {
      const double y = v[static_cast<std::size_t>(j)] - c;
      const double t = dangling_mass + y;
      c = (t - dangling_mass) - y;
      dangling_mass = t;
    }
  }
  const double uniform =
      (op.alpha * dangling_mass + (1.0 - op.alpha) * total) / static_cast<double>(s.n);
  for (std::size_t i = 0; i < n; ++i) out[i] = uniform;

  for (int j = 0; j < s.n; ++j) {
    const double w = op.alpha * s.col_value[static_cast<std::size_t>(j)] * v[static_cast<std::size_t>(j)];
    if (w == 0.0) continue;
    const int lo = s.col_ptr[static_cast<std::size_t>(j)];
    const int hi = s.col_ptr[static_cast<std::size_t>(j) + 1];
    for (int e = lo; e < hi; ++e) out[static_cast<std::size_t>(s.row_idx[static_cast<std::size_t>(e)])] += w;
  }
}

std::vector<double> apply_g(const GoogleOperator& op, std::span<const double> v) {
  std::vector<double> out(v.size());
  apply_g(op, v, out);
  return out;
}

int dense_cap() {
  static const int cap = [] {
    if (const char* env = std::getenv("GMATRIX_DENSE_CAP")) {
      const long v = std::strtol(env, nullptr, 10);
      if (v > 0) return static_cast<int>(v);
    }
    return 1 << 13;
  }();
  return cap;
}

DenseMatrix materialize_dense(const GoogleOperator& op) {
  const int n = op.n();
  if (n > dense_cap())
    throw NumericalError("materialize_dense: n = " + std::to_string(n) +
                         " exceeds dense cap " + std::to_string(dense_cap()) +
                         " (set GMATRIX_DENSE_CAP to override)");
  DenseMatrix g;
  g.n = n;
  const double base = (1.0 - op.alpha) / static_cast<double>(n);
  g.a.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), base);
  // dangling columns expand to alpha/n + (1-alpha)/n = exactly 1/n
  for (int j : op.s.dangling) {
    const double uniform = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i) g.at(i, j) = uniform;
  }
  for (int j = 0; j < n; ++j) {
    const double w = op.alpha * op.s.col_value[static_cast<std::size_t>(j)];
    if (w == 0.0) continue;
    const int lo = op.s.col_ptr[static_cast<std::size_t>(j)];
    const int hi = op.s.col_ptr[static_cast<std::size_t>(j) + 1];
    for (int e = lo; e < hi; ++e) g.at(op.s.row_idx[static_cast<std::size_t>(e)], j) += w;
  }
  return g;
}

void write_dense_csv(const DenseMatrix& g, std::ostream& out) {
  for (int i = 0; i < g.n; ++i) {
    for (int j = 0; j < g.n; ++j) {
      if (j) out << ',';
      out << format_double(g.at(i, j));
    }
    out << '\n';
  }
}

}  // namespace gm
