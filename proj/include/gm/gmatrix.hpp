#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "gm/digraph.hpp"

namespace gm {

// Column-stochastic link matrix in compressed-column form.  Column j holds
// value 1/outdeg(j) at the rows j points to; columns of dangling nodes
// (out-degree zero) store nothing and stand for an implicit uniform 1/n.
struct StochasticMatrix {
  int n = 0;
  std::vector<int> col_ptr;        // size n+1
  std::vector<int> row_idx;        // targets, grouped by column
  std::vector<double> col_value;   // 1/outdeg per column, 0 for dangling
  std::vector<int> dangling;       // sorted column indices with no entries

  static StochasticMatrix from_graph(const DirectedGraph& graph);
};

// G = alpha S + (1 - alpha) E/n with E the all-ones matrix.  The teleport
// term and the dangling columns stay rank-one corrections in sparse form.
struct GoogleOperator {
  StochasticMatrix s;
  double alpha = 0.85;

  GoogleOperator(StochasticMatrix s_, double alpha_ = 0.85);
  int n() const { return s.n; }
};

struct DenseMatrix {
  int n = 0;
  std::vector<double> a;  // row-major

  double& at(int i, int j) { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  double at(int i, int j) const { return a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)]; }
  double trace() const;
};

// out = G v without materializing G; O(|E| + n).
void apply_g(const GoogleOperator& op, std::span<const double> v, std::span<double> out);
std::vector<double> apply_g(const GoogleOperator& op, std::span<const double> v);

// Largest n for which materialize_dense will run; default 2^13, overridable
// through the GMATRIX_DENSE_CAP environment variable.
int dense_cap();

// Explicit G, refused above the cap (callers needing spectra must keep n
// within O(n^2) memory budgets).
DenseMatrix materialize_dense(const GoogleOperator& op);

// Row-per-line CSV of the dense matrix, for cross-checks with external tools.
void write_dense_csv(const DenseMatrix& g, std::ostream& out);

}  // namespace gm
