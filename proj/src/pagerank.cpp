#include "gm/pagerank.hpp"

#include <algorithm>
#include <cmath>

#include "gm/csv.hpp"
#include "gm/linfit.hpp"
#include "gm/numeric.hpp"
#include "gm/rng.hpp"

namespace gm {

PageRankVector power_iterate(const GoogleOperator& op, double tol, int max_iter,
                             std::uint64_t seed) {
  if (!(tol > 0.0)) throw std::invalid_argument("power_iterate: tol must be positive");
  const std::size_t n = static_cast<std::size_t>(op.n());
  Rng rng(seed);

  std::vector<double> v(n), next(n);
  for (auto& x : v) x = rng.next_double() + 1e-3;  // positive random start
  double mass = kahan_sum(v);
  for (auto& x : v) x /= mass;

  double residual = 0.0;
  for (int it = 1; it <= max_iter; ++it) {
    apply_g(op, v, next);
    mass = kahan_sum(next);
    for (auto& x : next) x /= mass;
    residual = l1_distance(next, v);
    v.swap(next);
    if (residual < tol) {
      PageRankVector pr;
      pr.p = std::move(v);
      pr.order = rank_order(pr.p);
      pr.iterations_used = it;
      pr.final_residual = residual;
      return pr;
    }
  }
  throw PowerIterationError("power_iterate: no convergence after " + std::to_string(max_iter) +
                                " iterations (residual " + format_double(residual) + ")",
                            std::move(v), residual);
}

std::vector<int> rank_order(std::span<const double> p) {
  std::vector<int> order(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) order[i] = static_cast<int>(i);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return p[static_cast<std::size_t>(a)] > p[static_cast<std::size_t>(b)];
  });
  return order;
}

DecayFit fit_beta(const PageRankVector& pr, int j_min, int j_max) {
  const int n = static_cast<int>(pr.p.size());
  if (j_min <= 0) j_min = 10;
  if (j_max <= 0) j_max = n / 10;
  j_min = std::max(1, j_min);
  j_max = std::min(n, j_max);
  if (j_max - j_min + 1 < 10)
    throw std::invalid_argument("fit_beta: window must contain at least 10 ranks");

  std::vector<double> xs, ys;
  xs.reserve(static_cast<std::size_t>(j_max - j_min + 1));
  ys.reserve(xs.capacity());
  for (int j = j_min; j <= j_max; ++j) {
    const double pj = pr.p[static_cast<std::size_t>(pr.order[static_cast<std::size_t>(j - 1)])];
    if (pj <= 0.0) throw std::domain_error("fit_beta: nonpositive weight in window");
    xs.push_back(std::log(static_cast<double>(j)));
    ys.push_back(std::log(pj));
  }
  const auto [min_y, max_y] = std::minmax_element(ys.begin(), ys.end());
  if (*max_y - *min_y < 1e-12) throw std::domain_error("fit_beta: constant weights in window");

  const LinearFit fit = linear_fit(xs, ys);
  if (std::abs(fit.slope) < 1e-14) throw std::domain_error("fit_beta: zero slope");
  DecayFit out;
  out.beta = -fit.slope;
  out.nu = 1.0 + 1.0 / out.beta;
  out.stderr_ = fit.slope_stderr;
  out.j_min = j_min;
  out.j_max = j_max;
  return out;
}

std::vector<CumulativePoint> cumulative_pagerank(const PageRankVector& pr,
                                                 std::span<const double> grid) {
  for (std::size_t i = 0; i + 1 < grid.size(); ++i)
    if (!(grid[i] > 0.0) || grid[i] > grid[i + 1])
      throw std::invalid_argument("cumulative_pagerank: grid must be positive ascending");
  std::vector<double> sorted(pr.p.begin(), pr.p.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<CumulativePoint> table;
  table.reserve(grid.size());
  for (double g : grid) {
    const auto it = std::lower_bound(sorted.begin(), sorted.end(), g);
    table.push_back({g, static_cast<double>(sorted.end() - it)});
  }
  return table;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi > lo) || points < 2)
    throw std::invalid_argument("log_grid: need 0 < lo < hi and points >= 2");
  std::vector<double> grid(static_cast<std::size_t>(points));
  const double step = (std::log(hi) - std::log(lo)) / static_cast<double>(points - 1);
  for (int i = 0; i < points; ++i) grid[static_cast<std::size_t>(i)] = std::exp(std::log(lo) + step * i);
  grid.front() = lo;
  grid.back() = hi;
  return grid;
}

void write_pagerank_csv(const PageRankVector& pr, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"rank", "node", "p"});
  for (std::size_t r = 0; r < pr.order.size(); ++r) {
    const int node = pr.order[r];
    csv.row({CsvWriter::num(static_cast<std::int64_t>(r + 1)), CsvWriter::num(node),
             CsvWriter::num(pr.p[static_cast<std::size_t>(node)])});
  }
}

void write_cumulative_csv(std::span<const CumulativePoint> table, int n, const std::string& path) {
  CsvWriter csv(path);
  csv.row({"p", "P_c", "P_c_over_N"});
  for (const auto& pt : table)
    csv.row({CsvWriter::num(pt.p), CsvWriter::num(pt.count),
             CsvWriter::num(pt.count / static_cast<double>(n))});
}

}  // namespace gm
