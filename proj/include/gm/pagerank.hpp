#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "gm/gmatrix.hpp"

namespace gm {

// Stationary vector of G: positive entries, L1 mass 1, plus the permutation
// ordering nodes by decreasing weight.
struct PageRankVector {
  std::vector<double> p;
  std::vector<int> order;  // order[r] = node of rank r (0-based)
  int iterations_used = 0;
  double final_residual = 0.0;
};

struct DecayFit {
  double beta = 0.0;  // p_(j) ~ 1/j^beta over the fit window
  double nu = 0.0;    // 1 + 1/beta
  double stderr_ = 0.0;
  int j_min = 0;
  int j_max = 0;
};

// Thrown when power iteration fails to reach tol; carries the last iterate.
class PowerIterationError : public std::runtime_error {
 public:
  PowerIterationError(std::string what, std::vector<double> last, double res)
      : std::runtime_error(std::move(what)), last_iterate(std::move(last)), residual(res) {}
  std::vector<double> last_iterate;
  double residual;
};

// Iterates v <- G v from a seeded random positive start, renormalizing the
// L1 mass each step, until the successive-iterate L1 distance drops below
// tol.  The result has fixed-point residual ||G p - p||_1 <= 2 tol.
PageRankVector power_iterate(const GoogleOperator& op, double tol = 1e-12, int max_iter = 1000,
                             std::uint64_t seed = 1);

// Decreasing stable order, ties broken by ascending node index.
std::vector<int> rank_order(std::span<const double> p);

// Log-log slope of the rank-ordered weights over ranks [j_min, j_max]
// (1-based).  Defaults to [10, n/10].  Throws on constant input.
DecayFit fit_beta(const PageRankVector& pr, int j_min = 0, int j_max = 0);

struct CumulativePoint {
  double p = 0.0;
  double count = 0.0;  // #{j : p_j >= p}
};

// Cumulative distribution on a caller-provided ascending grid of p values.
std::vector<CumulativePoint> cumulative_pagerank(const PageRankVector& pr,
                                                 std::span<const double> grid);

// Logarithmic grid covering [lo, hi] with the given number of points.
std::vector<double> log_grid(double lo, double hi, int points);

// CSV products: (rank, node, p) and (p, P_c).
void write_pagerank_csv(const PageRankVector& pr, const std::string& path);
void write_cumulative_csv(std::span<const CumulativePoint> table, int n, const std::string& path);

}  // namespace gm
