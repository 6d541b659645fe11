#pragma once

// Test-only oracles, independent of the library's solver paths:
//  - exact characteristic polynomial by cofactor expansion over 128-bit
//    integers (the Google matrix of a small graph scaled to integrality)
//  - polynomial roots by Durand-Kerner iteration
//  - multiplicity-aware spectrum matching (pointwise where well separated,
//    cluster counting and coefficient agreement where Jordan structure makes
//    pointwise roots ill-posed in floating point)
//  - reference dense Google matrix built directly from its definition
//  - naive dense products and trace identities

#include <algorithm>
#include <complex>
#include <numeric>
#include <span>
#include <stdexcept>
#include <vector>

#include "gm/digraph.hpp"
#include "gm/gmatrix.hpp"

namespace oracle {

using cd = std::complex<double>;

// Durand-Kerner on ascending coefficients; start points on a circle of the
// given radius.  Exact zero low-order coefficients make repeated zero roots
// converge cleanly.
inline std::vector<cd> poly_roots(const std::vector<double>& coeffs_in, double start_radius) {
  std::vector<double> c = coeffs_in;
  while (c.size() > 1 && c.back() == 0.0) c.pop_back();
  const int deg = static_cast<int>(c.size()) - 1;
  if (deg < 1) return {};
  std::vector<cd> z(static_cast<std::size_t>(deg));
  const cd dir(0.4, 0.9);
  cd pw(1.0, 0.0);
  for (int k = 0; k < deg; ++k) {
    pw *= dir;
    z[static_cast<std::size_t>(k)] = start_radius * pw / std::abs(pw);
  }
  auto eval = [&](cd x) {
    cd acc(0.0, 0.0);
    for (std::size_t k = c.size(); k-- > 0;) acc = acc * x + c[k];
    return acc;
  };
  const double lead = c.back();
  for (int iter = 0; iter < 800; ++iter) {
    double moved = 0.0;
    for (int k = 0; k < deg; ++k) {
      cd denom(lead, 0.0);
      for (int j = 0; j < deg; ++j)
        if (j != k) denom *= z[static_cast<std::size_t>(k)] - z[static_cast<std::size_t>(j)];
      const cd delta = eval(z[static_cast<std::size_t>(k)]) / denom;
      z[static_cast<std::size_t>(k)] -= delta;
      moved = std::max(moved, std::abs(delta));
    }
    if (moved < 1e-13 * start_radius) break;
  }
  return z;
}

struct IntPoly {
  std::vector<__int128> c{0};  // ascending powers

  static IntPoly constant(__int128 v) { return IntPoly{{v}}; }
  IntPoly operator*(const IntPoly& other) const {
    IntPoly prod;
    prod.c.assign(c.size() + other.c.size() - 1, 0);
    for (std::size_t i = 0; i < c.size(); ++i)
      for (std::size_t j = 0; j < other.c.size(); ++j) prod.c[i + j] += c[i] * other.c[j];
    return prod;
  }
  IntPoly operator+(const IntPoly& other) const {
    IntPoly sum;
    sum.c.assign(std::max(c.size(), other.c.size()), 0);
    for (std::size_t i = 0; i < c.size(); ++i) sum.c[i] += c[i];
    for (std::size_t i = 0; i < other.c.size(); ++i) sum.c[i] += other.c[i];
    return sum;
  }
  IntPoly operator-() const {
    IntPoly neg = *this;
    for (auto& v : neg.c) v = -v;
    return neg;
  }
};

struct ExactCharPoly {
  double scale = 1.0;          // D: the matrix D*G is integer
  std::vector<double> coeffs;  // det(D*G - y I), ascending in y; exact zeros stay zero
  std::vector<cd> roots;       // in G units (y / D)
};

// Entries of G are alpha A_ij/outdeg(j) + (1-alpha)/n with alpha =
// alpha_num/alpha_den, so D = alpha_den * n * lcm(outdegs) clears every
// denominator.  Cofactor expansion of det(D G - y I) over __int128 keeps all
// coefficients exact for n <= 7 (|coeffs| < n! * D^n < 2^127).
inline ExactCharPoly exact_char_poly(const gm::DirectedGraph& graph, int alpha_num = 17,
                                     int alpha_den = 20) {
  const int n = graph.n;
  if (n > 7) throw std::invalid_argument("exact_char_poly oracle: n too large");
  long long lcm = 1;
  for (int v = 0; v < n; ++v) lcm = std::lcm(lcm, static_cast<long long>(std::max(1, graph.out_degree(v))));
  const long long scale = static_cast<long long>(alpha_den) * n * lcm;

  std::vector<IntPoly> entries(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    const int outdeg = graph.out_degree(j);
    for (int i = 0; i < n; ++i) {
      __int128 m;
      if (outdeg == 0)
        m = static_cast<__int128>(alpha_den) * lcm;  // D * (1/n)
      else
        m = static_cast<__int128>(graph.has_edge(j, i) ? alpha_num * n * (lcm / outdeg) : 0) +
            static_cast<__int128>(alpha_den - alpha_num) * lcm;
      entries[static_cast<std::size_t>(i) * n + j] = IntPoly::constant(m);
      if (i == j) entries[static_cast<std::size_t>(i) * n + j].c.push_back(-1);  // minus y
    }
  }

  struct Expand {
    int n;
    const std::vector<IntPoly>& entries;
    IntPoly det(const std::vector<int>& rows, const std::vector<int>& cols) const {
      if (rows.size() == 1) return entries[static_cast<std::size_t>(rows[0]) * n + cols[0]];
      IntPoly acc = IntPoly::constant(0);
      const std::vector<int> sub_rows(rows.begin() + 1, rows.end());
      for (std::size_t c = 0; c < cols.size(); ++c) {
        std::vector<int> sub_cols;
        sub_cols.reserve(cols.size() - 1);
        for (std::size_t k = 0; k < cols.size(); ++k)
          if (k != c) sub_cols.push_back(cols[k]);
        IntPoly term =
            entries[static_cast<std::size_t>(rows[0]) * n + cols[c]] * det(sub_rows, sub_cols);
        acc = (c % 2 == 0) ? acc + term : acc + (-term);
      }
      return acc;
    }
  } expand{n, entries};

  std::vector<int> all(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) all[static_cast<std::size_t>(i)] = i;
  const IntPoly poly = expand.det(all, all);

  ExactCharPoly out;
  out.scale = static_cast<double>(scale);
  out.coeffs.resize(poly.c.size());
  for (std::size_t k = 0; k < poly.c.size(); ++k) out.coeffs[k] = static_cast<double>(poly.c[k]);
  out.roots = poly_roots(out.coeffs, static_cast<double>(scale));
  for (auto& r : out.roots) r /= static_cast<double>(scale);
  return out;
}

// Coefficient-space agreement: compare det(D G - yI) against the monic
// polynomial built from the computed eigenvalues (elementary symmetric
// functions in long double).  Two monic polynomials are close exactly when
// their root multisets are close, so this check stays rigorous for repeated
// eigenvalues where pointwise root distances degrade to eps^(1/k).
inline double char_poly_coeff_mismatch(const ExactCharPoly& oracle, std::span<const cd> lambdas) {
  const std::size_t n = lambdas.size();
  std::vector<std::complex<long double>> coeff{1.0L};
  for (std::size_t i = 0; i < n; ++i) {
    const std::complex<long double> mu(
        static_cast<long double>(oracle.scale) * static_cast<long double>(lambdas[i].real()),
        static_cast<long double>(oracle.scale) * static_cast<long double>(lambdas[i].imag()));
    std::vector<std::complex<long double>> next(coeff.size() + 1, 0.0L);
    for (std::size_t k = 0; k < coeff.size(); ++k) {
      next[k + 1] += coeff[k];
      next[k] -= mu * coeff[k];
    }
    coeff = std::move(next);
  }
  // det(D G - yI) = (-1)^n prod(y - mu_i); the leading coefficient is
  // exactly +-1, reuse it as the sign.
  const long double sign = oracle.coeffs.back();
  long double scale_max = 0.0L;
  for (double v : oracle.coeffs) scale_max = std::max(scale_max, std::abs(static_cast<long double>(v)));
  long double worst = 0.0L;
  for (std::size_t k = 0; k <= n; ++k) {
    const long double diff =
        std::abs(sign * coeff[k] - std::complex<long double>(oracle.coeffs[k], 0.0L));
    worst = std::max(worst, diff / scale_max);
  }
  return static_cast<double>(worst);
}

struct SpectrumMatch {
  double worst_isolated = 0.0;   // pointwise distance on well-separated roots
  double coeff_mismatch = 0.0;   // relative, coefficient space
  bool zero_counts_agree = true; // #roots below the cluster radius matches
  int isolated_roots = 0;

  bool ok(double pointwise_tol = 1e-8, double coeff_tol = 1e-8) const {
    return worst_isolated <= pointwise_tol && coeff_mismatch <= coeff_tol && zero_counts_agree;
  }
};

// Multiplicity-aware comparison of a computed eigenvalue multiset against
// the exact-characteristic-polynomial oracle.
inline SpectrumMatch match_spectrum(const ExactCharPoly& oracle, std::span<const cd> lambdas,
                                    double cluster_radius = 1e-4) {
  SpectrumMatch match;
  match.coeff_mismatch = char_poly_coeff_mismatch(oracle, lambdas);

  int zero_roots = 0, zero_lambdas = 0;
  for (const cd& r : oracle.roots)
    if (std::abs(r) < cluster_radius) ++zero_roots;
  for (const cd& l : lambdas)
    if (std::abs(l) < cluster_radius) ++zero_lambdas;
  match.zero_counts_agree = zero_roots == zero_lambdas;

  // pointwise check on oracle roots that are isolated (no other root within
  // the cluster radius): each must be hit by some computed eigenvalue
  for (std::size_t i = 0; i < oracle.roots.size(); ++i) {
    bool isolated = std::abs(oracle.roots[i]) >= cluster_radius;
    for (std::size_t j = 0; isolated && j < oracle.roots.size(); ++j)
      if (j != i && std::abs(oracle.roots[i] - oracle.roots[j]) < cluster_radius) isolated = false;
    if (!isolated) continue;
    ++match.isolated_roots;
    double best = 1e300;
    for (const cd& l : lambdas) best = std::min(best, std::abs(l - oracle.roots[i]));
    match.worst_isolated = std::max(match.worst_isolated, best);
  }
  return match;
}

// Greedy multiset matching: max over a of min distance to remaining b.
inline double multiset_distance(std::vector<cd> a, std::vector<cd> b) {
  if (a.size() != b.size()) return 1e300;
  double worst = 0.0;
  for (const cd& x : a) {
    double best = 1e300;
    std::size_t best_j = 0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      const double d = std::abs(x - b[j]);
      if (d < best) {
        best = d;
        best_j = j;
      }
    }
    worst = std::max(worst, best);
    b.erase(b.begin() + static_cast<std::ptrdiff_t>(best_j));
  }
  return worst;
}

// Reference dense Google matrix straight from the definition:
// G_ij = alpha A_ij / outdeg(j) + alpha [dangling j]/n + (1-alpha)/n.
inline gm::DenseMatrix reference_google(const gm::DirectedGraph& graph, double alpha) {
  gm::DenseMatrix g;
  g.n = graph.n;
  g.a.assign(static_cast<std::size_t>(graph.n) * static_cast<std::size_t>(graph.n), 0.0);
  for (int j = 0; j < graph.n; ++j) {
    const int outdeg = graph.out_degree(j);
    for (int i = 0; i < graph.n; ++i) {
      double s_ij;
      if (outdeg == 0)
        s_ij = 1.0 / static_cast<double>(graph.n);
      else
        s_ij = graph.has_edge(j, i) ? 1.0 / static_cast<double>(outdeg) : 0.0;
      g.at(i, j) = alpha * s_ij + (1.0 - alpha) / static_cast<double>(graph.n);
    }
  }
  return g;
}

inline std::vector<double> dense_matvec(const gm::DenseMatrix& g, const std::vector<double>& v) {
  std::vector<double> out(static_cast<std::size_t>(g.n), 0.0);
  for (int i = 0; i < g.n; ++i) {
    double acc = 0.0;
    for (int j = 0; j < g.n; ++j) acc += g.at(i, j) * v[static_cast<std::size_t>(j)];
    out[static_cast<std::size_t>(i)] = acc;
  }
  return out;
}

inline double trace_of_square(const gm::DenseMatrix& g) {
  double acc = 0.0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) acc += g.at(i, j) * g.at(j, i);
  return acc;
}

// Uniform random simple digraph with the given edge probability.
inline gm::DirectedGraph random_graph(int n, double edge_prob, gm::Rng& rng) {
  std::vector<std::pair<int, int>> edges;
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v)
      if (u != v && rng.next_double() < edge_prob) edges.emplace_back(u, v);
  return gm::DirectedGraph::from_edges(n, edges);
}

}  // namespace oracle
