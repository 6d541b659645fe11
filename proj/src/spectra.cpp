#include "gm/spectra.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <map>
#include <string>

#include "gm/csv.hpp"
#include "gm/errors.hpp"
#include "gm/locstats.hpp"
#include "gm/rng.hpp"

namespace gm {

namespace {

using cd = std::complex<double>;

// Balanced Hessenberg factorization of a real matrix, kept around so that
// eigenvalues (QR) and eigenvectors (inverse iteration + back-transform)
// share one O(n^3) reduction.
struct Reduction {
  int n = 0;
  lapack_int ilo = 1, ihi = 1;
  std::vector<double> reflectors;  // dgehrd output (col-major), holds Q
  std::vector<double> tau;
  std::vector<double> scale;       // dgebal output
  std::vector<double> hess;        // clean upper-Hessenberg H (col-major)
  double hnorm = 0.0;              // Frobenius norm of H
};

Reduction reduce(const DenseMatrix& g) {
  Reduction red;
  const int n = g.n;
  red.n = n;
  red.reflectors.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      red.reflectors[static_cast<std::size_t>(j) * n + i] = g.at(i, j);

  red.scale.resize(static_cast<std::size_t>(n));
  lapack_int info = LAPACKE_dgebal(LAPACK_COL_MAJOR, 'B', n, red.reflectors.data(), n,
                                   &red.ilo, &red.ihi, red.scale.data());
  if (info != 0) throw NumericalError("dgebal failed, info=" + std::to_string(info));

  red.tau.resize(static_cast<std::size_t>(std::max(1, n - 1)));
  info = LAPACKE_dgehrd(LAPACK_COL_MAJOR, n, red.ilo, red.ihi, red.reflectors.data(), n,
                        red.tau.data());
  if (info != 0) throw NumericalError("dgehrd failed, info=" + std::to_string(info));

  // Upper-Hessenberg part; below the subdiagonal live the reflectors.
  red.hess.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
  double ss = 0.0;
  for (int j = 0; j < n; ++j) {
    const int top = std::min(j + 1, n - 1);
    for (int i = 0; i <= top; ++i) {
      const double v = red.reflectors[static_cast<std::size_t>(j) * n + i];
      red.hess[static_cast<std::size_t>(j) * n + i] = v;
      ss += v * v;
    }
  }
  red.hnorm = std::sqrt(ss);
  return red;
}

std::vector<cd> qr_eigenvalues(const Reduction& red) {
  const int n = red.n;
  std::vector<double> h(red.hess);  // dhseqr destroys its input
  std::vector<double> wr(static_cast<std::size_t>(n)), wi(static_cast<std::size_t>(n));
  double z = 0.0;
  const lapack_int info = LAPACKE_dhseqr(LAPACK_COL_MAJOR, 'E', 'N', n, red.ilo, red.ihi,
                                         h.data(), n, wr.data(), wi.data(), &z, 1);
  if (info > 0)
    throw NumericalError("QR iteration failed to converge; eigenvalues " +
                         std::to_string(info) + ".." + std::to_string(n) +
                         " are the only converged block");
  if (info < 0) throw NumericalError("dhseqr: bad argument " + std::to_string(-info));
  std::vector<cd> lambdas(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) lambdas[static_cast<std::size_t>(i)] = cd(wr[static_cast<std::size_t>(i)], wi[static_cast<std::size_t>(i)]);
  return lambdas;
}

// LU of a complex upper-Hessenberg matrix with partial pivoting between the
// two candidate rows of each column; O(n^2).
struct HessenbergLU {
  int n = 0;
  std::vector<cd> m;       // col-major; U above diagonal, multipliers on subdiagonal slots
  std::vector<char> swapped;

  void factor(std::span<const double> hess, int n_, cd sigma) {
    n = n_;
    m.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    swapped.assign(static_cast<std::size_t>(std::max(0, n - 1)), 0);
    for (int j = 0; j < n; ++j) {
      const int top = std::min(j + 1, n - 1);
      for (int i = 0; i <= top; ++i)
        m[static_cast<std::size_t>(j) * n + i] = cd(hess[static_cast<std::size_t>(j) * n + i], 0.0);
      for (int i = top + 1; i < n; ++i) m[static_cast<std::size_t>(j) * n + i] = cd(0.0, 0.0);
      m[static_cast<std::size_t>(j) * n + j] -= sigma;
    }
    const double tiny = 1e-300;
    for (int k = 0; k + 1 < n; ++k) {
      cd* colk = &m[static_cast<std::size_t>(k) * n];
      if (std::abs(colk[k + 1]) > std::abs(colk[k])) {
        swapped[static_cast<std::size_t>(k)] = 1;
        for (int j = k; j < n; ++j)
          std::swap(m[static_cast<std::size_t>(j) * n + k], m[static_cast<std::size_t>(j) * n + k + 1]);
      }
      if (std::abs(colk[k]) < tiny) colk[k] = cd(tiny, 0.0);
      const cd mult = colk[k + 1] / colk[k];
      colk[k + 1] = mult;  // store multiplier in the eliminated slot
      for (int j = k + 1; j < n; ++j)
        m[static_cast<std::size_t>(j) * n + k + 1] -= mult * m[static_cast<std::size_t>(j) * n + k];
    }
    if (n > 0 && std::abs(m[static_cast<std::size_t>(n - 1) * n + n - 1]) < tiny)
      m[static_cast<std::size_t>(n - 1) * n + n - 1] = cd(tiny, 0.0);
  }

  void solve(std::vector<cd>& b) const {
    for (int k = 0; k + 1 < n; ++k) {
      if (swapped[static_cast<std::size_t>(k)]) std::swap(b[static_cast<std::size_t>(k)], b[static_cast<std::size_t>(k) + 1]);
      b[static_cast<std::size_t>(k) + 1] -= m[static_cast<std::size_t>(k) * n + k + 1] * b[static_cast<std::size_t>(k)];
    }
    for (int i = n - 1; i >= 0; --i) {
      cd acc = b[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < n; ++j) acc -= m[static_cast<std::size_t>(j) * n + i] * b[static_cast<std::size_t>(j)];
      b[static_cast<std::size_t>(i)] = acc / m[static_cast<std::size_t>(i) * n + i];
    }
  }
};

double norm2(std::span<const cd> v) {
  double s = 0.0;
  for (const cd& x : v) s += std::norm(x);
  return std::sqrt(s);
}

void normalize(std::vector<cd>& v) {
  const double nrm = norm2(v);
  if (nrm > 0.0)
    for (cd& x : v) x /= nrm;
}

// Back-transform a Hessenberg-basis vector to the original basis:
// psi = D P (Q y), applied via dormhr then dgebak.
std::vector<cd> back_transform(const Reduction& red, const std::vector<cd>& y) {
  const int n = red.n;
  std::vector<double> cols(static_cast<std::size_t>(n) * 2);
  for (int i = 0; i < n; ++i) {
    cols[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)].real();
    cols[static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(i)].imag();
  }
  lapack_int info = LAPACKE_dormhr(LAPACK_COL_MAJOR, 'L', 'N', n, 2, red.ilo, red.ihi,
                                   red.reflectors.data(), n, red.tau.data(), cols.data(), n);
  if (info != 0) throw NumericalError("dormhr failed, info=" + std::to_string(info));
  info = LAPACKE_dgebak(LAPACK_COL_MAJOR, 'B', 'R', n, red.ilo, red.ihi,
                        const_cast<double*>(red.scale.data()), 2, cols.data(), n);
  if (info != 0) throw NumericalError("dgebak failed, info=" + std::to_string(info));
  std::vector<cd> psi(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i)
    psi[static_cast<std::size_t>(i)] = cd(cols[static_cast<std::size_t>(i)], cols[static_cast<std::size_t>(n) + static_cast<std::size_t>(i)]);
  normalize(psi);
  return psi;
}

// Inverse iteration for one eigenvalue.  `mates` are Hessenberg-basis
// vectors of already-solved eigenvalues within the cluster tolerance; the
// iterate is orthogonalized against them every sweep.
Eigenpair invert_one(const DenseMatrix& g, const Reduction& red, cd lambda,
                     const std::vector<const std::vector<cd>*>& mates, Rng& rng,
                     HessenbergLU& lu, std::vector<cd>* hess_basis_out) {
  const int n = red.n;
  const double delta = 1e-13 * red.hnorm;
  const double threshold = 1e-8 * std::sqrt(static_cast<double>(n));
  constexpr int kMaxRestarts = 3;
  constexpr int kSweeps = 5;

  lu.factor(red.hess, n, lambda + cd(delta, 0.0));

  Eigenpair best;
  best.lambda = lambda;
  best.residual = std::numeric_limits<double>::infinity();

  std::vector<cd> y(static_cast<std::size_t>(n));
  for (int restart = 0; restart <= kMaxRestarts; ++restart) {
    for (auto& x : y) x = cd(rng.next_signed(), rng.next_signed());
    normalize(y);
    for (int sweep = 0; sweep < kSweeps; ++sweep) {
      lu.solve(y);
      const double growth = norm2(y);
      for (const auto* mate : mates) {
        cd proj(0.0, 0.0);
        for (int i = 0; i < n; ++i) proj += std::conj((*mate)[static_cast<std::size_t>(i)]) * y[static_cast<std::size_t>(i)];
        for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] -= proj * (*mate)[static_cast<std::size_t>(i)];
      }
      normalize(y);
      // (H - sigma I) y_unnorm = y_prev with ||y_prev|| = 1, so the
      // Hessenberg residual is about 1/growth (+ the delta shift).
      if (sweep >= 1 && growth > 0.0 && 1.0 / growth + delta < 0.05 * threshold) break;
    }
    Eigenpair candidate;
    candidate.lambda = lambda;
    candidate.psi = back_transform(red, y);
    candidate.residual = residual(g, candidate);
    if (candidate.residual < best.residual) {
      best = std::move(candidate);
      if (hess_basis_out) *hess_basis_out = y;
    }
    if (best.residual <= threshold) break;
  }
  best.verified = best.residual <= threshold;
  return best;
}

std::vector<Eigenpair> vectors_for(const DenseMatrix& g, const Reduction& red,
                                   std::span<const cd> lambdas, std::uint64_t seed) {
  constexpr double kClusterTol = 1e-10;
  Rng rng(seed);
  HessenbergLU lu;
  std::vector<Eigenpair> out;
  out.reserve(lambdas.size());

  // A conjugate partner is resolved by conjugating the already-computed
  // vector (the back-transform is real-linear, so the Hessenberg-basis
  // vector conjugates too); each solved entry is consumed once so exact
  // duplicates still get their own, orthogonalized, iteration.  The
  // residual check below stays independent either way.
  std::map<std::pair<double, double>, std::size_t> solved;
  std::vector<std::vector<cd>> hess_basis(lambdas.size());

  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    const cd lambda = lambdas[k];
    if (lambda.imag() != 0.0) {
      if (const auto it = solved.find({lambda.real(), -lambda.imag()}); it != solved.end()) {
        const std::size_t partner = it->second;
        solved.erase(it);
        Eigenpair pair;
        pair.lambda = lambda;
        pair.psi.resize(out[partner].psi.size());
        for (std::size_t i = 0; i < pair.psi.size(); ++i) pair.psi[i] = std::conj(out[partner].psi[i]);
        pair.residual = residual(g, pair);
        pair.verified = pair.residual <= 1e-8 * std::sqrt(static_cast<double>(red.n));
        if (!hess_basis[partner].empty()) {
          hess_basis[k].resize(hess_basis[partner].size());
          for (std::size_t i = 0; i < hess_basis[k].size(); ++i)
            hess_basis[k][i] = std::conj(hess_basis[partner][i]);
        }
        out.push_back(std::move(pair));
        continue;
      }
    }
    std::vector<const std::vector<cd>*> mates;
    for (std::size_t j = 0; j < k; ++j)
      if (std::abs(lambdas[j] - lambda) < kClusterTol && !hess_basis[j].empty())
        mates.push_back(&hess_basis[j]);
    out.push_back(invert_one(g, red, lambda, mates, rng, lu, &hess_basis[k]));
    solved.insert({{lambda.real(), lambda.imag()}, k});
  }
  return out;
}

}  // namespace

SpectrumResult full_spectrum(const DenseMatrix& g, double lambda_floor) {
  SpectrumOptions options;
  options.lambda_floor = lambda_floor;
  return analyze_spectrum(g, options);
}

SpectrumResult analyze_spectrum(const DenseMatrix& g, const SpectrumOptions& options) {
  const Reduction red = reduce(g);
  SpectrumResult result;
  result.lambda_floor = options.lambda_floor;
  result.eigenvalues = qr_eigenvalues(red);
  std::sort(result.eigenvalues.begin(), result.eigenvalues.end(), [](const cd& a, const cd& b) {
    const double ma = std::abs(a), mb = std::abs(b);
    if (ma != mb) return ma > mb;
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  result.zero_count = 0;
  for (const cd& lambda : result.eigenvalues)
    if (std::abs(lambda) < options.lambda_floor) ++result.zero_count;

  if (options.vectors != SpectrumOptions::Vectors::none) {
    std::vector<cd> selected;
    for (const cd& lambda : result.eigenvalues) {
      const double mod = std::abs(lambda);
      if (mod < options.lambda_floor) continue;
      if (options.vectors == SpectrumOptions::Vectors::gamma_window) {
        const double gamma = std::max(0.0, -2.0 * std::log(mod));
        if (gamma < options.gamma_lo || gamma > options.gamma_hi) continue;
      }
      selected.push_back(lambda);
    }
    result.pairs = vectors_for(g, red, selected, options.seed);
  }
  return result;
}

std::vector<Eigenpair> eigenvectors(const DenseMatrix& g,
                                    std::span<const std::complex<double>> lambdas,
                                    std::uint64_t seed) {
  const Reduction red = reduce(g);
  return vectors_for(g, red, lambdas, seed);
}

double residual(const DenseMatrix& g, const Eigenpair& pair) {
  const int n = g.n;
  if (static_cast<int>(pair.psi.size()) != n)
    throw std::invalid_argument("residual: dimension mismatch");
  double ss = 0.0;
  for (int i = 0; i < n; ++i) {
    cd acc(0.0, 0.0);
    const double* row = &g.a[static_cast<std::size_t>(i) * static_cast<std::size_t>(n)];
    double acc_re = 0.0, acc_im = 0.0;
    for (int j = 0; j < n; ++j) {
      acc_re += row[j] * pair.psi[static_cast<std::size_t>(j)].real();
      acc_im += row[j] * pair.psi[static_cast<std::size_t>(j)].imag();
    }
    acc = cd(acc_re, acc_im) - pair.lambda * pair.psi[static_cast<std::size_t>(i)];
    ss += std::norm(acc);
  }
  return std::sqrt(ss);
}

void write_spectrum_csv(const SpectrumResult& spectrum, const std::string& path) {
  // xi looked up by eigenvalue; duplicates consume matching pairs in order
  std::multimap<std::pair<double, double>, double> xi;
  for (const auto& pair : spectrum.pairs)
    if (pair.verified)
      xi.insert({{pair.lambda.real(), pair.lambda.imag()}, ipr(pair.psi)});

  CsvWriter csv(path);
  csv.row({"re", "im", "abs", "gamma", "xi"});
  for (const auto& lambda : spectrum.eigenvalues) {
    const double mod = std::abs(lambda);
    std::string gamma_field, xi_field;
    if (mod >= spectrum.lambda_floor)
      gamma_field = format_double(std::max(0.0, -2.0 * std::log(mod)));
    if (auto it = xi.find({lambda.real(), lambda.imag()}); it != xi.end()) {
      xi_field = format_double(it->second);
      xi.erase(it);
    }
    csv.row({CsvWriter::num(lambda.real()), CsvWriter::num(lambda.imag()), CsvWriter::num(mod),
             gamma_field, xi_field});
  }
}

}  // namespace gm
