#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "gm/gmatrix.hpp"

namespace gm {

struct Eigenpair {
  std::complex<double> lambda;
  std::vector<std::complex<double>> psi;  // right eigenvector, L2-normalized
  double residual = 0.0;                  // ||G psi - lambda psi||_2
  bool verified = false;                  // residual <= 1e-8 sqrt(n)
};

struct SpectrumResult {
  std::vector<std::complex<double>> eigenvalues;  // all n, sorted by decreasing |lambda|
  std::vector<Eigenpair> pairs;                   // vectors for selected eigenvalues
  int zero_count = 0;                             // #{|lambda| < lambda_floor}
  double lambda_floor = 1e-8;
};

struct SpectrumOptions {
  double lambda_floor = 1e-8;
  enum class Vectors { none, all, gamma_window } vectors = Vectors::none;
  // gamma_window selects eigenvalues with gamma = -2 ln|lambda| in [lo, hi]
  // (and |lambda| >= lambda_floor); `all` takes every retained eigenvalue.
  double gamma_lo = 0.0;
  double gamma_hi = 10.0;
  std::uint64_t seed = 1;
};

// All n eigenvalues of the real nonsymmetric matrix: balancing, Householder
// reduction to Hessenberg form, implicitly shifted QR.  Throws
// NumericalError naming the stuck block if QR stalls.
SpectrumResult full_spectrum(const DenseMatrix& g, double lambda_floor = 1e-8);

// Right eigenvectors by inverse iteration on the Hessenberg form in complex
// arithmetic: seeded random start, a tiny diagonal shift guarding exact
// singularity, 2-5 solves with renormalization, up to 3 restarts with fresh
// starts.  Eigenvalues closer than 1e-10 are orthogonalized against each
// other so clusters do not collapse onto one vector.  Pairs that never meet
// the residual threshold come back flagged unverified.
std::vector<Eigenpair> eigenvectors(const DenseMatrix& g,
                                    std::span<const std::complex<double>> lambdas,
                                    std::uint64_t seed = 1);

// One-pass driver: factor once, eigenvalues always, vectors per options.
SpectrumResult analyze_spectrum(const DenseMatrix& g, const SpectrumOptions& options);

// ||G psi - lambda psi||_2 recomputed directly from the dense matrix,
// independent of the solver path.
double residual(const DenseMatrix& g, const Eigenpair& pair);

// Spectrum CSV: re, im, abs, gamma, xi columns; gamma blank below the floor,
// xi blank when no vector was computed.  xi values are matched to
// eigenvalues by the pair's lambda.
void write_spectrum_csv(const SpectrumResult& spectrum, const std::string& path);

}  // namespace gm
