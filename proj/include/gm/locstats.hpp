#pragma once

#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "gm/spectra.hpp"

namespace gm {

// Inverse participation ratio (sum |psi_j|^2)^2 / sum |psi_j|^4: the
// effective number of nodes supporting the vector.  Scale invariant,
// 1 <= xi <= dim.
double ipr(std::span<const std::complex<double>> psi);
double ipr(std::span<const double> psi);

// Relaxation rate gamma = -2 ln|lambda|; +inf for |lambda| = 0.
double gamma_of(std::complex<double> lambda);

struct GammaDensity {
  double bin_width = 0.25;
  double gamma_max = 10.0;
  std::vector<double> w;             // density per bin, integrates to 1 over [0, gamma_max]
  std::vector<std::int64_t> counts;  // raw per-bin counts
  std::int64_t excluded_zero_states = 0;   // |lambda| < lambda_floor
  std::int64_t excluded_out_of_range = 0;  // retained but gamma > gamma_max
  std::int64_t samples = 0;                // states inside [0, gamma_max]
};

// Normalized histogram W(gamma) of relaxation rates over retained
// eigenvalues (unit eigenvalue lands at gamma = 0; |lambda| < lambda_floor
// excluded and counted).  Throws NumericalError when no state survives.
GammaDensity density_w(std::span<const std::complex<double>> eigenvalues,
                       double bin_width = 0.25, double gamma_max = 10.0,
                       double lambda_floor = 1e-8);

struct IprCurve {
  double bin_width = 0.25;
  double gamma_max = 10.0;
  std::vector<double> mean_xi;  // valid where count > 0
  std::vector<int> count;
};

// Per-bin arithmetic mean of xi over the spectrum's verified eigenpairs.
IprCurve ipr_vs_gamma(const SpectrumResult& spectrum, double bin_width = 0.25,
                      double gamma_max = 10.0);

struct ScalingFit {
  double mu = 0.0;  // xi ~ N^mu
  double intercept = 0.0;
  double stderr_ = 0.0;
  std::vector<double> sizes;
};

// Log-log regression of xi against N; needs >= 3 strictly increasing sizes.
ScalingFit scaling_fit(std::span<const double> sizes, std::span<const double> xis);

struct GapEstimate {
  double gamma_c = 0.0;      // smallest gamma excluding the unit eigenvalue
  double gamma_alpha = 0.0;  // 2 |ln alpha|
  std::optional<double> gamma_d;
};

GapEstimate estimate_gap(const SpectrumResult& spectrum, double alpha);

// Delocalization edge: lower edge of the smallest gamma bin whose per-bin
// growth exponent exceeds mu_star in that bin and every fitted bin above it.
// absent when no bin qualifies.  The curves must share binning; sizes match
// curves elementwise.
std::optional<double> delocalization_edge(std::span<const IprCurve> curves,
                                          std::span<const double> sizes, double mu_star = 0.3);

}  // namespace gm
