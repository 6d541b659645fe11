#include "gm/locstats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "gm/errors.hpp"
#include "gm/linfit.hpp"

namespace gm {

namespace {

// gamma of a retained eigenvalue, clamped so |lambda| = 1 + O(eps) cannot
// land at a negative rate.
double clamped_gamma(std::complex<double> lambda) {
  return std::max(0.0, -2.0 * std::log(std::abs(lambda)));
}

}  // namespace

double ipr(std::span<const std::complex<double>> psi) {
  double s2 = 0.0, s4 = 0.0;
  for (const auto& x : psi) {
    const double m2 = std::norm(x);
    s2 += m2;
    s4 += m2 * m2;
  }
  if (s4 <= 0.0) throw std::invalid_argument("ipr: zero vector");
  return s2 * s2 / s4;
}

double ipr(std::span<const double> psi) {
  double s2 = 0.0, s4 = 0.0;
  for (double x : psi) {
    const double m2 = x * x;
    s2 += m2;
    s4 += m2 * m2;
  }
  if (s4 <= 0.0) throw std::invalid_argument("ipr: zero vector");
  return s2 * s2 / s4;
}

double gamma_of(std::complex<double> lambda) {
  const double mod = std::abs(lambda);
  if (mod == 0.0) return std::numeric_limits<double>::infinity();
  return -2.0 * std::log(mod);
}

GammaDensity density_w(std::span<const std::complex<double>> eigenvalues, double bin_width,
                       double gamma_max, double lambda_floor) {
  if (!(bin_width > 0.0) || !(gamma_max > 0.0))
    throw std::invalid_argument("density_w: bin_width and gamma_max must be positive");
  GammaDensity density;
  density.bin_width = bin_width;
  density.gamma_max = gamma_max;
  const int bins = static_cast<int>(std::ceil(gamma_max / bin_width));
  density.counts.assign(static_cast<std::size_t>(bins), 0);

  for (const auto& lambda : eigenvalues) {
    if (std::abs(lambda) < lambda_floor) {
      ++density.excluded_zero_states;
      continue;
    }
    const double gamma = clamped_gamma(lambda);
    const int b = static_cast<int>(gamma / bin_width);
    if (b < 0 || b >= bins) {
      ++density.excluded_out_of_range;
      continue;
    }
    ++density.counts[static_cast<std::size_t>(b)];
    ++density.samples;
  }
  if (density.samples == 0) throw NumericalError("density_w: every state excluded");

  density.w.resize(static_cast<std::size_t>(bins));
  const double norm = static_cast<double>(density.samples) * bin_width;
  for (int b = 0; b < bins; ++b)
    density.w[static_cast<std::size_t>(b)] = static_cast<double>(density.counts[static_cast<std::size_t>(b)]) / norm;
  return density;
}

IprCurve ipr_vs_gamma(const SpectrumResult& spectrum, double bin_width, double gamma_max) {
  if (!(bin_width > 0.0) || !(gamma_max > 0.0))
    throw std::invalid_argument("ipr_vs_gamma: bin_width and gamma_max must be positive");
  IprCurve curve;
  curve.bin_width = bin_width;
  curve.gamma_max = gamma_max;
  const int bins = static_cast<int>(std::ceil(gamma_max / bin_width));
  curve.mean_xi.assign(static_cast<std::size_t>(bins), 0.0);
  curve.count.assign(static_cast<std::size_t>(bins), 0);

  for (const auto& pair : spectrum.pairs) {
    if (!pair.verified) continue;
    if (std::abs(pair.lambda) < spectrum.lambda_floor) continue;
    const double gamma = clamped_gamma(pair.lambda);
    const int b = static_cast<int>(gamma / bin_width);
    if (b < 0 || b >= bins) continue;
    curve.mean_xi[static_cast<std::size_t>(b)] += ipr(std::span<const std::complex<double>>(pair.psi));
    ++curve.count[static_cast<std::size_t>(b)];
  }
  for (int b = 0; b < bins; ++b)
    if (curve.count[static_cast<std::size_t>(b)] > 0)
      curve.mean_xi[static_cast<std::size_t>(b)] /= static_cast<double>(curve.count[static_cast<std::size_t>(b)]);
  return curve;
}

ScalingFit scaling_fit(std::span<const double> sizes, std::span<const double> xis) {
  if (sizes.size() < 3) throw std::invalid_argument("scaling_fit: need at least 3 sizes");
  if (sizes.size() != xis.size()) throw std::invalid_argument("scaling_fit: size mismatch");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (i > 0 && !(sizes[i] > sizes[i - 1]))
      throw std::invalid_argument("scaling_fit: sizes must be strictly increasing");
    if (!(xis[i] > 0.0)) throw std::invalid_argument("scaling_fit: xi must be positive");
    lx.push_back(std::log(sizes[i]));
    ly.push_back(std::log(xis[i]));
  }
  const LinearFit fit = linear_fit(lx, ly);
  ScalingFit out;
  out.mu = fit.slope;
  out.intercept = fit.intercept;
  out.stderr_ = fit.slope_stderr;
  out.sizes.assign(sizes.begin(), sizes.end());
  return out;
}

GapEstimate estimate_gap(const SpectrumResult& spectrum, double alpha) {
  GapEstimate gap;
  gap.gamma_alpha = 2.0 * std::abs(std::log(alpha));
  bool unit_skipped = false;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& lambda : spectrum.eigenvalues) {
    if (std::abs(lambda) < spectrum.lambda_floor) continue;
    if (!unit_skipped && std::abs(lambda - std::complex<double>(1.0, 0.0)) < 1e-8) {
      unit_skipped = true;  // eigenvalues are sorted, the first near-1 value is the unit one
      continue;
    }
    best = std::min(best, clamped_gamma(lambda));
  }
  gap.gamma_c = best;
  return gap;
}

std::optional<double> delocalization_edge(std::span<const IprCurve> curves,
                                          std::span<const double> sizes, double mu_star) {
  if (curves.size() != sizes.size() || curves.size() < 3)
    throw std::invalid_argument("delocalization_edge: need >= 3 sizes with matching curves");
  const std::size_t bins = curves[0].mean_xi.size();
  for (const auto& c : curves)
    if (c.mean_xi.size() != bins || c.bin_width != curves[0].bin_width)
      throw std::invalid_argument("delocalization_edge: curves must share binning");

  // per-bin growth exponent; bins missing data at any size carry no fit
  std::vector<std::optional<double>> mu(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    std::vector<double> ns, xs;
    for (std::size_t s = 0; s < curves.size(); ++s) {
      if (curves[s].count[b] == 0) continue;
      ns.push_back(sizes[s]);
      xs.push_back(curves[s].mean_xi[b]);
    }
    if (ns.size() >= 3) mu[b] = scaling_fit(ns, xs).mu;
  }

  std::optional<double> edge;
  bool tail_ok = true;
  for (std::size_t b = bins; b-- > 0;) {
    if (!mu[b]) continue;  // unfitted bins do not break persistence
    if (*mu[b] > mu_star && tail_ok)
      edge = static_cast<double>(b) * curves[0].bin_width;
    else
      tail_ok = false;
  }
  return edge;
}

}  // namespace gm
