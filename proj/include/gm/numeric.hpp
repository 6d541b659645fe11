#pragma once

#include <cmath>
#include <cstddef>
#include <span>

namespace gm {

// Compensated (Kahan) summation.  Plain accumulation loses ~n*eps which is
// visible against the 1e-12 mass tolerances at n = 2^19.
inline double kahan_sum(std::span<const double> x) {
  double s = 0.0, c = 0.0;
  for (double v : x) {
    const double y = v - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

inline double l1_norm(std::span<const double> x) {
  double s = 0.0, c = 0.0;
  for (double v : x) {
    const double y = std::abs(v) - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

inline double l1_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0, c = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double y = std::abs(a[i] - b[i]) - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  return s;
}

}  // namespace gm
