#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>

#include "ee/problems/gaussian_mixture.hpp"

namespace ee {

// Deterministic midpoint-rule Boltzmann average of g over the tempered
// mixture density f^{1/T} on [lo,hi]^2.  Refuses grids that do not cover
// every component's 6-sigma ball.
template <class G>
double gm_quadrature(const GaussianMixture& mix, G&& g, double T, double lo = -2.0,
                     double hi = 12.0, double h = 0.01) {
  if (T <= 0) throw std::invalid_argument("gm_quadrature: temperature must be positive");
  for (std::size_t i = 0; i < mix.means.size(); ++i) {
    double r = 6.0 * mix.sigmas[i];
    if (mix.means[i][0] - r < lo || mix.means[i][0] + r > hi || mix.means[i][1] - r < lo ||
        mix.means[i][1] + r > hi)
      throw std::invalid_argument("gm_quadrature: grid misses a component's 6-sigma support");
  }
  std::size_t n = static_cast<std::size_t>(std::llround((hi - lo) / h));
  double num = 0, den = 0;
  for (std::size_t a = 0; a < n; ++a) {
    double x = lo + (static_cast<double>(a) + 0.5) * h;
    for (std::size_t b = 0; b < n; ++b) {
      GaussianMixture::state_type p{x, lo + (static_cast<double>(b) + 0.5) * h};
      double w = std::exp(-mix.energy(p) / T);
      num += w * g(p);
      den += w;
    }
  }
  return num / den;
}

// closed forms for the far-tail references of the equal-weight mixture
inline double gm20_tail_corner_truth() {
  // quarter-plane corner at the fourth mean, outside radius 4*sigma: the
  // quadrant indicator and the radius are independent under the isotropic
  // component, all other components are dozens of sigmas away
  return 0.05 * 0.25 * std::exp(-8.0);
}

inline bool gm20_in_tail_corner(const GaussianMixture::state_type& x) {
  double dx = x[0] - 8.41, dy = x[1] - 1.68;
  return x[0] > 8.41 && x[1] < 1.68 && dx * dx + dy * dy > 16.0 * 0.01;
}

inline bool gm20_in_tail_radius(const GaussianMixture::state_type& x) {
  return x[0] * x[0] + x[1] * x[1] > 175.0;
}

}  // namespace ee
