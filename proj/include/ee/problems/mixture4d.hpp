#pragma once

#include <array>
#include <cmath>
#include <string>

#include "ee/bytes.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"

namespace ee {

// Two-well four-dimensional target
//   h(x) = -log[ exp(-||x-mu1||^2) + 0.25 exp(-||x-mu2||^2) ],
// mu1 = (3,0,0,0), mu2 = (-3,0,0,0).  At unit temperature the first
// coordinate is positive with probability 1/1.25 = 0.8.
struct Mixture4D {
  using state_type = std::array<double, 4>;

  static constexpr double kMu = 3.0;

  double energy(const state_type& x) const {
    double tail = x[1] * x[1] + x[2] * x[2] + x[3] * x[3];
    double a = -(x[0] - kMu) * (x[0] - kMu);
    double b = std::log(0.25) - (x[0] + kMu) * (x[0] + kMu);
    double m = std::max(a, b);
    return tail - (m + std::log(std::exp(a - m) + std::exp(b - m)));
  }

  Proposal<state_type> propose(const state_type& x, double step, Rng& rng) const {
    state_type y = x;
    for (double& v : y) v += step * rng.normal();
    return {y, 0.0};
  }

  void serialize_state(const state_type& x, std::string& out) const {
    for (double v : x) put_f64(out, v);
  }
  state_type deserialize_state(const std::string& bytes) const {
    ByteReader rd(bytes);
    state_type x;
    for (double& v : x) v = rd.f64();
    return x;
  }
  std::string csv_header() const { return "x1,x2,x3,x4"; }
  void append_csv_fields(const state_type& x, std::string& out) const {
    for (std::size_t i = 0; i < 4; ++i) {
      if (i) out.push_back(',');
      append_csv_number(out, x[i]);
    }
  }

  // P(X_1 > 0) at temperature T.  The two exponents share the off-axis
  // coordinates, so the tempered density factorizes and the first coordinate
  // has marginal proportional to [exp(-(t-3)^2) + 0.25 exp(-(t+3)^2)]^{1/T}.
  static double prob_x1_positive(double T, double half_width = 12.0, double h = 1e-4) {
    double pos = 0, all = 0;
    std::size_t n = static_cast<std::size_t>(2.0 * half_width / h);
    for (std::size_t k = 0; k < n; ++k) {
      double t = -half_width + (static_cast<double>(k) + 0.5) * h;
      double a = -(t - kMu) * (t - kMu);
      double b = std::log(0.25) - (t + kMu) * (t + kMu);
      double m = std::max(a, b);
      double v = std::exp((m + std::log(std::exp(a - m) + std::exp(b - m))) / T);
      all += v;
      if (t > 0) pos += v;
    }
    return pos / all;
  }
};

}  // namespace ee
