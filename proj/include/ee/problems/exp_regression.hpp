#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"

namespace ee {

// Observed pairs for the two-component exponential regression; the first
// covariate coordinate is the intercept and must be 1.
struct ExpRegData {
  std::vector<double> y;
  std::vector<std::array<double, 2>> x;
  double sigma2 = 100.0;  // prior variance of each coefficient

  std::size_t size() const { return y.size(); }

  std::string to_csv() const {
    std::string out = "y,x1,x2\n";
    for (std::size_t i = 0; i < y.size(); ++i) {
      append_csv_number(out, y[i]);
      out.push_back(',');
      append_csv_number(out, x[i][0]);
      out.push_back(',');
      append_csv_number(out, x[i][1]);
      out.push_back('\n');
    }
    return out;
  }
};

struct ExpRegTruth {
  double alpha = 0.3;
  std::array<double, 2> beta1 = {1.0, 2.0};
  std::array<double, 2> beta2 = {4.0, 5.0};
  std::uint64_t seed = 0;
};

// y ~ alpha Exp(mean theta_1(x)) + (1-alpha) Exp(mean theta_2(x)),
// theta_j(x) = exp(beta_j . x), x = (1, u), u ~ Unif(0, 2)
inline ExpRegData simulate_expreg(std::size_t n, const ExpRegTruth& truth, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x5e9));
  ExpRegData data;
  data.y.reserve(n);
  data.x.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    double u = 2.0 * rng.uniform01();
    const auto& beta = rng.uniform01() < truth.alpha ? truth.beta1 : truth.beta2;
    double theta = std::exp(beta[0] + beta[1] * u);
    double y = -theta * std::log1p(-rng.uniform01());
    data.y.push_back(y);
    data.x.push_back({1.0, u});
  }
  return data;
}

// State layout: (alpha, b11, b12, b21, b22).  Energy is the negative
// log-posterior with the additive constant fixed at zero; alpha outside
// (0,1) is assigned infinite energy.  The proposal walks logit(alpha)
// jointly with a Gaussian step on all four coefficients, with the Jacobian
// folded into the proposal ratio.
struct ExpRegression {
  using state_type = std::array<double, 5>;

  ExpRegData data;

  double energy(const state_type& s) const {
    double alpha = s[0];
    if (!(alpha > 0.0 && alpha < 1.0)) return std::numeric_limits<double>::infinity();
    double la = std::log(alpha), l1a = std::log1p(-alpha);
    double acc = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      double xb1 = s[1] + s[2] * data.x[i][1];
      double xb2 = s[3] + s[4] * data.x[i][1];
      double t1 = la - xb1 - data.y[i] * std::exp(-xb1);
      double t2 = l1a - xb2 - data.y[i] * std::exp(-xb2);
      double m = std::max(t1, t2);
      if (m == -std::numeric_limits<double>::infinity()) return std::numeric_limits<double>::infinity();
      acc += m + std::log(std::exp(t1 - m) + std::exp(t2 - m));
    }
    // grouped per coefficient block so the label-swap symmetry
    // h(a,b1,b2) = h(1-a,b2,b1) holds bitwise, not just approximately
    double prior = ((s[1] * s[1] + s[2] * s[2]) + (s[3] * s[3] + s[4] * s[4])) / (2.0 * data.sigma2);
    return -acc + prior;
  }

  Proposal<state_type> propose(const state_type& s, double step, Rng& rng) const {
    state_type t = s;
    double logit = std::log(s[0]) - std::log1p(-s[0]);
    logit += step * rng.normal();
    t[0] = 1.0 / (1.0 + std::exp(-logit));
    for (std::size_t k = 1; k < 5; ++k) t[k] += step * rng.normal();
    double ratio = std::log(t[0]) + std::log1p(-t[0]) - std::log(s[0]) - std::log1p(-s[0]);
    return {t, ratio};
  }

  void serialize_state(const state_type& s, std::string& out) const {
    for (double v : s) put_f64(out, v);
  }
  state_type deserialize_state(const std::string& bytes) const {
    ByteReader rd(bytes);
    state_type s;
    for (double& v : s) v = rd.f64();
    return s;
  }
  std::string csv_header() const { return "alpha,b11,b12,b21,b22"; }
  void append_csv_fields(const state_type& s, std::string& out) const {
    for (std::size_t k = 0; k < 5; ++k) {
      if (k) out.push_back(',');
      append_csv_number(out, s[k]);
    }
  }
};

}  // namespace ee
