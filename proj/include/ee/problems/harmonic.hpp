#pragma once

#include <array>
#include <cmath>
#include <string>

#include "ee/bytes.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"

namespace ee {

// n-dimensional harmonic well h(x) = ||x||^2 / 2.  Everything is known in
// closed form: the level-set volume grows like u^{n/2-1}, the slice mean of
// X_1^2 is 2u/n, E(X_1^2; T) = T and Z(T)/Z(1) = T^{n/2}.
template <std::size_t N>
struct Harmonic {
  using state_type = std::array<double, N>;

  double energy(const state_type& x) const {
    double acc = 0;
    for (double v : x) acc += v * v;
    return 0.5 * acc;
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
  std::string csv_header() const {
    std::string h;
    for (std::size_t i = 0; i < N; ++i) {
      if (i) h.push_back(',');
      h += "x" + std::to_string(i + 1);
    }
    return h;
  }
  void append_csv_fields(const state_type& x, std::string& out) const {
    for (std::size_t i = 0; i < N; ++i) {
      if (i) out.push_back(',');
      append_csv_number(out, x[i]);
    }
  }

  static double dos_exponent() { return static_cast<double>(N) / 2.0 - 1.0; }
  static double slice_mean_x1sq(double u) { return 2.0 * u / static_cast<double>(N); }
  static double boltzmann_x1sq(double T) { return T; }
  static double z_ratio(double T) { return std::pow(T, static_cast<double>(N) / 2.0); }
};

using Harmonic4D = Harmonic<4>;

}  // namespace ee
