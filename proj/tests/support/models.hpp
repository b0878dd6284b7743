#pragma once

// Small targets used across the test suite: a 1D Gaussian for corridor checks
// and a fully enumerable discrete chain whose stationary laws can be written
// down exactly (the oracle side of the sampler tests).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"
#include "ee/sampler.hpp"

namespace eetest {

// Independent single-chain Metropolis loop mirroring the published update
// rule, stream 0 of the given seed; ground truth for degeneracy checks.
template <class M>
std::vector<std::pair<double, typename M::state_type>> reference_mh(const M& model,
                                                                    double floor_level,
                                                                    const ee::RunConfig& cfg,
                                                                    typename M::state_type x,
                                                                    std::uint64_t iterations) {
  double h = model.energy(x);
  ee::Rng rng(ee::derive_seed(cfg.seed, 0));
  double tau = cfg.initial_step;
  std::uint64_t wa = 0, wc = 0, rec = 0;
  bool frozen = false;
  std::vector<std::pair<double, typename M::state_type>> out;
  for (std::uint64_t n = 1; n <= iterations; ++n) {
    auto prop = model.propose(x, tau, rng);
    double hy = model.energy(prop.state);
    double la = std::max(h, floor_level) - std::max(hy, floor_level) + prop.log_ratio;
    bool acc = la >= 0 || rng.uniform01() < std::exp(la);
    if (acc) {
      x = prop.state;
      h = hy;
    }
    if (cfg.adapt_steps && !frozen) {
      ++wa;
      wc += acc;
      if (wa == cfg.adapt_window) {
        double rate = static_cast<double>(wc) / static_cast<double>(wa);
        if (rate > cfg.adapt_high)
          tau *= cfg.adapt_factor;
        else if (rate < cfg.adapt_low)
          tau /= cfg.adapt_factor;
        wa = wc = 0;
      }
    }
    if (n > cfg.burn_in) {
      frozen = true;
      if (rec % cfg.thin == 0) out.emplace_back(h, x);
      ++rec;
    }
  }
  return out;
}

struct Gaussian1D {
  using state_type = std::array<double, 1>;
  double mu = 0.0;
  double sigma = 1.0;

  double energy(const state_type& x) const {
    double d = (x[0] - mu) / sigma;
    return 0.5 * d * d;
  }
  ee::Proposal<state_type> propose(const state_type& x, double step, ee::Rng& rng) const {
    return {{x[0] + step * rng.normal()}, 0.0};
  }
  void serialize_state(const state_type& x, std::string& out) const { ee::put_f64(out, x[0]); }
  state_type deserialize_state(const std::string& bytes) const {
    ee::ByteReader rd(bytes);
    return {rd.f64()};
  }
  std::string csv_header() const { return "x"; }
  void append_csv_fields(const state_type& x, std::string& out) const {
    ee::append_csv_number(out, x[0]);
  }
};

struct NanModel {
  using state_type = std::array<double, 1>;
  double energy(const state_type&) const { return std::nan(""); }
  ee::Proposal<state_type> propose(const state_type& x, double, ee::Rng&) const { return {x, 0.0}; }
  void serialize_state(const state_type& x, std::string& out) const { ee::put_f64(out, x[0]); }
  std::string csv_header() const { return "x"; }
  void append_csv_fields(const state_type&, std::string&) const {}
};

// Nearest-neighbour walk on Z/S with a tabulated energy; everything about its
// equi-energy dynamics can be computed by direct enumeration.
struct ToyRing {
  using state_type = std::uint32_t;
  std::vector<double> table;

  double energy(const state_type& s) const { return table[s]; }
  ee::Proposal<state_type> propose(const state_type& x, double, ee::Rng& rng) const {
    std::uint32_t n = static_cast<std::uint32_t>(table.size());
    return {rng.uniform_below(2) ? (x + 1) % n : (x + n - 1) % n, 0.0};
  }
  void serialize_state(const state_type& s, std::string& out) const { ee::put_u32(out, s); }
  state_type deserialize_state(const std::string& bytes) const {
    ee::ByteReader rd(bytes);
    return rd.u32();
  }
  std::string csv_header() const { return "state"; }
  void append_csv_fields(const state_type& s, std::string& out) const {
    ee::append_csv_number(out, static_cast<double>(s));
  }

  // rugged two-well profile keeps all bands populated
  static ToyRing rugged(std::uint32_t n) {
    ToyRing t;
    t.table.resize(n);
    for (std::uint32_t s = 0; s < n; ++s) {
      double z = static_cast<double>(s) / n * 2.0 * 3.14159265358979323846;
      t.table[s] = 2.0 * (1.0 - std::cos(z)) + 1.2 * std::sin(3.0 * z) + 1.5;
    }
    return t;
  }
};

}  // namespace eetest
