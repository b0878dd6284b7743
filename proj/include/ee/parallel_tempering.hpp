#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ee/ladder.hpp"
#include "ee/model.hpp"
#include "ee/rings.hpp"
#include "ee/rng.hpp"
#include "ee/sampler.hpp"

namespace ee {

struct PTConfig {
  std::vector<double> temps;  // empty: reuse the ladder's temperatures
  std::uint64_t iterations = 0;
  std::uint64_t burn_in = 0;
  double exchange_probability = 0.1;  // p_ex
  std::size_t swaps_per_event = 4;
  std::uint64_t seed = 1;
  std::uint64_t thin = 1;

  double initial_step = 0.25;
  std::vector<double> step_overrides;
  bool adapt_steps = true;
  std::uint64_t adapt_window = 500;
  double adapt_factor = 1.5;
  double adapt_low = 0.22;
  double adapt_high = 0.32;
};

// log acceptance of exchanging the states at temperatures T_a < T_b
inline double pt_swap_log_accept(double t_a, double t_b, double h_a, double h_b) {
  return (1.0 / t_a - 1.0 / t_b) * (h_a - h_b);
}

// Tempered baseline: each iteration is either an exchange event (a few
// uniformly chosen adjacent-pair swap proposals, driven by the orchestrator
// stream) or one Metropolis sweep across all chains.  Every chain runs from
// the first iteration; recording starts after the shared burn-in.  Ring
// bookkeeping uses the ladder's bands purely as a diagnostic; jumps never
// read them.  Swap proposals for pair (i, i+1) land in acceptance[i]'s jump
// counters, so "exchange rate" reads the same way as the jump rate.
template <class M>
  requires TargetModel<M> && HasPropose<M>
RunOutput<typename M::state_type> pt_run(const M& model, const EnergyLadder& ladder, PTConfig cfg,
                                         std::vector<typename M::state_type> initial) {
  using State = typename M::state_type;
  std::vector<double> temps = cfg.temps.empty() ? ladder.temps : cfg.temps;
  const std::size_t nc = temps.size();
  if (nc < 1) throw std::invalid_argument("pt_run: need at least one temperature");
  if (temps.front() != 1.0) throw std::invalid_argument("pt_run: lowest temperature must be 1");
  for (std::size_t i = 0; i + 1 < nc; ++i)
    if (temps[i] >= temps[i + 1])
      throw std::invalid_argument("pt_run: temperatures must be strictly increasing");
  if (cfg.exchange_probability < 0 || cfg.exchange_probability >= 1)
    throw std::invalid_argument("pt_run: exchange probability must lie in [0,1)");
  if (cfg.thin == 0) throw std::invalid_argument("pt_run: thinning stride must be >= 1");
  if (cfg.iterations <= cfg.burn_in)
    throw std::invalid_argument("pt_run: iterations must exceed the burn-in");
  if (!cfg.step_overrides.empty() && cfg.step_overrides.size() != nc)
    throw std::invalid_argument("pt_run: step_overrides must cover every chain");
  if (initial.size() != nc) throw std::invalid_argument("pt_run: need one initial state per chain");

  struct Slot {
    State x;
    double h;
    double tau;
    Rng rng{0};
    bool frozen = false;
    std::uint64_t win_attempts = 0;
    std::uint64_t win_accepts = 0;
    std::uint64_t recorded = 0;
  };
  std::vector<Slot> slots(nc);
  RunOutput<State> out;
  out.seed = cfg.seed;
  out.ladder = ladder;
  out.acceptance.assign(nc, {});
  EnergyRings<State> rings(nc, ladder.num_chains());

  for (std::size_t i = 0; i < nc; ++i) {
    Slot& s = slots[i];
    s.x = std::move(initial[i]);
    s.h = model.energy(s.x);
    if (std::isnan(s.h))
      throw std::runtime_error("energy evaluated to NaN at state " + detail::state_tag(model, s.x));
    s.tau = cfg.step_overrides.empty() ? cfg.initial_step * std::sqrt(temps[i])
                                       : cfg.step_overrides[i];
    s.rng = Rng(derive_seed(cfg.seed, i));
    if (s.h < out.min_energy_seen) out.min_energy_seen = s.h;
  }
  Rng orchestrator(derive_seed(cfg.seed, kOrchestratorStream));

  for (std::uint64_t n = 1; n <= cfg.iterations; ++n) {
    bool exchange = cfg.exchange_probability > 0 && nc > 1 &&
                    orchestrator.uniform01() < cfg.exchange_probability;
    if (exchange) {
      for (std::size_t t = 0; t < cfg.swaps_per_event; ++t) {
        std::size_t i = static_cast<std::size_t>(orchestrator.uniform_below(nc - 1));
        Slot& a = slots[i];
        Slot& b = slots[i + 1];
        double loga = pt_swap_log_accept(temps[i], temps[i + 1], a.h, b.h);
        ++out.acceptance[i].jump_attempts;
        if (loga >= 0 || orchestrator.uniform01() < std::exp(loga)) {
          std::swap(a.x, b.x);
          std::swap(a.h, b.h);
          ++out.acceptance[i].jump_accepts;
        }
      }
    } else {
      for (std::size_t i = 0; i < nc; ++i) {
        Slot& s = slots[i];
        auto prop = model.propose(s.x, s.tau, s.rng);
        double hy = model.energy(prop.state);
        if (std::isnan(hy))
          throw std::runtime_error("energy evaluated to NaN at state " +
                                   detail::state_tag(model, prop.state));
        double loga = (s.h - hy) / temps[i] + prop.log_ratio;
        ++out.acceptance[i].local_attempts;
        bool acc = loga >= 0 || s.rng.uniform01() < std::exp(loga);
        if (acc) {
          s.x = std::move(prop.state);
          s.h = hy;
          ++out.acceptance[i].local_accepts;
        }
        if (cfg.adapt_steps && !s.frozen) {
          ++s.win_attempts;
          s.win_accepts += acc;
          if (s.win_attempts == cfg.adapt_window) {
            double rate = static_cast<double>(s.win_accepts) / static_cast<double>(s.win_attempts);
            double nt = adapt_step_size(s.tau, rate, cfg.adapt_low, cfg.adapt_high, cfg.adapt_factor);
            if (nt != s.tau) out.adaptation.push_back({i, n, s.tau, nt, rate});
            s.tau = nt;
            s.win_attempts = s.win_accepts = 0;
          }
        }
      }
    }
    for (std::size_t i = 0; i < nc; ++i) {
      Slot& s = slots[i];
      if (s.h < out.min_energy_seen) out.min_energy_seen = s.h;
      if (n > cfg.burn_in) {
        s.frozen = true;
        std::size_t band = ladder.ring_index(s.h);
        rings.append(i, band, s.x, s.h, nullptr);
        if (s.recorded % cfg.thin == 0) out.samples.push_back({i, n, s.h, band, s.x});
        ++s.recorded;
      }
    }
  }

  out.occupancy = rings.occupancy();
  out.rings = std::move(rings);
  out.final_steps.resize(nc);
  for (std::size_t i = 0; i < nc; ++i) out.final_steps[i] = slots[i].tau;
  return out;
}

}  // namespace ee
