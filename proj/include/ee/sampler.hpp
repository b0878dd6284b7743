#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/ladder.hpp"
#include "ee/model.hpp"
#include "ee/rings.hpp"
#include "ee/rng.hpp"

namespace ee {

struct AcceptanceCounters {
  std::uint64_t local_attempts = 0;
  std::uint64_t local_accepts = 0;
  std::uint64_t jump_attempts = 0;
  std::uint64_t jump_accepts = 0;
};

struct AdaptationEvent {
  std::size_t chain;
  std::uint64_t step;
  double old_step;
  double new_step;
  double rate;
};

template <class State>
struct Sample {
  std::size_t chain;
  std::uint64_t step;  // global step index
  double energy;
  std::size_t ring;
  State state;
};

struct RunConfig {
  std::uint64_t iterations = 0;    // total global steps n
  std::uint64_t burn_in = 0;       // B: per-chain steps before it records
  std::uint64_t ring_warmup = 0;   // N: extra lead the next colder chain waits for
  double jump_probability = 0.1;   // p_ee
  std::uint64_t seed = 1;
  std::uint64_t thin = 1;

  double initial_step = 0.25;          // tau_i = initial_step * sqrt(T_i)
  std::vector<double> step_overrides;  // optional explicit tau per chain

  bool adapt_steps = true;
  std::uint64_t adapt_window = 500;  // attempted local moves per adaptation window
  double adapt_factor = 1.5;
  double adapt_low = 0.22;
  double adapt_high = 0.32;

  bool adjust_floor = false;  // dynamic H_0 reset when states fall below the floor
  double floor_margin = 2.0;  // beta
  double gap_growth = 2.0;    // c, reused when levels are regenerated

  std::optional<std::uint64_t> ring_capacity;  // reservoir cap per ring (off = exact)
};

template <class State>
struct RunOutput {
  EnergyLadder ladder;  // final ladder (floor adjustments included)
  EnergyRings<State> rings;
  std::vector<Sample<State>> samples;  // thinned recorded stream, interleaved K..0
  std::vector<std::vector<std::uint64_t>> occupancy;
  std::vector<AcceptanceCounters> acceptance;
  std::vector<AdaptationEvent> adaptation;
  std::vector<double> final_steps;
  double min_energy_seen = std::numeric_limits<double>::infinity();
  std::uint64_t floor_adjustments = 0;
  std::uint64_t seed = 0;
};

namespace detail {

template <class M>
std::string state_tag(const M& model, const typename M::state_type& x) {
  std::string bytes;
  model.serialize_state(x, bytes);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (std::size_t i = 0; i < bytes.size() && i < 32; ++i) {
    unsigned char c = bytes[i];
    out.push_back(hex[c >> 4]);
    out.push_back(hex[c & 0xf]);
  }
  return out;
}

}  // namespace detail

inline double mh_log_accept(const EnergyLadder& ladder, std::size_t i, double h_x, double h_y,
                            double log_proposal_ratio = 0.0) {
  return ladder.truncated_energy(i, h_x) - ladder.truncated_energy(i, h_y) + log_proposal_ratio;
}

inline double jump_log_accept(const EnergyLadder& ladder, std::size_t i, double h_x, double h_y) {
  return ladder.truncated_energy(i, h_x) - ladder.truncated_energy(i, h_y) +
         ladder.truncated_energy(i + 1, h_y) - ladder.truncated_energy(i + 1, h_x);
}

// One Metropolis-Hastings update of chain i; returns whether the move was taken.
template <class M>
  requires TargetModel<M> && HasPropose<M>
bool mh_step(const M& model, const EnergyLadder& ladder, std::size_t i, typename M::state_type& x,
             double& h, double step, Rng& rng, AcceptanceCounters& acc) {
  Proposal<typename M::state_type> prop = model.propose(x, step, rng);
  double hy = model.energy(prop.state);
  if (std::isnan(hy))
    throw std::runtime_error("energy evaluated to NaN at state " + detail::state_tag(model, prop.state));
  double loga = mh_log_accept(ladder, i, h, hy, prop.log_ratio);
  ++acc.local_attempts;
  if (loga >= 0 || rng.uniform01() < std::exp(loga)) {
    x = std::move(prop.state);
    h = hy;
    ++acc.local_accepts;
    return true;
  }
  return false;
}

// Equi-energy jump for chain i < K: candidate drawn uniformly from the next
// chain's ring at x's own energy band.  Caller guarantees the ring is non-empty.
template <class State>
bool ee_jump(const EnergyLadder& ladder, const EnergyRings<State>& rings, std::size_t i, State& x,
             double& h, Rng& rng, AcceptanceCounters& acc) {
  const auto& donor = rings.ring(i + 1, ladder.ring_index(h));
  const RingRecord<State>& cand = donor[rng.uniform_below(donor.size())];
  double loga = jump_log_accept(ladder, i, h, cand.energy);
  ++acc.jump_attempts;
  if (loga >= 0 || rng.uniform01() < std::exp(loga)) {
    x = cand.state;
    h = cand.energy;
    ++acc.jump_accepts;
    return true;
  }
  return false;
}

inline double adapt_step_size(double step, double rate, double lo, double hi, double factor) {
  if (rate > hi) return step * factor;
  if (rate < lo) return step / factor;
  return step;
}

template <class M>
  requires TargetModel<M>
class EESampler {
  using State = typename M::state_type;

  struct Slot {
    State x;
    double h = 0;
    double tau = 0;
    Rng rng{0};
    bool initialized = false;
    bool frozen = false;  // step-size adaptation stops once the chain records
    std::uint64_t win_attempts = 0;
    std::uint64_t win_accepts = 0;
    std::uint64_t recorded = 0;
  };

 public:
  EESampler(const M& model, EnergyLadder ladder, RunConfig cfg)
      : model_(model), ladder_(std::move(ladder)), cfg_(std::move(cfg)) {
    ladder_.validate();
    std::size_t k = ladder_.top_chain();
    if (cfg_.jump_probability < 0 || cfg_.jump_probability >= 1)
      throw std::invalid_argument("run: jump probability must lie in [0,1)");
    if (cfg_.thin == 0) throw std::invalid_argument("run: thinning stride must be >= 1");
    if (cfg_.iterations <= k * (cfg_.burn_in + cfg_.ring_warmup) + cfg_.burn_in)
      throw std::invalid_argument("run: iterations too small for every chain to record");
    if (!cfg_.step_overrides.empty() && cfg_.step_overrides.size() != k + 1)
      throw std::invalid_argument("run: step_overrides must cover every chain");
  }

  template <class Init>
  RunOutput<State> run(Init&& make_initial) {
    std::size_t chains = ladder_.num_chains();
    slots_.clear();
    slots_.resize(chains);
    next_stream_ = chains;
    rings_ = EnergyRings<State>(chains, chains);
    rings_.set_capacity(cfg_.ring_capacity);
    out_ = RunOutput<State>{};
    out_.seed = cfg_.seed;
    out_.acceptance.assign(chains, {});

    for (std::size_t i = 0; i < chains; ++i) {
      Rng init_rng(derive_seed(cfg_.seed, kInitStream + i));
      init_slot(i, i, make_initial(i, ladder_.temps[i], init_rng));
    }

    const std::uint64_t stage = cfg_.burn_in + cfg_.ring_warmup;
    for (std::uint64_t n = 1; n <= cfg_.iterations; ++n) {
      std::size_t k = ladder_.top_chain();
      if (cfg_.adjust_floor && out_.min_energy_seen < ladder_.levels.front()) {
        std::size_t ls = lowest_started(n, stage);
        bool boundary = ls > 0 && start_offset(ls - 1, stage) + 1 == n;
        bool window = cfg_.adapt_window > 0 && n % cfg_.adapt_window == 0;
        if ((boundary || window) && ls > 0) adjust_floor(ls, n, stage);
        k = ladder_.top_chain();
      }

      for (std::size_t idx = k + 1; idx-- > 0;) {
        if (n <= start_offset(idx, stage)) continue;
        Slot& s = slots_[idx];
        update_chain(idx, s, n);
        if (s.h < out_.min_energy_seen) out_.min_energy_seen = s.h;
        if (n > start_offset(idx, stage) + cfg_.burn_in) {
          s.frozen = true;
          std::size_t band = ladder_.ring_index(s.h);
          rings_.append(idx, band, s.x, s.h, cfg_.ring_capacity ? &s.rng : nullptr);
          if (s.recorded % cfg_.thin == 0)
            out_.samples.push_back({idx, n, s.h, band, s.x});
          ++s.recorded;
        }
      }
    }

    out_.ladder = ladder_;
    out_.occupancy = rings_.occupancy();
    out_.rings = std::move(rings_);
    out_.final_steps.resize(slots_.size());
    for (std::size_t i = 0; i < slots_.size(); ++i) out_.final_steps[i] = slots_[i].tau;
    return std::move(out_);
  }

  RunOutput<State> run(std::vector<State> initial) {
    if (initial.size() != ladder_.num_chains())
      throw std::invalid_argument("run: need one initial state per chain");
    return run([&](std::size_t i, double, Rng&) { return initial[i]; });
  }

 private:
  std::uint64_t start_offset(std::size_t i, std::uint64_t stage) const {
    return (ladder_.top_chain() - i) * stage;
  }

  // lowest chain that has already taken an update before global step n
  std::size_t lowest_started(std::uint64_t n, std::uint64_t stage) const {
    std::size_t k = ladder_.top_chain();
    for (std::size_t i = 0; i <= k; ++i) {
      if (n > start_offset(i, stage) + 1) return i;
    }
    return k;
  }

  void init_slot(std::size_t idx, std::uint64_t stream, State x, bool allow_override = true) {
    Slot& s = slots_[idx];
    s.x = std::move(x);
    s.h = model_.energy(s.x);
    if (std::isnan(s.h))
      throw std::runtime_error("energy evaluated to NaN at state " + detail::state_tag(model_, s.x));
    s.tau = (allow_override && !cfg_.step_overrides.empty())
                ? cfg_.step_overrides[idx]
                : cfg_.initial_step * std::sqrt(ladder_.temps[idx]);
    s.rng = Rng(derive_seed(cfg_.seed, stream));
    s.initialized = true;
    if (s.h < out_.min_energy_seen) out_.min_energy_seen = s.h;
  }

  void update_chain(std::size_t i, Slot& s, std::uint64_t n) {
    bool jumped = false;
    if (cfg_.jump_probability > 0 && i < ladder_.top_chain()) {
      const auto& donor = rings_.ring(i + 1, ladder_.ring_index(s.h));
      if (!donor.empty() && s.rng.uniform01() < cfg_.jump_probability) {
        ee_jump(ladder_, rings_, i, s.x, s.h, s.rng, out_.acceptance[i]);
        jumped = true;
      }
    }
    if (jumped) return;

    if constexpr (HasLocalStep<M>) {
      LocalStepInfo info = model_.local_step(s.x, s.h, i, ladder_, s.rng);
      out_.acceptance[i].local_attempts += info.attempts;
      out_.acceptance[i].local_accepts += info.accepts;
    } else {
      static_assert(HasPropose<M>, "model must provide propose() or local_step()");
      bool acc = mh_step(model_, ladder_, i, s.x, s.h, s.tau, s.rng, out_.acceptance[i]);
      if (cfg_.adapt_steps && !s.frozen) {
        ++s.win_attempts;
        s.win_accepts += acc;
        if (s.win_attempts == cfg_.adapt_window) {
          double rate = static_cast<double>(s.win_accepts) / static_cast<double>(s.win_attempts);
          double nt = adapt_step_size(s.tau, rate, cfg_.adapt_low, cfg_.adapt_high, cfg_.adapt_factor);
          if (nt != s.tau) out_.adaptation.push_back({i, n, s.tau, nt, rate});
          s.tau = nt;
          s.win_attempts = s.win_accepts = 0;
        }
      }
    }
  }

  void adjust_floor(std::size_t ls, std::uint64_t n, std::uint64_t stage) {
    (void)n;
    (void)stage;
    AdjustedLadder adj =
        adjust_levels(ladder_, out_.min_energy_seen, ls, cfg_.floor_margin, cfg_.gap_growth);
    if (adj.ladder.levels == ladder_.levels && adj.ladder.temps == ladder_.temps) return;
    std::size_t d = adj.inserted;
    rings_ = rings_.regrouped(adj.ladder, d);
    ladder_ = std::move(adj.ladder);
    ++out_.floor_adjustments;

    if (d > 0) {
      std::vector<Slot> ns(slots_.size() + d);
      for (std::size_t i = slots_.size(); i-- > 0;) ns[i + d] = std::move(slots_[i]);
      slots_ = std::move(ns);
      out_.acceptance.insert(out_.acceptance.begin(), d, AcceptanceCounters{});
      for (auto& ev : out_.adaptation) ev.chain += d;
      for (auto& smp : out_.samples) smp.chain += d;
    }
    // fresh dormant slots (everything below the shifted ls) restart from the
    // coldest running chain's state; their streams come off a monotone counter
    // so no two slots ever share a generator
    for (std::size_t i = 0; i < ls + d; ++i) {
      init_slot(i, next_stream_++, slots_[ls + d].x, /*allow_override=*/false);
      slots_[i].recorded = 0;
      slots_[i].frozen = false;
      slots_[i].win_attempts = slots_[i].win_accepts = 0;
    }
  }

  const M& model_;
  EnergyLadder ladder_;
  RunConfig cfg_;
  std::vector<Slot> slots_;
  EnergyRings<State> rings_;
  RunOutput<State> out_;
  std::uint64_t next_stream_ = 0;
};

template <class M, class InitOrStates>
  requires TargetModel<M>
RunOutput<typename M::state_type> run(const M& model, const EnergyLadder& ladder,
                                      const RunConfig& cfg, InitOrStates&& init) {
  EESampler<M> sampler(model, ladder, cfg);
  return sampler.run(std::forward<InitOrStates>(init));
}

}  // namespace ee
