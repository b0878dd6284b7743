#pragma once

#include <concepts>
#include <cstdint>
#include <string>

#include "ee/ladder.hpp"
#include "ee/rng.hpp"

namespace ee {

template <class State>
struct Proposal {
  State state;
  double log_ratio = 0.0;  // log q(y->x) - log q(x->y); 0 for symmetric kernels
};

struct LocalStepInfo {
  std::uint64_t attempts = 1;
  std::uint64_t accepts = 0;
};

// A problem plugs into the sampler through this contract.  energy() is the raw
// h(x); serialization is the canonical byte form used for rings on disk and for
// reproducibility hashing; the csv pair feeds the sample stream writer.
template <class M>
concept TargetModel = requires(const M& m, const typename M::state_type& x, std::string& buf) {
  typename M::state_type;
  { m.energy(x) } -> std::convertible_to<double>;
  { m.serialize_state(x, buf) } -> std::same_as<void>;
  { m.csv_header() } -> std::convertible_to<std::string>;
  { m.append_csv_fields(x, buf) } -> std::same_as<void>;
};

// Random-walk style models expose propose(); the sampler then runs the standard
// Metropolis-Hastings local move with the chain's adapted step size.
template <class M>
concept HasPropose = requires(const M& m, const typename M::state_type& x, double step, Rng& rng) {
  { m.propose(x, step, rng) } -> std::same_as<Proposal<typename M::state_type>>;
};

// Models with bespoke within-chain kernels (Gibbs sweeps, independence proposals
// keyed to the chain index) implement local_step instead; it must leave (x, h)
// at the new state with h = energy(x), and report attempt/accept counts.
template <class M>
concept HasLocalStep = requires(const M& m, typename M::state_type& x, double& h, std::size_t i,
                                const EnergyLadder& ladder, Rng& rng) {
  { m.local_step(x, h, i, ladder, rng) } -> std::same_as<LocalStepInfo>;
};

template <class M>
concept HasDeserialize = requires(const M& m, const std::string& bytes) {
  { m.deserialize_state(bytes) } -> std::same_as<typename M::state_type>;
};

}  // namespace ee
