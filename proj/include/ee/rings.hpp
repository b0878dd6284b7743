#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "ee/ladder.hpp"
#include "ee/rng.hpp"

namespace ee {

template <class State>
struct RingRecord {
  State state;
  double energy;
};

// Append-only per-(chain, band) stores of recorded states with their energies.
// Chain i-1 draws jump candidates from row i.  An optional capacity turns each
// ring into a uniform reservoir for memory-constrained runs (off by default);
// seen() always reports the true recorded counts.
template <class State>
class EnergyRings {
 public:
  EnergyRings() = default;
  EnergyRings(std::size_t chains, std::size_t bands)
      : bands_(bands), store_(chains * bands), seen_(chains * bands, 0) {}

  std::size_t num_chains() const { return bands_ ? store_.size() / bands_ : 0; }
  std::size_t num_bands() const { return bands_; }

  void set_capacity(std::optional<std::uint64_t> cap) { cap_ = cap; }

  void append(std::size_t chain, std::size_t band, State s, double e, Rng* rng = nullptr) {
    auto& ring = store_[chain * bands_ + band];
    std::uint64_t& n = seen_[chain * bands_ + band];
    if (!cap_ || ring.size() < *cap_) {
      ring.push_back({std::move(s), e});
    } else {
      if (!rng) throw std::logic_error("capped ring needs an rng for reservoir replacement");
      std::uint64_t slot = rng->uniform_below(n + 1);
      if (slot < *cap_) ring[slot] = {std::move(s), e};
    }
    ++n;
  }

  const std::vector<RingRecord<State>>& ring(std::size_t chain, std::size_t band) const {
    return store_[chain * bands_ + band];
  }

  std::uint64_t seen(std::size_t chain, std::size_t band) const {
    return seen_[chain * bands_ + band];
  }

  std::vector<std::vector<std::uint64_t>> occupancy() const {
    std::vector<std::vector<std::uint64_t>> out(num_chains());
    for (std::size_t i = 0; i < num_chains(); ++i) {
      out[i].assign(seen_.begin() + i * bands_, seen_.begin() + (i + 1) * bands_);
    }
    return out;
  }

  std::uint64_t total(std::size_t chain) const {
    std::uint64_t t = 0;
    for (std::size_t j = 0; j < bands_; ++j) t += seen_[chain * bands_ + j];
    return t;
  }

  // After a floor adjustment: rows shift up by `chain_shift` (new dormant chains
  // below), every record re-binned by its stored energy under the new boundaries.
  EnergyRings regrouped(const EnergyLadder& new_ladder, std::size_t chain_shift) const {
    EnergyRings out(num_chains() + chain_shift, new_ladder.num_chains());
    out.cap_ = cap_;
    for (std::size_t i = 0; i < num_chains(); ++i) {
      for (std::size_t j = 0; j < bands_; ++j) {
        for (const auto& rec : store_[i * bands_ + j]) {
          std::size_t nj = new_ladder.ring_index(rec.energy);
          out.store_[(i + chain_shift) * out.bands_ + nj].push_back(rec);
          ++out.seen_[(i + chain_shift) * out.bands_ + nj];
        }
      }
    }
    return out;
  }

 private:
  std::size_t bands_ = 0;
  std::vector<std::vector<RingRecord<State>>> store_;
  std::vector<std::uint64_t> seen_;
  std::optional<std::uint64_t> cap_;
};

}  // namespace ee
