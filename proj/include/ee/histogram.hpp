#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "ee/ladder.hpp"
#include "ee/rings.hpp"

namespace ee {

// Per-chain energy histogram over a common bin set.  Continuous systems use
// each energy band split into equal sub-bins (band edges stay bin edges); for
// discrete systems the bins are the exact observed energy levels.  Counts are
// kept as doubles so exactly known expected counts can be fed to the density
// of states solver; real runs store integers in them.
struct EnergyHistogram {
  std::vector<double> edges;   // M+1 edges; empty for discrete systems
  std::vector<double> reps;    // M bin representatives (midpoints, or levels)
  std::vector<double> widths;  // quadrature Delta-u per bin (1 per level)
  std::vector<std::vector<double>> counts;  // [chain][bin]
  std::vector<double> chain_totals;
  std::vector<double> pooled;
  bool discrete = false;

  std::size_t num_bins() const { return reps.size(); }
  std::size_t num_chains() const { return counts.size(); }

  std::size_t bin_of(double u) const {
    if (discrete) {
      auto it = std::lower_bound(reps.begin(), reps.end(), u);
      if (it == reps.end() || *it != u)
        throw std::invalid_argument("histogram: energy " + std::to_string(u) +
                                    " is not one of the discrete levels");
      return static_cast<std::size_t>(it - reps.begin());
    }
    if (u < edges.front() || u > edges.back())
      throw std::invalid_argument("histogram: energy " + std::to_string(u) +
                                  " outside the binned range");
    auto it = std::upper_bound(edges.begin(), edges.end(), u);
    std::size_t b = static_cast<std::size_t>(it - edges.begin());
    if (b > 0) --b;
    return std::min(b, reps.size() - 1);  // top edge closes the last bin
  }

  void finalize() {
    chain_totals.assign(counts.size(), 0.0);
    pooled.assign(num_bins(), 0.0);
    for (std::size_t i = 0; i < counts.size(); ++i)
      for (std::size_t b = 0; b < num_bins(); ++b) {
        chain_totals[i] += counts[i][b];
        pooled[b] += counts[i][b];
      }
  }
};

namespace detail {

template <class State>
void fill_counts(EnergyHistogram& hist, const EnergyRings<State>& rings) {
  hist.counts.assign(rings.num_chains(), std::vector<double>(hist.num_bins(), 0.0));
  for (std::size_t i = 0; i < rings.num_chains(); ++i)
    for (std::size_t j = 0; j < rings.num_bands(); ++j)
      for (const auto& rec : rings.ring(i, j)) hist.counts[i][hist.bin_of(rec.energy)] += 1.0;
  hist.finalize();
}

}  // namespace detail

// Continuous binning: sub_bins equal intervals per band, the open top band
// capped at the largest recorded energy.
template <class State>
EnergyHistogram histogram_per_ring(const EnergyRings<State>& rings, const EnergyLadder& ladder,
                                   std::size_t sub_bins = 20) {
  if (sub_bins == 0) throw std::invalid_argument("histogram: need at least one sub-bin");
  double u_max = -std::numeric_limits<double>::infinity();
  bool any = false;
  for (std::size_t i = 0; i < rings.num_chains(); ++i)
    for (std::size_t j = 0; j < rings.num_bands(); ++j)
      for (const auto& rec : rings.ring(i, j)) {
        u_max = std::max(u_max, rec.energy);
        any = true;
      }
  if (!any) throw std::invalid_argument("histogram: no recorded samples");

  EnergyHistogram hist;
  std::vector<double> tops = ladder.levels;
  tops.erase(tops.begin());
  tops.push_back(u_max > ladder.levels.back() ? u_max : ladder.levels.back() + 1.0);
  hist.edges.push_back(ladder.levels.front());
  for (std::size_t j = 0; j < tops.size(); ++j) {
    double lo = ladder.levels[j], hi = tops[j];
    for (std::size_t s = 1; s <= sub_bins; ++s)
      hist.edges.push_back(s == sub_bins ? hi : lo + (hi - lo) * static_cast<double>(s) /
                                                       static_cast<double>(sub_bins));
  }
  for (std::size_t b = 0; b + 1 < hist.edges.size(); ++b) {
    hist.reps.push_back(0.5 * (hist.edges[b] + hist.edges[b + 1]));
    hist.widths.push_back(hist.edges[b + 1] - hist.edges[b]);
  }
  detail::fill_counts(hist, rings);
  return hist;
}

// Discrete binning: one bin per distinct recorded energy level.
template <class State>
EnergyHistogram histogram_discrete(const EnergyRings<State>& rings) {
  std::vector<double> levels;
  for (std::size_t i = 0; i < rings.num_chains(); ++i)
    for (std::size_t j = 0; j < rings.num_bands(); ++j)
      for (const auto& rec : rings.ring(i, j)) levels.push_back(rec.energy);
  if (levels.empty()) throw std::invalid_argument("histogram: no recorded samples");
  std::sort(levels.begin(), levels.end());
  levels.erase(std::unique(levels.begin(), levels.end()), levels.end());

  EnergyHistogram hist;
  hist.discrete = true;
  hist.reps = std::move(levels);
  hist.widths.assign(hist.reps.size(), 1.0);
  detail::fill_counts(hist, rings);
  return hist;
}

}  // namespace ee
