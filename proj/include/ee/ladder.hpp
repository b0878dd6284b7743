#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <vector>

namespace ee {

// Energy ladder shared by all chains: chain i targets
//   pi_i(x) ∝ exp(-max(h(x), levels[i]) / temps[i]),
// and the interval [levels[j], levels[j+1]) is energy band j (top band unbounded).
struct EnergyLadder {
  std::vector<double> levels;  // H_0 < H_1 < ... < H_K
  std::vector<double> temps;   // 1 = T_0 < T_1 < ... < T_K

  std::size_t num_chains() const { return levels.size(); }
  std::size_t top_chain() const { return levels.size() - 1; }

  double truncated_energy(std::size_t i, double h) const {
    return std::max(h, levels[i]) / temps[i];
  }

  // Unique j with levels[j] <= h < levels[j+1]; h below the floor lands in band 0,
  // detectable via below_floor().
  std::size_t ring_index(double h) const {
    std::size_t j = std::upper_bound(levels.begin(), levels.end(), h) - levels.begin();
    return j == 0 ? 0 : j - 1;
  }

  bool below_floor(double h) const { return h < levels.front(); }

  // log w(x) for folding a chain-i sample back to the untempered target:
  // w = pi_0-density / pi_i-density up to constants, h >= H_0 assumed for exactness at i=0.
  double log_importance_weight(std::size_t i, double h) const {
    return truncated_energy(i, h) - h;
  }
  double importance_weight(std::size_t i, double h) const {
    return std::exp(log_importance_weight(i, h));
  }

  void validate() const {
    if (levels.empty() || levels.size() != temps.size())
      throw std::invalid_argument("ladder: levels/temps size mismatch");
    if (temps.front() != 1.0) throw std::invalid_argument("ladder: T_0 must be 1");
    for (std::size_t j = 1; j < levels.size(); ++j) {
      if (!(levels[j] > levels[j - 1])) throw std::invalid_argument("ladder: levels must increase");
      if (!(temps[j] > temps[j - 1])) throw std::invalid_argument("ladder: temperatures must increase");
    }
  }
};

namespace detail {

// Geometric gap sequence: m gaps spanning `span`, ratio rho, first gap span*(rho-1)/(rho^m-1).
inline std::vector<double> geometric_gaps(double span, std::size_t m, double rho) {
  std::vector<double> g(m);
  if (std::abs(rho - 1.0) < 1e-12) {
    std::fill(g.begin(), g.end(), span / static_cast<double>(m));
    return g;
  }
  double g0 = span * (rho - 1.0) / (std::pow(rho, static_cast<double>(m)) - 1.0);
  for (std::size_t t = 0; t < m; ++t) g[t] = g0 * std::pow(rho, static_cast<double>(t));
  return g;
}

inline double mean_gap_over_temp(const std::vector<double>& levels, double t_max) {
  std::size_t k = levels.size() - 1;
  double acc = 0;
  for (std::size_t j = 0; j < k; ++j) {
    double tj = std::pow(t_max, static_cast<double>(j) / static_cast<double>(k));
    acc += (levels[j + 1] - levels[j]) / tj;
  }
  return acc / static_cast<double>(k);
}

}  // namespace detail

struct LadderOptions {
  std::optional<double> first_level;      // H_1; see default rules below
  std::optional<double> max_temperature;  // T_K; otherwise solved from gap_growth
};

// Levels: H_1..H_K geometric with H_K = H_top when the range allows it (H_1 > 0);
// otherwise (negative-energy ladders) the K gaps H_0->H_1->...->H_K are geometric,
// since a geometric sequence of negative levels would have shrinking gaps.
// Default H_1: H_0*(H_top/H_0)^(1/K) for H_0 > 0 (levels geometric including H_0);
// H_top/sqrt(10)^(K-1) for H_0 = 0; gap ratio 2 for H_0 < 0.
// Temperatures: geometric from 1 to T_K, with T_K solved so the mean of
// (H_{j+1}-H_j)/T_j hits c = gap_growth unless max_temperature pins it.
inline EnergyLadder build_ladder(double h0, double h_top, std::size_t k, double gap_growth = 2.0,
                                 LadderOptions opt = {}) {
  if (!(h0 < h_top)) throw std::invalid_argument("build_ladder: need H_0 < H_top");
  if (k == 0) throw std::invalid_argument("build_ladder: K = 0 has no ladder to build");
  if (!(gap_growth > 0)) throw std::invalid_argument("build_ladder: c must be positive");

  EnergyLadder lad;
  lad.levels.resize(k + 1);
  lad.levels[0] = h0;
  lad.levels[k] = h_top;

  if (k >= 2) {
    double h1;
    if (opt.first_level) {
      h1 = *opt.first_level;
      if (!(h1 > h0) || !(h1 < h_top)) throw std::invalid_argument("build_ladder: H_1 out of range");
    } else if (h0 > 0) {
      h1 = h0 * std::pow(h_top / h0, 1.0 / static_cast<double>(k));
    } else if (h0 == 0) {
      h1 = h_top / std::pow(std::sqrt(10.0), static_cast<double>(k - 1));
    } else {
      h1 = h0 + (h_top - h0) / (std::pow(2.0, static_cast<double>(k)) - 1.0);
    }

    if (h1 > 0 && h_top > 0) {
      double r = std::pow(h_top / h1, 1.0 / static_cast<double>(k - 1));
      for (std::size_t j = 1; j < k; ++j)
        lad.levels[j] = h1 * std::pow(r, static_cast<double>(j - 1));
    } else {
      // gap-geometric through (h0, h_top] hitting h1 on the first gap
      double rho = 2.0;
      if (opt.first_level) {
        // solve sum_{t<k} (h1-h0)*rho^t = h_top-h0 for rho by bisection
        double target = (h_top - h0) / (h1 - h0);
        double lo = 1.0 + 1e-9, hi = 64.0;
        auto f = [&](double x) {
          return (std::pow(x, static_cast<double>(k)) - 1.0) / (x - 1.0) - target;
        };
        if (f(lo) > 0) {
          rho = lo;
        } else {
          while (f(hi) < 0) hi *= 2;
          for (int it = 0; it < 200; ++it) {
            double mid = 0.5 * (lo + hi);
            (f(mid) < 0 ? lo : hi) = mid;
          }
          rho = 0.5 * (lo + hi);
        }
      }
      auto gaps = detail::geometric_gaps(h_top - h0, k, rho);
      double acc = h0;
      for (std::size_t j = 1; j < k; ++j) {
        acc += gaps[j - 1];
        lad.levels[j] = acc;
      }
    }
  }

  double t_max;
  if (opt.max_temperature) {
    t_max = *opt.max_temperature;
    if (!(t_max > 1)) throw std::invalid_argument("build_ladder: T_K must exceed 1");
  } else {
    // mean gap/T decreases in T_K; bisect to hit gap_growth
    double lo = 1.0 + 1e-9, hi = 2.0;
    while (detail::mean_gap_over_temp(lad.levels, hi) > gap_growth && hi < 1e15) hi *= 2;
    if (detail::mean_gap_over_temp(lad.levels, lo) < gap_growth) {
      t_max = 1.0 + 1e-3;  // ladder finer than c everywhere; keep temps barely spread
    } else {
      for (int it = 0; it < 200; ++it) {
        double mid = std::sqrt(lo * hi);
        (detail::mean_gap_over_temp(lad.levels, mid) > gap_growth ? lo : hi) = mid;
      }
      t_max = std::sqrt(lo * hi);
    }
  }
  lad.temps.resize(k + 1);
  for (std::size_t j = 0; j <= k; ++j)
    lad.temps[j] = std::pow(t_max, static_cast<double>(j) / static_cast<double>(k));

  lad.validate();
  return lad;
}

struct AdjustedLadder {
  EnergyLadder ladder;
  std::size_t inserted = 0;  // new dormant chains added below the running ones
};

// Floor reset once states below H_0 have been seen: new H_0 = h_min - beta, levels
// strictly between the new floor and the lowest running chain's level regenerated
// with geometrically growing gaps (inserting levels if needed to keep the gap
// sequence monotone), temperatures below re-derived from gap/T ≈ c.  Everything at
// indices >= lowest_started (in the old indexing) is preserved verbatim.
inline AdjustedLadder adjust_levels(const EnergyLadder& old, double h_min_observed,
                                    std::size_t lowest_started, double beta, double gap_growth) {
  if (!(beta > 0)) throw std::invalid_argument("adjust_levels: beta must be positive");
  if (!(h_min_observed < old.levels.front())) return {old, 0};
  // once the T=1 chain is running its target is pinned; the floor can no longer move
  if (lowest_started == 0) return {old, 0};

  double new_h0 = h_min_observed - beta;
  double keep_level = old.levels[lowest_started];
  double keep_temp = old.temps[lowest_started];
  double span = keep_level - new_h0;
  double next_gap = lowest_started + 1 < old.levels.size()
                        ? old.levels[lowest_started + 1] - keep_level
                        : std::numeric_limits<double>::infinity();

  // q inner levels -> q+1 gaps; grow q until equal gaps would fit under next_gap
  std::size_t q = lowest_started > 0 ? lowest_started - 1 : 0;
  while (span / static_cast<double>(q + 1) > next_gap) ++q;

  double rho = 2.0;
  if (std::isfinite(next_gap)) {
    // choose rho so the last regenerated gap meets the first preserved gap
    auto top_gap = [&](double x) {
      return detail::geometric_gaps(span, q + 1, x).back();
    };
    if (top_gap(1.0 + 1e-9) < next_gap) {
      double lo = 1.0 + 1e-9, hi = 2.0;
      while (top_gap(hi) < next_gap && hi < 1e6) hi *= 2;
      for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        (top_gap(mid) < next_gap ? lo : hi) = mid;
      }
      rho = 0.5 * (lo + hi);
    } else {
      rho = 1.0;  // equal gaps already as coarse as allowed
    }
  }

  auto gaps = detail::geometric_gaps(span, q + 1, rho);

  AdjustedLadder out;
  out.inserted = q + 1 - lowest_started;
  EnergyLadder& lad = out.ladder;
  lad.levels.reserve(old.levels.size() + out.inserted);
  lad.temps.reserve(lad.levels.capacity());

  // inner temps: gap/c, squeezed to stay strictly increasing inside (1, keep_temp)
  std::vector<double> tt(q);
  double prev = 1.0;
  for (std::size_t t = 0; t < q; ++t) {
    double lo = prev * (1.0 + 1e-6);
    double hi = keep_temp * std::pow(1.0 - 1e-6, static_cast<double>(q - t));
    double v = gaps[t + 1] / gap_growth;
    v = lo <= hi ? std::clamp(v, lo, hi)
                 : prev * std::pow(keep_temp / prev, 1.0 / static_cast<double>(q - t + 1));
    tt[t] = prev = v;
  }

  lad.levels.push_back(new_h0);
  lad.temps.push_back(1.0);
  double acc = new_h0;
  for (std::size_t t = 0; t < q; ++t) {
    acc += gaps[t];
    lad.levels.push_back(acc);
    lad.temps.push_back(tt[t]);
  }
  for (std::size_t j = lowest_started; j < old.levels.size(); ++j) {
    lad.levels.push_back(old.levels[j]);
    lad.temps.push_back(old.temps[j]);
  }
  lad.validate();
  return out;
}

}  // namespace ee
