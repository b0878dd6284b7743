#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/dos.hpp"
#include "ee/histogram.hpp"
#include "ee/ladder.hpp"
#include "ee/logsum.hpp"
#include "ee/rings.hpp"

namespace ee {

struct MicrocanonicalCurve {
  std::vector<double> u;
  std::vector<double> value;  // pooled slice mean; meaningless where absent
  std::vector<double> count;
  std::vector<bool> absent;

  std::size_t num_bins() const { return u.size(); }
};

// Pooled slice means of g over the histogram bins; chains are combined with
// weights proportional to their slice sample sizes, i.e. a straight pooled
// mean per bin.
template <class State, class G>
MicrocanonicalCurve microcanonical_average(const EnergyRings<State>& rings,
                                           const EnergyHistogram& hist, G&& g) {
  MicrocanonicalCurve curve;
  curve.u = hist.reps;
  curve.value.assign(hist.num_bins(), 0.0);
  curve.count.assign(hist.num_bins(), 0.0);
  curve.absent.assign(hist.num_bins(), true);
  for (std::size_t i = 0; i < rings.num_chains(); ++i)
    for (std::size_t j = 0; j < rings.num_bands(); ++j)
      for (const auto& rec : rings.ring(i, j)) {
        std::size_t b = hist.bin_of(rec.energy);
        curve.value[b] += g(rec.state);
        curve.count[b] += 1.0;
      }
  for (std::size_t b = 0; b < hist.num_bins(); ++b) {
    if (curve.count[b] > 0) {
      curve.value[b] /= curve.count[b];
      curve.absent[b] = false;
    }
  }
  return curve;
}

// Discretized Laplace-transform ratio sum_u nu(u) omega(u) e^{-u/T} du over
// sum_u omega(u) e^{-u/T} du, evaluated with a common max shift.
inline double boltzmann_average(const DensityOfStates& dos, const MicrocanonicalCurve& curve,
                                double T) {
  if (T <= 0) throw std::invalid_argument("boltzmann_average: temperature must be positive");
  if (dos.num_bins() != curve.num_bins())
    throw std::invalid_argument("boltzmann_average: density and curve bins differ");
  double shift = kNegInf;
  for (std::size_t b = 0; b < dos.num_bins(); ++b) {
    if (dos.log_omega[b] == kNegInf || curve.absent[b]) continue;
    shift = std::max(shift, dos.log_omega[b] + std::log(dos.widths[b]) - dos.u[b] / T);
  }
  if (shift == kNegInf)
    throw std::domain_error("boltzmann_average: no support at T=" + std::to_string(T));
  double num = 0, den = 0;
  for (std::size_t b = 0; b < dos.num_bins(); ++b) {
    if (dos.log_omega[b] == kNegInf || curve.absent[b]) continue;
    double w = std::exp(dos.log_omega[b] + std::log(dos.widths[b]) - dos.u[b] / T - shift);
    num += w * curve.value[b];
    den += w;
  }
  return num / den;
}

struct ThermoPoint {
  double T;
  double z_ratio;  // Z(T)/Z(T_ref)
  double U;        // mean energy
  double C;        // heat capacity, variance form
  double F;        // -T log(Z(T)/Z(T_ref))
};

namespace detail {

inline double log_partition(const DensityOfStates& dos, double T) {
  LogSum z;
  for (std::size_t b = 0; b < dos.num_bins(); ++b)
    if (dos.log_omega[b] != kNegInf)
      z.add(dos.log_omega[b] + std::log(dos.widths[b]) - dos.u[b] / T);
  if (z.empty()) throw std::domain_error("thermo_curves: no support at T=" + std::to_string(T));
  return z.value();
}

}  // namespace detail

inline std::vector<ThermoPoint> thermo_curves(const DensityOfStates& dos,
                                              const std::vector<double>& temps,
                                              double T_ref = 1.0) {
  double log_z_ref = detail::log_partition(dos, T_ref);
  std::vector<ThermoPoint> out;
  out.reserve(temps.size());
  for (double T : temps) {
    if (T <= 0) throw std::invalid_argument("thermo_curves: temperature must be positive");
    double log_z = detail::log_partition(dos, T);
    double m1 = 0, m2 = 0, den = 0;
    for (std::size_t b = 0; b < dos.num_bins(); ++b) {
      if (dos.log_omega[b] == kNegInf) continue;
      double w = std::exp(dos.log_omega[b] + std::log(dos.widths[b]) - dos.u[b] / T - log_z);
      m1 += w * dos.u[b];
      m2 += w * dos.u[b] * dos.u[b];
      den += w;
    }
    m1 /= den;
    m2 /= den;
    ThermoPoint p;
    p.T = T;
    p.z_ratio = std::exp(log_z - log_z_ref);
    p.U = m1;
    p.C = (m2 - m1 * m1) / (T * T);
    p.F = -T * (log_z - log_z_ref);
    out.push_back(p);
  }
  return out;
}

inline double importance_weight(const EnergyLadder& ladder, std::size_t i, double h) {
  return std::exp(ladder.log_importance_weight(i, h));
}

// effective sample size (sum w)^2 / sum w^2; equals n for constant weights
inline double ess(const std::vector<double>& weights) {
  double s = 0, s2 = 0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  if (s2 == 0) return 0;
  return s * s / s2;
}

inline double ess_from_log_weights(const std::vector<double>& lw) {
  LogSum l1, l2;
  for (double x : lw) {
    l1.add(x);
    l2.add(2 * x);
  }
  if (l1.empty()) return 0;
  return std::exp(2 * l1.value() - l2.value());
}

struct CombinedEstimate {
  std::string estimand;
  double value = 0;
  std::vector<double> p_hat;                 // per energy ring, sums to 1
  std::vector<double> g_ring;                // ESS-combined slice estimate per ring
  std::vector<std::vector<double>> g_cell;   // [chain][ring], NaN where empty
  std::vector<std::vector<double>> ess_cell;
  std::vector<std::vector<double>> var_cell;
  std::vector<std::vector<char>> included;   // inclusion mask per (chain, ring)
  std::vector<std::size_t> empty_rings;
};

// Multi-chain estimate of E_pi g: per-ring importance-weighted slice means
// combined by effective sample size, ring probabilities combined across
// chains with inverse-variance weights (two refinement passes seeded by the
// lowest chain's raw occupancy proportions), then value = sum_j p_j * G_j.
template <class State, class G>
CombinedEstimate combined_expectation(const EnergyRings<State>& rings, const EnergyLadder& ladder,
                                      G&& g, std::string estimand, std::size_t min_cell = 50) {
  const std::size_t nc = rings.num_chains();
  const std::size_t nr = rings.num_bands();
  constexpr double qnan = std::numeric_limits<double>::quiet_NaN();

  CombinedEstimate est;
  est.estimand = std::move(estimand);
  est.p_hat.assign(nr, 0.0);
  est.g_ring.assign(nr, qnan);
  est.g_cell.assign(nc, std::vector<double>(nr, qnan));
  est.ess_cell.assign(nc, std::vector<double>(nr, 0.0));
  est.var_cell.assign(nc, std::vector<double>(nr, qnan));
  est.included.assign(nc, std::vector<char>(nr, 0));

  // per-cell log-weight moments and weighted means of g
  std::vector<std::vector<double>> l1(nc, std::vector<double>(nr, kNegInf));
  std::vector<std::vector<double>> l2(nc, std::vector<double>(nr, kNegInf));
  std::vector<double> l1_all(nc, kNegInf), l2_all(nc, kNegInf);
  std::vector<std::vector<std::size_t>> cell_n(nc, std::vector<std::size_t>(nr, 0));
  for (std::size_t i = 0; i < nc; ++i) {
    LogSum a1, a2;
    for (std::size_t j = 0; j < nr; ++j) {
      const auto& cell = rings.ring(i, j);
      cell_n[i][j] = cell.size();
      if (cell.empty()) continue;
      double m = kNegInf;
      for (const auto& rec : cell)
        m = std::max(m, ladder.log_importance_weight(i, rec.energy));
      double s = 0, s2 = 0, sg = 0;
      for (const auto& rec : cell) {
        double w = std::exp(ladder.log_importance_weight(i, rec.energy) - m);
        s += w;
        s2 += w * w;
        sg += w * g(rec.state);
      }
      est.g_cell[i][j] = sg / s;
      l1[i][j] = m + std::log(s);
      l2[i][j] = 2 * m + std::log(s2);
      est.ess_cell[i][j] = std::exp(2 * l1[i][j] - l2[i][j]);
      a1.add(l1[i][j]);
      a2.add(l2[i][j]);
    }
    l1_all[i] = a1.value();
    l2_all[i] = a2.value();
  }

  // inclusion mask: big-enough cells, else every non-empty cell of the ring
  bool ring_has_data = false;
  for (std::size_t j = 0; j < nr; ++j) {
    bool any_big = false, any = false;
    for (std::size_t i = 0; i < nc; ++i) {
      any = any || cell_n[i][j] > 0;
      any_big = any_big || cell_n[i][j] >= min_cell;
    }
    if (!any) {
      est.empty_rings.push_back(j);
      continue;
    }
    ring_has_data = true;
    for (std::size_t i = 0; i < nc; ++i)
      est.included[i][j] = any_big ? cell_n[i][j] >= min_cell : cell_n[i][j] > 0;
  }
  if (!ring_has_data) throw std::invalid_argument("combined_expectation: all rings empty");

  // ESS-weighted slice estimates per ring
  for (std::size_t j = 0; j < nr; ++j) {
    double wsum = 0, acc = 0;
    for (std::size_t i = 0; i < nc; ++i) {
      if (!est.included[i][j]) continue;
      wsum += est.ess_cell[i][j];
      acc += est.ess_cell[i][j] * est.g_cell[i][j];
    }
    if (wsum > 0) est.g_ring[j] = acc / wsum;
  }

  // ring probabilities: chain-i weighted proportions combined by 1/Var
  auto p_cell = [&](std::size_t i, std::size_t j) {
    return l1[i][j] == kNegInf ? 0.0 : std::exp(l1[i][j] - l1_all[i]);
  };
  auto var_cell = [&](std::size_t i, std::size_t j, double p_tilde) {
    double in2 = l2[i][j] == kNegInf ? 0.0 : std::exp(l2[i][j] - 2 * l1_all[i]);
    double out2;
    if (l2[i][j] == kNegInf) {
      out2 = std::exp(l2_all[i] - 2 * l1_all[i]);
    } else {
      double d = l2[i][j] - l2_all[i];
      out2 = d >= 0 ? 0.0 : std::exp(l2_all[i] - 2 * l1_all[i]) * -std::expm1(d);
    }
    double q = 1.0 - p_tilde;
    return q * q * in2 + p_tilde * p_tilde * out2;
  };

  std::vector<double> p_tilde(nr, 0.0);
  double n0 = 0;
  for (std::size_t j = 0; j < nr; ++j) n0 += static_cast<double>(cell_n[0][j]);
  for (std::size_t j = 0; j < nr; ++j) p_tilde[j] = static_cast<double>(cell_n[0][j]) / n0;

  for (int pass = 0; pass < 2; ++pass) {
    std::vector<double> p_next(nr, 0.0);
    for (std::size_t j = 0; j < nr; ++j) {
      double wsum = 0, acc = 0;
      for (std::size_t i = 0; i < nc; ++i) {
        if (!est.included[i][j]) continue;
        double v = var_cell(i, j, p_tilde[j]);
        est.var_cell[i][j] = v;
        double w = 1.0 / std::max(v, 1e-300);
        wsum += w;
        acc += w * p_cell(i, j);
      }
      p_next[j] = wsum > 0 ? acc / wsum : 0.0;
    }
    p_tilde = std::move(p_next);
  }
  double mass = 0;
  for (std::size_t j = 0; j < nr; ++j) mass += p_tilde[j];
  for (std::size_t j = 0; j < nr; ++j) est.p_hat[j] = p_tilde[j] / mass;

  est.value = 0;
  for (std::size_t j = 0; j < nr; ++j)
    if (!std::isnan(est.g_ring[j])) est.value += est.p_hat[j] * est.g_ring[j];
  return est;
}

inline std::string curve_to_csv(const MicrocanonicalCurve& curve) {
  std::string out = "u,value,count,flag\n";
  for (std::size_t b = 0; b < curve.num_bins(); ++b) {
    append_csv_number(out, curve.u[b]);
    out.push_back(',');
    append_csv_number(out, curve.absent[b] ? 0.0 : curve.value[b]);
    out.push_back(',');
    append_csv_number(out, curve.count[b]);
    out.push_back(',');
    out += curve.absent[b] ? "absent" : "ok";
    out.push_back('\n');
  }
  return out;
}

inline std::string dos_to_csv(const DensityOfStates& dos) {
  std::string out = "u,value,count,flag\n";
  for (std::size_t b = 0; b < dos.num_bins(); ++b) {
    append_csv_number(out, dos.u[b]);
    out.push_back(',');
    append_csv_number(out, dos.omega[b]);
    out.push_back(',');
    append_csv_number(out, dos.pooled[b]);
    out.push_back(',');
    out += dos.pooled[b] > 0 ? "ok" : "absent";
    out.push_back('\n');
  }
  return out;
}

inline std::string thermo_to_csv(const std::vector<ThermoPoint>& pts) {
  std::string out = "T,Z_ratio,U,C,F\n";
  for (const auto& p : pts) {
    append_csv_number(out, p.T);
    out.push_back(',');
    append_csv_number(out, p.z_ratio);
    out.push_back(',');
    append_csv_number(out, p.U);
    out.push_back(',');
    append_csv_number(out, p.C);
    out.push_back(',');
    append_csv_number(out, p.F);
    out.push_back('\n');
  }
  return out;
}

}  // namespace ee
