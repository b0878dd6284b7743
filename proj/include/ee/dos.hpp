#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "ee/histogram.hpp"
#include "ee/ladder.hpp"
#include "ee/logsum.hpp"

namespace ee {

enum class DosNormalization { kReferenceBin, kSumToOne };

struct DensityOfStates {
  std::vector<double> u;          // bin representatives (all histogram bins)
  std::vector<double> log_omega;  // log density per unit energy; -inf on empty bins
  std::vector<double> omega;      // exp(log_omega), 0 on empty bins
  std::vector<double> widths;
  std::vector<double> pooled;  // m_.u, the per-bin pooled counts
  DosNormalization normalization = DosNormalization::kReferenceBin;
  double residual = 0;  // worst relative stationarity defect over occupied bins
  bool converged = false;
  std::size_t iterations = 0;

  std::size_t num_bins() const { return u.size(); }
};

// Maximum-likelihood density of states from per-chain histograms, via the
// fixed-point iteration
//   omega(u) <- m_.u / sum_i [ m_i. * a_iu / sum_v omega(v) a_iv ],
// a_iu = exp(-max(u, H_i)/T_i), run entirely in the log domain.  The iterate
// is scale-free, so each sweep renormalizes at the first occupied bin; empty
// bins are excluded throughout.
inline DensityOfStates dos_estimate(const EnergyHistogram& hist, const EnergyLadder& ladder,
                                    double tol = 1e-10, std::size_t max_iter = 10000,
                                    DosNormalization norm = DosNormalization::kReferenceBin) {
  std::size_t nb = hist.num_bins();
  std::size_t nc = hist.num_chains();
  if (nc != ladder.num_chains())
    throw std::invalid_argument("dos_estimate: histogram chains do not match the ladder");

  std::vector<std::size_t> occ;
  for (std::size_t b = 0; b < nb; ++b)
    if (hist.pooled[b] > 0) occ.push_back(b);
  if (occ.empty()) throw std::invalid_argument("dos_estimate: no occupied bins");

  // log a_iu at the occupied representatives, and the log count terms
  std::vector<std::vector<double>> la(nc, std::vector<double>(occ.size()));
  for (std::size_t i = 0; i < nc; ++i)
    for (std::size_t t = 0; t < occ.size(); ++t)
      la[i][t] = -ladder.truncated_energy(i, hist.reps[occ[t]]);
  std::vector<double> log_mi(nc, kNegInf);
  for (std::size_t i = 0; i < nc; ++i)
    if (hist.chain_totals[i] > 0) log_mi[i] = std::log(hist.chain_totals[i]);
  std::vector<double> log_mu(occ.size());
  for (std::size_t t = 0; t < occ.size(); ++t) log_mu[t] = std::log(hist.pooled[occ[t]]);

  std::vector<double> lw(occ.size(), 0.0), next(occ.size());
  std::vector<double> lz(nc);
  double change = 0;
  std::size_t it = 0;
  for (; it < max_iter; ++it) {
    for (std::size_t i = 0; i < nc; ++i) {
      LogSum z;
      for (std::size_t t = 0; t < occ.size(); ++t) z.add(lw[t] + la[i][t]);
      lz[i] = z.value();
    }
    for (std::size_t t = 0; t < occ.size(); ++t) {
      LogSum denom;
      for (std::size_t i = 0; i < nc; ++i) denom.add(log_mi[i] + la[i][t] - lz[i]);
      next[t] = log_mu[t] - denom.value();
    }
    double anchor = next[0];
    change = 0;
    for (std::size_t t = 0; t < occ.size(); ++t) {
      next[t] -= anchor;
      change = std::max(change, std::abs(next[t] - lw[t]));
    }
    lw.swap(next);
    if (change < tol) {
      ++it;
      break;
    }
  }

  DensityOfStates dos;
  dos.u = hist.reps;
  dos.widths = hist.widths;
  dos.pooled = hist.pooled;
  dos.normalization = norm;
  dos.iterations = it;
  dos.log_omega.assign(nb, kNegInf);
  for (std::size_t t = 0; t < occ.size(); ++t) dos.log_omega[occ[t]] = lw[t];

  // stationarity defect: relative gap between m_.u and its fitted value
  for (std::size_t i = 0; i < nc; ++i) {
    LogSum z;
    for (std::size_t t = 0; t < occ.size(); ++t) z.add(lw[t] + la[i][t]);
    lz[i] = z.value();
  }
  dos.residual = 0;
  for (std::size_t t = 0; t < occ.size(); ++t) {
    LogSum fit;
    for (std::size_t i = 0; i < nc; ++i) fit.add(log_mi[i] + la[i][t] - lz[i]);
    double rel = std::abs(std::exp(lw[t] + fit.value() - log_mu[t]) - 1.0);
    dos.residual = std::max(dos.residual, rel);
  }
  dos.converged = change < tol;

  // the fit solves per-bin masses; report a density per unit energy so the
  // estimate is comparable across discretizations with uneven bin widths
  for (std::size_t t = 0; t < occ.size(); ++t)
    dos.log_omega[occ[t]] -= std::log(hist.widths[occ[t]]);

  if (norm == DosNormalization::kReferenceBin) {
    double ref = dos.log_omega[occ.front()];
    for (std::size_t t = 0; t < occ.size(); ++t) dos.log_omega[occ[t]] -= ref;
  } else {
    // unit total mass: sum over bins of density * width is one
    LogSum total;
    for (std::size_t t = 0; t < occ.size(); ++t)
      total.add(dos.log_omega[occ[t]] + std::log(hist.widths[occ[t]]));
    double ref = total.value();
    for (std::size_t t = 0; t < occ.size(); ++t) dos.log_omega[occ[t]] -= ref;
  }
  dos.omega.assign(nb, 0.0);
  for (std::size_t t = 0; t < occ.size(); ++t) dos.omega[occ[t]] = std::exp(dos.log_omega[occ[t]]);
  return dos;
}

}  // namespace ee
