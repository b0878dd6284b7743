#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/ladder.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"

namespace ee {

// Bayesian motif discovery over DNA sequences.  The state is a binary array of
// site-start indicators; the target is the collapsed posterior with the motif
// weight matrix and the site-abundance parameter integrated out, leaving only
// gamma-function terms and a first-order background correction.

inline int base_index(char c) {
  switch (c) {
    case 'A': case 'a': return 0;
    case 'C': case 'c': return 1;
    case 'G': case 'g': return 2;
    case 'T': case 't': return 3;
    default: throw std::invalid_argument(std::string("sequence: bad letter '") + c + "'");
  }
}

inline char base_char(std::size_t i) { return "ACGT"[i]; }

struct SequenceSet {
  std::vector<std::string> names;                // parallel to seqs; may be empty
  std::vector<std::vector<std::uint8_t>> seqs;   // coded 0..3

  std::size_t count() const { return seqs.size(); }
  std::size_t length(std::size_t k) const { return seqs[k].size(); }
  std::size_t total_length() const {
    std::size_t n = 0;
    for (const auto& s : seqs) n += s.size();
    return n;
  }
  double mean_length() const {
    return seqs.empty() ? 0.0 : double(total_length()) / double(seqs.size());
  }
  std::string letters(std::size_t k) const {
    std::string out;
    for (std::uint8_t c : seqs[k]) out.push_back(base_char(c));
    return out;
  }

  static SequenceSet from_strings(const std::vector<std::string>& texts) {
    SequenceSet s;
    for (const auto& t : texts) {
      std::vector<std::uint8_t> row;
      row.reserve(t.size());
      for (char c : t) row.push_back(static_cast<std::uint8_t>(base_index(c)));
      s.seqs.push_back(std::move(row));
      s.names.push_back(">" + std::to_string(s.seqs.size()));
    }
    return s;
  }
};

inline SequenceSet parse_fasta(std::string_view text) {
  SequenceSet s;
  std::string name;
  std::vector<std::uint8_t> row;
  bool open = false;
  auto flush = [&] {
    if (!open) return;
    if (row.empty()) throw std::invalid_argument("fasta: record '" + name + "' has no sequence");
    s.names.push_back(name);
    s.seqs.push_back(std::move(row));
    row.clear();
  };
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    std::string_view line = text.substr(pos, eol == std::string_view::npos ? eol : eol - pos);
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    if (line.front() == '>') {
      flush();
      name = std::string(line.substr(1));
      open = true;
    } else {
      if (!open) throw std::invalid_argument("fasta: sequence data before any '>' header");
      for (char c : line) row.push_back(static_cast<std::uint8_t>(base_index(c)));
    }
  }
  flush();
  if (s.seqs.empty()) throw std::invalid_argument("fasta: no records");
  return s;
}

inline std::string to_fasta(const SequenceSet& s) {
  std::string out;
  for (std::size_t k = 0; k < s.count(); ++k) {
    out.push_back('>');
    out += k < s.names.size() && !s.names[k].empty() ? s.names[k]
                                                     : "seq" + std::to_string(k + 1);
    out.push_back('\n');
    std::string letters = s.letters(k);
    for (std::size_t i = 0; i < letters.size(); i += 60) {
      out += letters.substr(i, 60);
      out.push_back('\n');
    }
  }
  return out;
}

struct BackgroundModel {
  std::array<std::array<double, 4>, 4> trans{};
  std::array<double, 4> init{};  // distribution of a sequence's first letter

  void validate() const {
    double isum = 0;
    for (double v : init) {
      if (!(v >= 0)) throw std::invalid_argument("background: negative initial probability");
      isum += v;
    }
    if (std::abs(isum - 1.0) > 1e-12)
      throw std::invalid_argument("background: initial distribution does not sum to 1");
    for (const auto& row : trans) {
      double rsum = 0;
      for (double v : row) {
        if (!(v >= 0)) throw std::invalid_argument("background: negative transition probability");
        rsum += v;
      }
      if (std::abs(rsum - 1.0) > 1e-12)
        throw std::invalid_argument("background: transition row does not sum to 1");
    }
  }

  // symmetric repeat-heavy chain: stay probability 1-3a, switch probability a
  static BackgroundModel repeat_rich(double alpha) {
    if (!(alpha > 0) || !(alpha < 1.0 / 3.0))
      throw std::invalid_argument("background: alpha must lie in (0, 1/3)");
    BackgroundModel bg;
    for (std::size_t i = 0; i < 4; ++i) {
      bg.init[i] = 0.25;
      for (std::size_t j = 0; j < 4; ++j) bg.trans[i][j] = i == j ? 1.0 - 3.0 * alpha : alpha;
    }
    return bg;
  }

  static BackgroundModel uniform() {
    BackgroundModel bg;
    for (std::size_t i = 0; i < 4; ++i) {
      bg.init[i] = 0.25;
      for (std::size_t j = 0; j < 4; ++j) bg.trans[i][j] = 0.25;
    }
    return bg;
  }
};

// First-order transition frequencies over the whole data set with an additive
// pseudocount; rows never observed (and given no pseudocount) fall back to
// uniform.  The initial distribution is the fitted chain's stationary vector.
inline BackgroundModel fit_background(const SequenceSet& s, double pseudocount) {
  if (s.count() == 0) throw std::invalid_argument("fit_background: empty sequence set");
  if (!(pseudocount >= 0)) throw std::invalid_argument("fit_background: negative pseudocount");
  double counts[4][4] = {};
  for (const auto& seq : s.seqs)
    for (std::size_t t = 1; t < seq.size(); ++t) counts[seq[t - 1]][seq[t]] += 1.0;
  BackgroundModel bg;
  for (std::size_t i = 0; i < 4; ++i) {
    double rsum = 0;
    for (std::size_t j = 0; j < 4; ++j) rsum += counts[i][j] + pseudocount;
    if (rsum == 0) {
      for (std::size_t j = 0; j < 4; ++j) bg.trans[i][j] = 0.25;
    } else {
      for (std::size_t j = 0; j < 4; ++j) bg.trans[i][j] = (counts[i][j] + pseudocount) / rsum;
    }
  }
  bg.init = {0.25, 0.25, 0.25, 0.25};
  for (int it = 0; it < 512; ++it) {
    std::array<double, 4> next{};
    for (std::size_t i = 0; i < 4; ++i)
      for (std::size_t j = 0; j < 4; ++j) next[j] += bg.init[i] * bg.trans[i][j];
    double nsum = next[0] + next[1] + next[2] + next[3];
    for (auto& v : next) v /= nsum;
    bg.init = next;
  }
  return bg;
}

struct MotifHyperparams {
  std::vector<std::array<double, 4>> beta;  // Dirichlet pseudocounts per column
  double a = 1.0, b = 1.0;                  // Beta prior on the site abundance

  void validate() const {
    if (beta.empty()) throw std::invalid_argument("hyperparams: no columns");
    if (!(a > 0) || !(b > 0)) throw std::invalid_argument("hyperparams: a, b must be positive");
    for (const auto& col : beta)
      for (double v : col)
        if (!(v > 0)) throw std::invalid_argument("hyperparams: pseudocounts must be positive");
  }

  static MotifHyperparams uniform(std::size_t w, double cell = 1.0) {
    MotifHyperparams hp;
    hp.beta.assign(w, {cell, cell, cell, cell});
    return hp;
  }
};

// Binary site-start indicators, one slot per legal start (j + w - 1 < L_k).
struct IndicatorArray {
  std::size_t w = 1;
  std::vector<std::vector<std::uint8_t>> on;
  std::uint32_t total = 0;  // number of indicated sites

  std::size_t count() const { return total; }
  bool operator==(const IndicatorArray&) const = default;

  void set(std::size_t k, std::size_t j, bool value) {
    if (on[k][j] == std::uint8_t(value)) return;
    on[k][j] = std::uint8_t(value);
    total += value ? 1 : -1;
  }
};

inline IndicatorArray empty_indicators(const SequenceSet& s, std::size_t w) {
  if (w == 0) throw std::invalid_argument("indicators: zero width");
  IndicatorArray a;
  a.w = w;
  for (std::size_t k = 0; k < s.count(); ++k) {
    if (s.length(k) < w)
      throw std::invalid_argument("indicators: sequence shorter than the motif width");
    a.on.emplace_back(s.length(k) - w + 1, 0);
  }
  return a;
}

// ---- position weight matrices ----------------------------------------------

using Pwm = std::vector<std::array<double, 4>>;  // one column per motif position

inline void validate_pwm(const Pwm& pwm) {
  if (pwm.empty()) throw std::invalid_argument("pwm: no columns");
  for (const auto& col : pwm) {
    double sum = 0;
    for (double v : col) {
      if (!(v >= 0)) throw std::invalid_argument("pwm: negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw std::invalid_argument("pwm: column does not sum to 1");
  }
}

// 4 x w tab-separated table, rows A/C/G/T
inline Pwm parse_pwm(std::string_view text) {
  std::array<std::vector<double>, 4> rows;
  std::size_t r = 0, pos = 0;
  while (pos < text.size() && r < 5) {
    std::size_t eol = text.find('\n', pos);
    std::string line(text.substr(pos, eol == std::string_view::npos ? eol : eol - pos));
    pos = eol == std::string_view::npos ? text.size() : eol + 1;
    if (line.empty() || line == "\r") continue;
    if (r == 4) throw std::invalid_argument("pwm: more than 4 rows");
    std::size_t at = 0;
    while (at < line.size()) {
      std::size_t tab = line.find('\t', at);
      std::string cell = line.substr(at, tab == std::string::npos ? tab : tab - at);
      at = tab == std::string::npos ? line.size() : tab + 1;
      if (!cell.empty()) rows[r].push_back(std::stod(cell));
    }
    ++r;
  }
  if (r != 4) throw std::invalid_argument("pwm: expected 4 rows (A, C, G, T)");
  for (std::size_t i = 1; i < 4; ++i)
    if (rows[i].size() != rows[0].size()) throw std::invalid_argument("pwm: ragged rows");
  Pwm pwm(rows[0].size());
  for (std::size_t c = 0; c < pwm.size(); ++c)
    for (std::size_t i = 0; i < 4; ++i) pwm[c][i] = rows[i][c];
  validate_pwm(pwm);
  return pwm;
}

inline std::string pwm_to_text(const Pwm& pwm) {
  std::string out;
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t c = 0; c < pwm.size(); ++c) {
      if (c) out.push_back('\t');
      append_csv_number(out, pwm[c][i]);
    }
    out.push_back('\n');
  }
  return out;
}

namespace motifdetail {

inline std::array<double, 4> pwm_column(char dominant, double weight) {
  double rest = (1.0 - weight) / 3.0;
  std::array<double, 4> col = {rest, rest, rest, rest};
  col[std::size_t(base_index(dominant))] = weight;
  return col;
}

inline Pwm consensus_pwm(std::string_view consensus, const std::vector<double>& weights) {
  Pwm pwm;
  for (std::size_t i = 0; i < consensus.size(); ++i)
    pwm.push_back(pwm_column(consensus[i], weights[i % weights.size()]));
  return pwm;
}

}  // namespace motifdetail

// Width-12 benchmark pattern: a sharp consensus with two softer middle
// columns.  The consensus string shares at most 2 of 12 letters with any
// shift of itself, so phase-shifted alignments score poorly, and it never
// repeats a letter, so it stands out against repeat-heavy background.
inline Pwm benchmark_pwm() {
  return motifdetail::consensus_pwm("CTAGCTCATAGT",
                                    {0.90, 0.90, 0.90, 0.90, 0.70, 0.90, 0.90, 0.70, 0.90, 0.90,
                                     0.90, 0.90});
}

// two dissimilar width-12 patterns (cross-shift overlap <= 3 letters) for the
// mode-switching benchmark
inline std::array<Pwm, 2> benchmark_pwm_pair() {
  return {benchmark_pwm(),
          motifdetail::consensus_pwm("CAGTACGCGTCA",
                                     {0.90, 0.90, 0.90, 0.90, 0.70, 0.90, 0.90, 0.70, 0.90, 0.90,
                                      0.90, 0.90})};
}

// ---- simulation --------------------------------------------------------------

struct PlantedSite {
  std::size_t seq = 0, pos = 0, motif = 0;
};

struct MotifSimConfig {
  std::size_t sequences = 10;
  std::size_t length = 200;
  double alpha = 0.12;
  std::vector<Pwm> motifs;             // patterns to plant (all the same width)
  std::vector<std::size_t> sites;      // planted site count per pattern
  std::uint64_t seed = 1;
};

struct SimulatedMotifData {
  SequenceSet sequences;
  IndicatorArray truth;
  std::vector<PlantedSite> sites;
};

namespace motifdetail {

inline std::size_t draw4(const std::array<double, 4>& p, Rng& rng) {
  double u = rng.uniform01();
  double acc = 0;
  for (std::size_t i = 0; i < 3; ++i) {
    acc += p[i];
    if (u < acc) return i;
  }
  return 3;
}

}  // namespace motifdetail

// Repeat-heavy background with motif sites written over it at non-overlapping
// uniform positions; returns the data plus the planted truth.
inline SimulatedMotifData simulate_sequences(const MotifSimConfig& cfg) {
  if (cfg.sequences == 0 || cfg.length == 0)
    throw std::invalid_argument("simulate: empty layout");
  std::size_t w = cfg.motifs.empty() ? 0 : cfg.motifs.front().size();
  for (const auto& pwm : cfg.motifs) {
    validate_pwm(pwm);
    if (pwm.size() != w) throw std::invalid_argument("simulate: motif widths differ");
  }
  if (cfg.sites.size() != cfg.motifs.size())
    throw std::invalid_argument("simulate: one site count per motif required");
  BackgroundModel bg = BackgroundModel::repeat_rich(cfg.alpha);
  Rng rng(cfg.seed);

  SimulatedMotifData out;
  for (std::size_t k = 0; k < cfg.sequences; ++k) {
    std::vector<std::uint8_t> seq(cfg.length);
    seq[0] = static_cast<std::uint8_t>(motifdetail::draw4(bg.init, rng));
    for (std::size_t t = 1; t < cfg.length; ++t)
      seq[t] = static_cast<std::uint8_t>(motifdetail::draw4(bg.trans[seq[t - 1]], rng));
    out.sequences.seqs.push_back(std::move(seq));
    out.sequences.names.push_back("sim" + std::to_string(k + 1));
  }

  if (w == 0) {
    out.truth.w = 1;
    out.truth.on.assign(cfg.sequences, std::vector<std::uint8_t>(cfg.length, 0));
    return out;
  }
  if (cfg.length < w) throw std::invalid_argument("simulate: sequences shorter than the motif");

  out.truth = empty_indicators(out.sequences, w);
  std::vector<std::vector<char>> used(cfg.sequences, std::vector<char>(cfg.length, 0));
  for (std::size_t m = 0; m < cfg.motifs.size(); ++m) {
    for (std::size_t n = 0; n < cfg.sites[m]; ++n) {
      bool placed = false;
      for (int attempt = 0; attempt < 20000 && !placed; ++attempt) {
        std::size_t k = rng.uniform_below(cfg.sequences);
        std::size_t j = rng.uniform_below(cfg.length - w + 1);
        bool clash = false;
        for (std::size_t t = j; t < j + w; ++t) clash = clash || used[k][t];
        if (clash) continue;
        for (std::size_t t = 0; t < w; ++t) {
          used[k][j + t] = 1;
          out.sequences.seqs[k][j + t] =
              static_cast<std::uint8_t>(motifdetail::draw4(cfg.motifs[m][t], rng));
        }
        out.truth.set(k, j, true);
        out.sites.push_back({k, j, m});
        placed = true;
      }
      if (!placed) throw std::runtime_error("simulate: could not place all motif sites");
    }
  }
  return out;
}

// ---- evaluation ---------------------------------------------------------------

// visit counts per legal start position over a recorded sample stream
struct SiteFrequency {
  std::vector<std::vector<double>> counts;
  std::uint64_t samples = 0;

  void add(const IndicatorArray& a) {
    if (counts.empty()) {
      counts.reserve(a.on.size());
      for (const auto& row : a.on) counts.emplace_back(row.size(), 0.0);
    }
    for (std::size_t k = 0; k < a.on.size(); ++k)
      for (std::size_t j = 0; j < a.on[k].size(); ++j) counts[k][j] += a.on[k][j];
    ++samples;
  }

  std::vector<std::vector<double>> frequencies() const {
    std::vector<std::vector<double>> freq = counts;
    if (samples)
      for (auto& row : freq)
        for (auto& v : row) v /= double(samples);
    return freq;
  }
};

struct RocPoint {
  double threshold = 0;
  std::size_t true_positives = 0, false_positives = 0;
};

struct SiteEvaluation {
  std::vector<RocPoint> roc;                // one row per requested threshold
  std::vector<double> true_site_frequency;  // visit frequency of each true site
};

// Positions with frequency >= threshold are predicted sites; counted against
// the planted truth per threshold.
inline SiteEvaluation evaluate_sites(const std::vector<std::vector<double>>& freq,
                                     const IndicatorArray& truth,
                                     const std::vector<double>& thresholds) {
  if (freq.size() != truth.on.size())
    throw std::invalid_argument("evaluate_sites: frequency and truth shapes differ");
  for (std::size_t k = 0; k < freq.size(); ++k)
    if (freq[k].size() != truth.on[k].size())
      throw std::invalid_argument("evaluate_sites: frequency and truth shapes differ");

  SiteEvaluation out;
  for (std::size_t k = 0; k < freq.size(); ++k)
    for (std::size_t j = 0; j < freq[k].size(); ++j)
      if (truth.on[k][j]) out.true_site_frequency.push_back(freq[k][j]);
  for (double q : thresholds) {
    RocPoint pt;
    pt.threshold = q;
    for (std::size_t k = 0; k < freq.size(); ++k)
      for (std::size_t j = 0; j < freq[k].size(); ++j) {
        if (freq[k][j] < q) continue;
        ++(truth.on[k][j] ? pt.true_positives : pt.false_positives);
      }
    out.roc.push_back(pt);
  }
  return out;
}

// ---- the collapsed-posterior model ---------------------------------------------

struct MotifOptions {
  double pseudocount_slope = 1.0;  // proposal pseudocount per chain index
  bool exclude_overlaps = false;   // constrain the support to non-overlapping sites
};

struct MotifModel {
  using state_type = IndicatorArray;

  SequenceSet data;
  BackgroundModel background;
  MotifHyperparams prior;
  std::size_t width = 0;
  MotifOptions options;

  MotifModel(SequenceSet s, std::size_t w, BackgroundModel bg, MotifHyperparams hp,
             MotifOptions opt = {})
      : data(std::move(s)), background(std::move(bg)), prior(std::move(hp)), width(w),
        options(opt) {
    if (width == 0) throw std::invalid_argument("motif: zero width");
    if (prior.beta.size() != width)
      throw std::invalid_argument("motif: hyperparameter columns != width");
    prior.validate();
    background.validate();
    if (data.count() == 0) throw std::invalid_argument("motif: no sequences");
    for (std::size_t k = 0; k < data.count(); ++k)
      if (data.length(k) < width)
        throw std::invalid_argument("motif: sequence shorter than the motif width");

    total_letters_ = double(data.total_length());
    p0_hat_ = 1.0 / data.mean_length();
    for (std::size_t i = 0; i < width; ++i) {
      double bsum = 0;
      for (double v : prior.beta[i]) bsum += v;
      beta_sum_.push_back(bsum);
    }
    // log background probability of the width-w window at every legal start;
    // a window at the very front uses the initial distribution for its first letter
    for (std::size_t k = 0; k < data.count(); ++k) {
      const auto& seq = data.seqs[k];
      std::vector<double> row(seq.size() - width + 1);
      for (std::size_t j = 0; j < row.size(); ++j) {
        double acc = j == 0 ? std::log(background.init[seq[0]])
                            : std::log(background.trans[seq[j - 1]][seq[j]]);
        for (std::size_t n = 1; n < width; ++n)
          acc += std::log(background.trans[seq[j + n - 1]][seq[j + n]]);
        row[j] = acc;
      }
      log_bg_.push_back(std::move(row));
    }
    double lp0 = std::lgamma(prior.a) + std::lgamma(total_letters_ + prior.b) -
                 std::lgamma(total_letters_ + prior.a + prior.b);
    for (std::size_t i = 0; i < width; ++i) {
      for (double v : prior.beta[i]) lp0 += std::lgamma(v);
      lp0 -= std::lgamma(beta_sum_[i]);
    }
    log_posterior_empty_ = lp0;
  }

  static MotifModel with_fitted_background(SequenceSet s, std::size_t w,
                                           double bg_pseudocount = 1.0, MotifOptions opt = {}) {
    BackgroundModel bg = fit_background(s, bg_pseudocount);
    return MotifModel(std::move(s), w, std::move(bg), MotifHyperparams::uniform(w), opt);
  }

  IndicatorArray empty_state() const { return empty_indicators(data, width); }
  double site_abundance() const { return p0_hat_; }
  double log_background_site(std::size_t k, std::size_t j) const { return log_bg_[k][j]; }

  bool has_overlap(const IndicatorArray& a) const {
    for (const auto& row : a.on) {
      std::size_t last = row.size();  // sentinel: none yet
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (!row[j]) continue;
        if (last != row.size() && j - last < width) return true;
        last = j;
      }
    }
    return false;
  }

  // log of the collapsed posterior (unnormalized, every A-dependent term kept)
  double collapsed_log_posterior(const IndicatorArray& a) const {
    require_shape(a);
    double m = double(a.total);
    double lp = std::lgamma(m + prior.a) + std::lgamma(total_letters_ - m + prior.b) -
                std::lgamma(total_letters_ + prior.a + prior.b);
    std::vector<std::array<std::uint32_t, 4>> c(width, {0, 0, 0, 0});
    for (std::size_t k = 0; k < a.on.size(); ++k)
      for (std::size_t j = 0; j < a.on[k].size(); ++j) {
        if (!a.on[k][j]) continue;
        lp -= log_bg_[k][j];
        for (std::size_t n = 0; n < width; ++n) ++c[n][data.seqs[k][j + n]];
      }
    for (std::size_t i = 0; i < width; ++i) {
      for (std::size_t l = 0; l < 4; ++l) lp += std::lgamma(c[i][l] + prior.beta[i][l]);
      lp -= std::lgamma(m + beta_sum_[i]);
    }
    return lp;
  }

  // energy anchored so the empty configuration sits at zero
  double energy(const IndicatorArray& a) const {
    if (options.exclude_overlaps && has_overlap(a))
      return std::numeric_limits<double>::infinity();
    return log_posterior_empty_ - collapsed_log_posterior(a);
  }

  // exact full conditional of one indicator under the untruncated posterior
  double gibbs_site_probability(const IndicatorArray& a, std::size_t k, std::size_t j) const {
    Counts cnt = tally(a);
    if (a.on[k][j]) remove_site(cnt, k, j);
    if (options.exclude_overlaps && overlaps_elsewhere(a, k, j)) return 0.0;
    double delta = add_delta(cnt, k, j);
    return 1.0 / (1.0 + std::exp(-delta));
  }

  IndicatorArray gibbs_position_update(IndicatorArray a, std::size_t k, std::size_t j,
                                       Rng& rng) const {
    double p1 = gibbs_site_probability(a, k, j);
    a.set(k, j, rng.uniform01() < p1);
    return a;
  }

  // ---- within-chain kernels used by the sampler ------------------------------

  // chain 0: systematic Gibbs sweep; chains above: pattern-driven independence
  // proposal with the matching reverse-move correction
  LocalStepInfo local_step(IndicatorArray& x, double& h, std::size_t i,
                           const EnergyLadder& ladder, Rng& rng) const {
    if (i == 0) return gibbs_sweep(x, h, i, ladder, rng);
    Proposal<IndicatorArray> prop = propose_indicator_array(x, i, rng);
    double hy = energy(prop.state);
    double la = ladder.truncated_energy(i, h) - ladder.truncated_energy(i, hy) + prop.log_ratio;
    LocalStepInfo info;
    if (la >= 0 || rng.uniform01() < std::exp(la)) {
      x = std::move(prop.state);
      h = hy;
      info.accepts = 1;
    }
    return info;
  }

  // motif pattern re-estimated from the current sites with flat pseudocounts
  Pwm estimate_pwm(const IndicatorArray& a, double pseudocount) const {
    require_shape(a);
    if (!(pseudocount > 0) && a.total == 0)
      throw std::invalid_argument("estimate_pwm: empty sites need a positive pseudocount");
    Counts cnt = tally(a);
    Pwm pwm(width);
    double denom = double(a.total) + 4.0 * pseudocount;
    for (std::size_t i = 0; i < width; ++i)
      for (std::size_t l = 0; l < 4; ++l) pwm[i][l] = (cnt.c[i][l] + pseudocount) / denom;
    return pwm;
  }

  // log odds of proposing a site at (k, j) given an estimated pattern
  double proposal_log_odds(std::size_t k, std::size_t j, const Pwm& pwm) const {
    double lw = 0;
    for (std::size_t n = 0; n < width; ++n) lw += std::log(pwm[n][data.seqs[k][j + n]]);
    return std::log(p0_hat_) - std::log1p(-p0_hat_) + lw - log_bg_[k][j];
  }

  // log probability that the independent per-position draw produces `target`
  double proposal_log_probability(const Pwm& pwm, const IndicatorArray& target) const {
    require_shape(target);
    double acc = 0;
    for (std::size_t k = 0; k < target.on.size(); ++k)
      for (std::size_t j = 0; j < target.on[k].size(); ++j) {
        double lo = proposal_log_odds(k, j, pwm);
        double lse = lo > 0 ? lo + std::log1p(std::exp(-lo)) : std::log1p(std::exp(lo));
        acc += target.on[k][j] ? lo - lse : -lse;
      }
    return acc;
  }

  // independence proposal for chain i >= 1; log_ratio carries the reverse-move
  // correction with the pattern re-estimated from the proposed array
  Proposal<IndicatorArray> propose_indicator_array(const IndicatorArray& a, std::size_t chain,
                                                   Rng& rng) const {
    if (chain == 0)
      throw std::invalid_argument("propose_indicator_array: target chain uses Gibbs updates");
    double pc = options.pseudocount_slope * double(chain);
    Pwm pwm = estimate_pwm(a, pc);
    IndicatorArray prop = a;
    for (std::size_t k = 0; k < prop.on.size(); ++k)
      for (std::size_t j = 0; j < prop.on[k].size(); ++j) {
        double lo = proposal_log_odds(k, j, pwm);
        double q = 1.0 / (1.0 + std::exp(-lo));
        prop.set(k, j, rng.uniform01() < q);
      }
    Pwm pwm_star = estimate_pwm(prop, pc);
    double log_ratio =
        proposal_log_probability(pwm_star, a) - proposal_log_probability(pwm, prop);
    return {std::move(prop), log_ratio};
  }

  struct GibbsTrial {
    IndicatorArray best;
    double min_energy = std::numeric_limits<double>::infinity();
  };

  // ladder calibration, lower end: short raw-posterior Gibbs trials from the
  // empty array.  The smallest energy seen (minus a caller-side margin) makes
  // a working floor — the sampler's dynamic floor adjustment covers the rest —
  // and the best state doubles as a mode start for the target chain.
  GibbsTrial gibbs_trial(std::size_t sweeps, std::size_t restarts, Rng& rng) const {
    EnergyLadder flat;
    flat.levels = {-std::numeric_limits<double>::infinity()};
    flat.temps = {1.0};
    GibbsTrial out;
    for (std::size_t r = 0; r < restarts; ++r) {
      IndicatorArray a = empty_state();
      double h = energy(a);
      for (std::size_t s = 0; s < sweeps; ++s) {
        gibbs_sweep(a, h, 0, flat, rng);
        if (h < out.min_energy) {
          out.min_energy = h;
          out.best = a;
        }
      }
    }
    return out;
  }

  // independent raw-posterior Gibbs run from the empty array; used to give
  // every chain its own warm start so the rings seed with real basins
  IndicatorArray gibbs_warm_start(std::size_t sweeps, Rng& rng) const {
    EnergyLadder flat;
    flat.levels = {-std::numeric_limits<double>::infinity()};
    flat.temps = {1.0};
    IndicatorArray a = empty_state();
    double h = energy(a);
    for (std::size_t s = 0; s < sweeps; ++s) gibbs_sweep(a, h, 0, flat, rng);
    return a;
  }

  // ladder calibration, upper end: the energy of `segments` random positions
  // treated as sites
  double calibration_energy(std::size_t segments, Rng& rng) const {
    IndicatorArray a = empty_state();
    std::size_t guard = 0;
    while (a.total < segments) {
      std::size_t k = rng.uniform_below(data.count());
      std::size_t j = rng.uniform_below(a.on[k].size());
      if (options.exclude_overlaps && overlaps_elsewhere(a, k, j)) {
        if (++guard > 100000)
          throw std::runtime_error("calibration_energy: cannot place segments");
        continue;
      }
      a.set(k, j, true);
    }
    return energy(a);
  }

  // ---- sampler plumbing -------------------------------------------------------

  void serialize_state(const IndicatorArray& a, std::string& out) const {
    for (const auto& row : a.on) {
      std::uint8_t byte = 0;
      std::size_t fill = 0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        byte |= std::uint8_t(row[j] ? 1 : 0) << fill;
        if (++fill == 8) {
          out.push_back(char(byte));
          byte = 0;
          fill = 0;
        }
      }
      if (fill) out.push_back(char(byte));
    }
  }

  IndicatorArray deserialize_state(const std::string& bytes) const {
    IndicatorArray a = empty_state();
    std::size_t at = 0;
    for (auto& row : a.on) {
      std::size_t fill = 0;
      for (std::size_t j = 0; j < row.size(); ++j) {
        if (at >= bytes.size()) throw std::invalid_argument("indicators: truncated bytes");
        if ((std::uint8_t(bytes[at]) >> fill) & 1) a.set(&row - a.on.data(), j, true);
        if (++fill == 8) {
          ++at;
          fill = 0;
        }
      }
      if (fill) ++at;
    }
    if (at != bytes.size()) throw std::invalid_argument("indicators: trailing bytes");
    return a;
  }

  std::string csv_header() const { return "sites"; }
  void append_csv_fields(const IndicatorArray& a, std::string& out) const {
    bool first = true;
    for (std::size_t k = 0; k < a.on.size(); ++k)
      for (std::size_t j = 0; j < a.on[k].size(); ++j) {
        if (!a.on[k][j]) continue;
        if (!first) out.push_back(';');
        out += std::to_string(k);
        out.push_back(':');
        out += std::to_string(j);
        first = false;
      }
  }

 private:
  struct Counts {
    std::vector<std::array<std::int32_t, 4>> c;
    std::int32_t m = 0;
  };

  void require_shape(const IndicatorArray& a) const {
    if (a.w != width || a.on.size() != data.count())
      throw std::invalid_argument("indicators: shape does not match the model");
    for (std::size_t k = 0; k < a.on.size(); ++k)
      if (a.on[k].size() != data.length(k) - width + 1)
        throw std::invalid_argument("indicators: shape does not match the model");
  }

  Counts tally(const IndicatorArray& a) const {
    Counts cnt;
    cnt.c.assign(width, {0, 0, 0, 0});
    cnt.m = std::int32_t(a.total);
    for (std::size_t k = 0; k < a.on.size(); ++k)
      for (std::size_t j = 0; j < a.on[k].size(); ++j)
        if (a.on[k][j])
          for (std::size_t n = 0; n < width; ++n) ++cnt.c[n][data.seqs[k][j + n]];
    return cnt;
  }

  void add_site(Counts& cnt, std::size_t k, std::size_t j) const {
    for (std::size_t n = 0; n < width; ++n) ++cnt.c[n][data.seqs[k][j + n]];
    ++cnt.m;
  }

  void remove_site(Counts& cnt, std::size_t k, std::size_t j) const {
    for (std::size_t n = 0; n < width; ++n) --cnt.c[n][data.seqs[k][j + n]];
    --cnt.m;
  }

  // log-posterior gain of adding the site at (k, j) to the tallied configuration
  double add_delta(const Counts& cnt, std::size_t k, std::size_t j) const {
    double m = double(cnt.m);
    double delta = -log_bg_[k][j] + std::log(m + prior.a) -
                   std::log(total_letters_ - m - 1.0 + prior.b);
    for (std::size_t n = 0; n < width; ++n) {
      std::size_t l = data.seqs[k][j + n];
      delta += std::log(cnt.c[n][l] + prior.beta[n][l]);
      delta -= std::log(m + beta_sum_[n]);
    }
    return delta;
  }

  bool overlaps_elsewhere(const IndicatorArray& a, std::size_t k, std::size_t j) const {
    std::size_t lo = j >= width - 1 ? j - (width - 1) : 0;
    std::size_t hi = std::min(j + width - 1, a.on[k].size() - 1);
    for (std::size_t t = lo; t <= hi; ++t)
      if (t != j && a.on[k][t]) return true;
    return false;
  }

  LocalStepInfo gibbs_sweep(IndicatorArray& x, double& h, std::size_t i,
                            const EnergyLadder& ladder, Rng& rng) const {
    Counts cnt = tally(x);
    LocalStepInfo info;
    info.attempts = 0;
    double h_cur = h;
    for (std::size_t k = 0; k < x.on.size(); ++k)
      for (std::size_t j = 0; j < x.on[k].size(); ++j) {
        ++info.attempts;
        bool cur = x.on[k][j];
        if (cur) remove_site(cnt, k, j);
        double h_without = cur ? h_cur + add_delta(cnt, k, j) : h_cur;
        if (options.exclude_overlaps && overlaps_elsewhere(x, k, j)) {
          if (cur) {  // unreachable from a legal state, but keep the sweep safe
            x.set(k, j, false);
            h_cur = h_without;
            ++info.accepts;
          }
          continue;
        }
        double delta = add_delta(cnt, k, j);
        double h_with = h_without - delta;
        double gap = ladder.truncated_energy(i, h_with) - ladder.truncated_energy(i, h_without);
        bool set = rng.uniform01() < 1.0 / (1.0 + std::exp(gap));
        if (set) {
          add_site(cnt, k, j);
          h_cur = h_with;
        } else {
          h_cur = h_without;
        }
        if (set != cur) {
          x.set(k, j, set);
          ++info.accepts;
        }
      }
    h = energy(x);  // exact value; the sweep's running energy only steers choices
    return info;
  }

  std::vector<std::vector<double>> log_bg_;
  std::vector<double> beta_sum_;
  double total_letters_ = 0;
  double p0_hat_ = 0;
  double log_posterior_empty_ = 0;
};

// Ladder recipe for motif runs: geometric gaps with the first gap pinned to 5
// so the target chain sits at temperature 1, and every T_j = gap_j / 5.
inline EnergyLadder motif_ladder(double h0, double h_top, std::size_t chains) {
  if (chains < 3) throw std::invalid_argument("motif_ladder: need at least 3 chains");
  double span = h_top - h0;
  std::size_t k = chains - 1;
  if (!(span > 5.0 * double(k)))
    throw std::invalid_argument("motif_ladder: range too small for increasing temperatures");
  // solve sum_{t<k} 5 rho^t = span for the gap ratio
  auto total = [&](double rho) {
    double acc = 0, g = 5.0;
    for (std::size_t t = 0; t < k; ++t, g *= rho) acc += g;
    return acc;
  };
  double lo = 1e-9, hi = 1.0;
  while (total(hi) < span) hi *= 2;
  for (int it = 0; it < 200; ++it) {
    double mid = 0.5 * (lo + hi);
    (total(mid) < span ? lo : hi) = mid;
  }
  double rho = 0.5 * (lo + hi);

  EnergyLadder lad;
  lad.levels.resize(chains);
  lad.temps.resize(chains);
  lad.levels[0] = h0;
  double gap = 5.0;
  for (std::size_t j = 0; j + 1 < chains; ++j, gap *= rho) {
    lad.levels[j + 1] = lad.levels[j] + gap;
    lad.temps[j] = gap / 5.0;
  }
  lad.levels[chains - 1] = h_top;  // absorb the bisection residue at the top
  lad.temps[chains - 1] = lad.temps[chains - 2] * rho;
  lad.validate();
  return lad;
}

}  // namespace ee
