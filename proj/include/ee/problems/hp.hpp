#pragma once

#include <array>
#include <cassert>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "ee/bytes.hpp"
#include "ee/estimation.hpp"
#include "ee/model.hpp"
#include "ee/rng.hpp"

namespace ee {

// 2D lattice HP heteropolymer.  A conformation is a self-avoiding walk on Z^2
// held in a fixed gauge (bead 1 at the origin, bead 2 at (1,0); reflections
// are distinct states).  Energy is -1 per H-H pair that is adjacent on the
// lattice but not along the backbone.

inline constexpr std::size_t kMaxBeads = 32;

struct HPSequence {
  std::string residues;  // validated, each 'H' or 'P'

  std::size_t size() const { return residues.size(); }
  bool is_h(std::size_t i) const { return residues[i] == 'H'; }

  static HPSequence parse(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("hp sequence: empty");
    if (text.size() > kMaxBeads)
      throw std::invalid_argument("hp sequence: longer than " + std::to_string(kMaxBeads));
    HPSequence s;
    for (char c : text) {
      if (c != 'H' && c != 'P')
        throw std::invalid_argument(std::string("hp sequence: bad residue '") + c + "'");
      s.residues.push_back(c);
    }
    return s;
  }

  // the length-20 benchmark sequence
  static HPSequence benchmark20() { return parse("HPHPPHHPHPPHPHHPPHPH"); }
};

struct LatticePoint {
  std::int8_t x = 0, y = 0;
  bool operator==(const LatticePoint&) const = default;
};

inline int l1_dist(LatticePoint a, LatticePoint b) {
  return std::abs(int(a.x) - int(b.x)) + std::abs(int(a.y) - int(b.y));
}

// Beads beyond len stay zero so default equality and byte hashing are exact.
struct Conformation {
  std::uint8_t len = 0;
  std::array<LatticePoint, kMaxBeads> bead{};

  std::size_t size() const { return len; }
  LatticePoint& operator[](std::size_t i) { return bead[i]; }
  const LatticePoint& operator[](std::size_t i) const { return bead[i]; }
  bool operator==(const Conformation&) const = default;
};

static_assert(std::is_trivially_copyable_v<Conformation>);

inline bool conformation_valid(const Conformation& c) {
  if (c.len == 0 || c.len > kMaxBeads) return false;
  if (c[0].x != 0 || c[0].y != 0) return false;
  if (c.len >= 2 && (c[1].x != 1 || c[1].y != 0)) return false;
  for (std::size_t i = 0; i + 1 < c.size(); ++i)
    if (l1_dist(c[i], c[i + 1]) != 1) return false;
  for (std::size_t i = 0; i < c.size(); ++i)
    for (std::size_t j = i + 1; j < c.size(); ++j)
      if (c[i] == c[j]) return false;
  return true;
}

inline void require_valid(const Conformation& c) {
  if (!conformation_valid(c)) throw std::invalid_argument("conformation: invariants violated");
}

// gauge fix: translate bead 1 to the origin, rotate bead 2 onto (1,0)
inline Conformation canonicalize(const Conformation& c) {
  Conformation out;
  out.len = c.len;
  if (c.len == 0) return out;
  int ox = c[0].x, oy = c[0].y;
  int rx = 1, ry = 0;
  if (c.len >= 2) {
    rx = c[1].x - ox;
    ry = c[1].y - oy;
  }
  for (std::size_t i = 0; i < c.size(); ++i) {
    int x = c[i].x - ox, y = c[i].y - oy;
    int nx, ny;
    if (rx == 1) {
      nx = x; ny = y;
    } else if (ry == 1) {
      nx = y; ny = -x;
    } else if (rx == -1) {
      nx = -x; ny = -y;
    } else {
      nx = -y; ny = x;
    }
    out[i] = {static_cast<std::int8_t>(nx), static_cast<std::int8_t>(ny)};
  }
  return out;
}

inline Conformation straight_chain(std::size_t k) {
  if (k == 0 || k > kMaxBeads) throw std::invalid_argument("straight_chain: bad length");
  Conformation c;
  c.len = static_cast<std::uint8_t>(k);
  for (std::size_t i = 0; i < k; ++i) c[i] = {static_cast<std::int8_t>(i), 0};
  return c;
}

// direction-letter form: one of {R,U,L,D} per backbone bond from the origin
inline std::string to_directions(const Conformation& c) {
  std::string out;
  for (std::size_t i = 0; i + 1 < c.size(); ++i) {
    int dx = c[i + 1].x - c[i].x, dy = c[i + 1].y - c[i].y;
    out.push_back(dx == 1 ? 'R' : dx == -1 ? 'L' : dy == 1 ? 'U' : 'D');
  }
  return out;
}

inline Conformation from_directions(std::string_view dirs) {
  if (dirs.size() + 1 > kMaxBeads)
    throw std::invalid_argument("directions: longer than " + std::to_string(kMaxBeads - 1));
  Conformation c;
  c.len = static_cast<std::uint8_t>(dirs.size() + 1);
  int x = 0, y = 0;
  for (std::size_t i = 0; i < dirs.size(); ++i) {
    switch (dirs[i]) {
      case 'R': ++x; break;
      case 'L': --x; break;
      case 'U': ++y; break;
      case 'D': --y; break;
      default: throw std::invalid_argument("directions: bad letter");
    }
    c[i + 1] = {static_cast<std::int8_t>(x), static_cast<std::int8_t>(y)};
  }
  require_valid(c);
  return c;
}

// -#(non-bonded H-H lattice contacts); validates its inputs, so it is the
// reference path -- samplers use the pair-list fast path in HPLattice
inline int hp_energy(const HPSequence& seq, const Conformation& conf) {
  if (seq.size() != conf.size())
    throw std::invalid_argument("hp_energy: sequence and conformation lengths differ");
  require_valid(conf);
  int contacts = 0;
  for (std::size_t i = 0; i + 2 < conf.size(); ++i) {
    if (!seq.is_h(i)) continue;
    for (std::size_t j = i + 2; j < conf.size(); ++j)
      if (seq.is_h(j) && l1_dist(conf[i], conf[j]) == 1) ++contacts;
  }
  return -contacts;
}

// smallest axis-aligned rectangle containing the walk, in lattice sites
inline int boxsize(const Conformation& c) {
  require_valid(c);
  int minx = c[0].x, maxx = c[0].x, miny = c[0].y, maxy = c[0].y;
  for (std::size_t i = 1; i < c.size(); ++i) {
    minx = std::min(minx, int(c[i].x));
    maxx = std::max(maxx, int(c[i].x));
    miny = std::min(miny, int(c[i].y));
    maxy = std::max(maxy, int(c[i].y));
  }
  return (maxx - minx + 1) * (maxy - miny + 1);
}

// ---- local move kernel -----------------------------------------------------
//
// Three move families: end-bead pivot (an end bead swings to one of the three
// other cells adjacent to its anchor), corner flip (an interior bead on a bend
// jumps to the opposite corner of its square), and crankshaft (the two middle
// beads of a U-turn reflect across the U's axis).  Flip and crankshaft are
// involutions at their site, and pivots always have two eligible sites, so
// detailed balance needs only the eligible-site count ratio.

enum class MoveType { kEndPivot = 0, kCornerFlip = 1, kCrankshaft = 2 };

struct MoveResult {
  Conformation conf;
  double log_ratio = 0.0;  // log q(y->x) - log q(x->y)
  bool blocked = false;
};

namespace hpdetail {

inline bool occupied(const Conformation& c, LatticePoint p, std::size_t skip) {
  for (std::size_t i = 0; i < c.size(); ++i)
    if (i != skip && c[i] == p) return true;
  return false;
}

inline constexpr std::array<LatticePoint, 4> kSteps = {{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}};

inline LatticePoint shifted(LatticePoint p, LatticePoint d) {
  return {static_cast<std::int8_t>(p.x + d.x), static_cast<std::int8_t>(p.y + d.y)};
}

// the three cells adjacent to the anchor other than the end bead's own cell
inline std::array<LatticePoint, 3> pivot_cells(const Conformation& c, std::size_t end_site) {
  std::size_t b = end_site == 0 ? 0 : c.size() - 1;
  std::size_t a = end_site == 0 ? 1 : c.size() - 2;
  std::array<LatticePoint, 3> cells{};
  std::size_t n = 0;
  for (const auto& d : kSteps) {
    LatticePoint p = shifted(c[a], d);
    if (p == c[b]) continue;
    cells[n++] = p;
  }
  return cells;
}

inline MoveResult apply_pivot(const Conformation& c, std::size_t end_site, std::size_t landing) {
  std::size_t b = end_site == 0 ? 0 : c.size() - 1;
  LatticePoint p = pivot_cells(c, end_site)[landing];
  if (occupied(c, p, b)) return {c, 0.0, true};
  Conformation out = c;
  out[b] = p;
  return {canonicalize(out), 0.0, false};
}

inline bool corner_site(const Conformation& c, std::size_t i) {
  int dx = std::abs(int(c[i + 1].x) - int(c[i - 1].x));
  int dy = std::abs(int(c[i + 1].y) - int(c[i - 1].y));
  return dx == 1 && dy == 1;
}

inline std::size_t corner_sites(const Conformation& c, std::array<std::uint8_t, kMaxBeads>* out) {
  std::size_t n = 0;
  for (std::size_t i = 1; i + 1 < c.size(); ++i)
    if (corner_site(c, i)) {
      if (out) (*out)[n] = static_cast<std::uint8_t>(i);
      ++n;
    }
  return n;
}

inline MoveResult apply_flip(const Conformation& c, std::size_t i) {
  LatticePoint t = {static_cast<std::int8_t>(c[i - 1].x + c[i + 1].x - c[i].x),
                    static_cast<std::int8_t>(c[i - 1].y + c[i + 1].y - c[i].y)};
  if (occupied(c, t, i)) return {c, 0.0, true};
  Conformation out = c;
  out[i] = t;
  return {canonicalize(out), 0.0, false};
}

inline bool crank_site(const Conformation& c, std::size_t i) {
  return l1_dist(c[i], c[i + 3]) == 1;
}

inline std::size_t crank_sites(const Conformation& c, std::array<std::uint8_t, kMaxBeads>* out) {
  std::size_t n = 0;
  for (std::size_t i = 0; i + 3 < c.size(); ++i)
    if (crank_site(c, i)) {
      if (out) (*out)[n] = static_cast<std::uint8_t>(i);
      ++n;
    }
  return n;
}

inline MoveResult apply_crank(const Conformation& c, std::size_t i) {
  // reflect the two middle beads across the line through beads i and i+3
  LatticePoint t1 = {static_cast<std::int8_t>(2 * c[i].x - c[i + 1].x),
                     static_cast<std::int8_t>(2 * c[i].y - c[i + 1].y)};
  LatticePoint t2 = {static_cast<std::int8_t>(2 * c[i + 3].x - c[i + 2].x),
                     static_cast<std::int8_t>(2 * c[i + 3].y - c[i + 2].y)};
  if (occupied(c, t1, i + 1) || occupied(c, t2, i + 2)) return {c, 0.0, true};
  Conformation out = c;
  out[i + 1] = t1;
  out[i + 2] = t2;
  return {canonicalize(out), 0.0, false};
}

}  // namespace hpdetail

inline MoveResult propose_move(const Conformation& c, Rng& rng) {
  MoveType type = static_cast<MoveType>(rng.uniform_below(3));
  if (type == MoveType::kEndPivot) {
    if (c.size() < 2) return {c, 0.0, true};
    std::size_t end_site = rng.uniform_below(2);
    std::size_t landing = rng.uniform_below(3);
    return hpdetail::apply_pivot(c, end_site, landing);  // two end sites either way
  }
  std::array<std::uint8_t, kMaxBeads> sites{};
  std::size_t m = type == MoveType::kCornerFlip ? hpdetail::corner_sites(c, &sites)
                                                : hpdetail::crank_sites(c, &sites);
  if (m == 0) return {c, 0.0, true};
  std::size_t i = sites[rng.uniform_below(m)];
  MoveResult r = type == MoveType::kCornerFlip ? hpdetail::apply_flip(c, i)
                                               : hpdetail::apply_crank(c, i);
  if (r.blocked) return r;
  std::size_t m2 = type == MoveType::kCornerFlip ? hpdetail::corner_sites(r.conf, nullptr)
                                                 : hpdetail::crank_sites(r.conf, nullptr);
  r.log_ratio = std::log(double(m)) - std::log(double(m2));
  return r;
}

// every (type, site, landing) instance with its selection probability; the
// exhaustive form of propose_move used by kernel audits
struct MoveInstance {
  MoveType type;
  std::size_t site = 0;
  std::size_t landing = 0;  // pivots only
  bool blocked = false;
  Conformation result;
  double log_ratio = 0.0;
  double prob = 0.0;  // probability this instance is drawn
};

inline std::vector<MoveInstance> enumerate_moves(const Conformation& c) {
  std::vector<MoveInstance> out;
  if (c.size() >= 2) {
    for (std::size_t e = 0; e < 2; ++e)
      for (std::size_t l = 0; l < 3; ++l) {
        MoveResult r = hpdetail::apply_pivot(c, e, l);
        out.push_back({MoveType::kEndPivot, e, l, r.blocked, r.conf, 0.0, 1.0 / 18.0});
      }
  }
  std::array<std::uint8_t, kMaxBeads> sites{};
  std::size_t m = hpdetail::corner_sites(c, &sites);
  for (std::size_t s = 0; s < m; ++s) {
    MoveResult r = hpdetail::apply_flip(c, sites[s]);
    double lr = r.blocked ? 0.0
                          : std::log(double(m)) -
                                std::log(double(hpdetail::corner_sites(r.conf, nullptr)));
    out.push_back({MoveType::kCornerFlip, sites[s], 0, r.blocked, r.conf, lr, 1.0 / (3.0 * m)});
  }
  m = hpdetail::crank_sites(c, &sites);
  for (std::size_t s = 0; s < m; ++s) {
    MoveResult r = hpdetail::apply_crank(c, sites[s]);
    double lr = r.blocked ? 0.0
                          : std::log(double(m)) -
                                std::log(double(hpdetail::crank_sites(r.conf, nullptr)));
    out.push_back({MoveType::kCrankshaft, sites[s], 0, r.blocked, r.conf, lr, 1.0 / (3.0 * m)});
  }
  return out;
}

// ---- exhaustive enumeration ------------------------------------------------

struct SpectrumLevel {
  int energy = 0;
  std::uint64_t count = 0;
  double normalized = 0.0;
  double mean_boxsize = 0.0;
};

struct ConformationSpectrum {
  std::vector<SpectrumLevel> levels;  // ascending energy, ground state first
  std::uint64_t total = 0;

  double uniform_mean_boxsize() const {
    double acc = 0;
    for (const auto& l : levels) acc += l.normalized * l.mean_boxsize;
    return acc;
  }

  // exact Boltzmann average of boxsize at temperature T
  double boltzmann_boxsize(double T) const {
    if (T <= 0) throw std::invalid_argument("boltzmann_boxsize: temperature must be positive");
    double u0 = levels.front().energy;
    double num = 0, den = 0;
    for (const auto& l : levels) {
      double w = double(l.count) * std::exp(-(l.energy - u0) / T);
      num += w * l.mean_boxsize;
      den += w;
    }
    return num / den;
  }

  std::string to_csv() const {
    std::string out = "energy,count,normalized\n";
    for (const auto& l : levels) {
      out += std::to_string(l.energy);
      out.push_back(',');
      out += std::to_string(l.count);
      out.push_back(',');
      append_csv_number(out, l.normalized);
      out.push_back('\n');
    }
    return out;
  }
};

namespace hpdetail {

struct Enumerator {
  static constexpr int kW = 64, kOff = 30;
  const HPSequence* seq = nullptr;
  int k = 0;
  std::array<std::int8_t, kW * kW> grid{};
  std::array<int, kMaxBeads> px{}, py{};
  std::vector<std::uint64_t> counts;
  std::vector<double> box_sums;
  std::uint64_t total = 0;

  int at(int x, int y) const { return grid[(x + kOff) * kW + (y + kOff)]; }
  void set(int x, int y, int v) { grid[(x + kOff) * kW + (y + kOff)] = std::int8_t(v); }

  void dfs(int i, int contacts, int minx, int maxx, int miny, int maxy) {
    if (i == k) {
      ++total;
      ++counts[contacts];
      box_sums[contacts] += double((maxx - minx + 1) * (maxy - miny + 1));
      return;
    }
    bool h = seq->is_h(i);
    for (const auto& d : kSteps) {
      int x = px[i - 1] + d.x, y = py[i - 1] + d.y;
      if (at(x, y)) continue;
      int add = 0;
      if (h)
        for (const auto& e : kSteps) {
          int j = at(x + e.x, y + e.y);
          if (j && j - 1 <= i - 2 && seq->is_h(std::size_t(j - 1))) ++add;
        }
      px[i] = x;
      py[i] = y;
      set(x, y, i + 1);
      dfs(i + 1, contacts + add, std::min(minx, x), std::max(maxx, x), std::min(miny, y),
          std::max(maxy, y));
      set(x, y, 0);
    }
  }
};

}  // namespace hpdetail

// exact per-energy conformation counts over all gauge-fixed self-avoiding
// walks, with the normalized spectrum and per-level boxsize means
inline ConformationSpectrum enumerate_conformations(const HPSequence& seq) {
  if (seq.size() > 20)
    throw std::invalid_argument("enumerate_conformations: length capped at 20");
  hpdetail::Enumerator en;
  en.seq = &seq;
  en.k = int(seq.size());
  en.counts.assign(seq.size() + 1, 0);
  en.box_sums.assign(seq.size() + 1, 0.0);
  en.px[0] = 0;
  en.py[0] = 0;
  en.set(0, 0, 1);
  if (seq.size() == 1) {
    en.total = 1;
    en.counts[0] = 1;
    en.box_sums[0] = 1;
  } else {
    en.px[1] = 1;
    en.py[1] = 0;
    en.set(1, 0, 2);
    if (seq.size() == 2) {
      en.total = 1;
      en.counts[0] = 1;
      en.box_sums[0] = 2;
    } else {
      en.dfs(2, 0, 0, 1, 0, 0);
    }
  }
  ConformationSpectrum sp;
  sp.total = en.total;
  for (int c = int(seq.size()); c >= 0; --c) {
    if (!en.counts[c]) continue;
    SpectrumLevel l;
    l.energy = -c;
    l.count = en.counts[c];
    l.normalized = double(en.counts[c]) / double(en.total);
    l.mean_boxsize = en.box_sums[c] / double(en.counts[c]);
    sp.levels.push_back(l);
  }
  return sp;
}

// ---- sampler adapter ---------------------------------------------------------

struct HPLattice {
  using state_type = Conformation;

  HPSequence seq;

  explicit HPLattice(HPSequence s) : seq(std::move(s)) {
    for (std::size_t i = 0; i + 2 < seq.size(); ++i) {
      if (!seq.is_h(i)) continue;
      for (std::size_t j = i + 2; j < seq.size(); ++j)
        if (seq.is_h(j)) hh_pairs_.push_back({std::uint8_t(i), std::uint8_t(j)});
    }
  }

  static HPLattice benchmark20() { return HPLattice(HPSequence::benchmark20()); }

  double energy(const state_type& c) const {
    int contacts = 0;
    for (const auto& [i, j] : hh_pairs_)
      if (l1_dist(c[i], c[j]) == 1) ++contacts;
    return double(-contacts);
  }

  Proposal<state_type> propose(const state_type& c, double /*step*/, Rng& rng) const {
    MoveResult r = propose_move(c, rng);
    if (r.blocked) return {c, kNegInf};  // null transition, counted as a rejection
    audit(r.conf);
    return {r.conf, r.log_ratio};
  }

  state_type straight() const { return straight_chain(seq.size()); }

  void serialize_state(const state_type& c, std::string& out) const { out += to_directions(c); }
  state_type deserialize_state(const std::string& bytes) const { return from_directions(bytes); }
  std::string csv_header() const { return "conf"; }
  void append_csv_fields(const state_type& c, std::string& out) const {
    out += to_directions(c);
  }

 private:
  // every proposal in debug builds, every 10^4th in release
  void audit(const Conformation& c) const {
    assert(conformation_valid(c));
    if (++audit_tick_ % 10000 == 0 && !conformation_valid(c))
      throw std::logic_error("hp kernel produced an invalid conformation");
  }

  std::vector<std::pair<std::uint8_t, std::uint8_t>> hh_pairs_;
  mutable std::uint64_t audit_tick_ = 0;
};

// sampling design for the 20-mer: floor just under the ground energy and
// single-level bands packed at the deep end, where jumps cannot cross bands
// and every entry must come from a cold chain's local descent
inline EnergyLadder benchmark20_ladder() {
  EnergyLadder lad;
  lad.levels = {-9.5, -8.5, -7.5, -6.5, -5.5};
  lad.temps = {1.0, 1.15, 1.35, 1.7, 2.6};
  return lad;
}

struct BoxsizePoint {
  double T = 0;
  double value = 0;
};

// Boltzmann <boxsize>(T) from a finished run: discrete level histogram ->
// density of states -> microcanonical boxsize means -> canonical average
inline std::vector<BoxsizePoint> boltzmann_boxsize_curve(const EnergyRings<Conformation>& rings,
                                                         const EnergyLadder& ladder,
                                                         const std::vector<double>& temps) {
  EnergyHistogram hist = histogram_discrete(rings);
  DensityOfStates dos =
      dos_estimate(hist, ladder, 1e-10, 10000, DosNormalization::kSumToOne);
  MicrocanonicalCurve curve = microcanonical_average(
      rings, hist, [](const Conformation& c) { return double(boxsize(c)); });
  std::vector<BoxsizePoint> out;
  out.reserve(temps.size());
  for (double T : temps) out.push_back({T, boltzmann_average(dos, curve, T)});
  return out;
}

}  // namespace ee
