#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include <catch2/catch_amalgamated.hpp>

#include "ee/ladder.hpp"
#include "ee/parallel_tempering.hpp"
#include "ee/problems/gaussian_mixture.hpp"
#include "ee/rng.hpp"
#include "ee/sampler.hpp"

using Catch::Matchers::WithinAbs;

namespace {

using State = ee::GaussianMixture::state_type;

ee::EnergyLadder gm_ladder() {
  ee::EnergyLadder lad;
  lad.levels = {0.2, 2.0, 6.3, 20.0, 63.2};
  lad.temps = {1.0, 2.8, 7.7, 21.6, 60.0};
  return lad;
}

State unit_square_draw(std::size_t, double, ee::Rng& rng) {
  double x = rng.uniform01();
  double y = rng.uniform01();
  return {x, y};
}

std::vector<State> chain_samples(const std::vector<ee::Sample<State>>& samples,
                                 std::size_t chain) {
  std::vector<State> out;
  for (const auto& s : samples)
    if (s.chain == chain) out.push_back(s.state);
  return out;
}

std::set<std::size_t> modes_visited(const ee::GaussianMixture& m, const std::vector<State>& xs,
                                    std::size_t tail = 0) {
  std::set<std::size_t> seen;
  std::size_t from = tail > 0 && xs.size() > tail ? xs.size() - tail : 0;
  for (std::size_t t = from; t < xs.size(); ++t) seen.insert(m.nearest_mode(xs[t]));
  return seen;
}

}  // namespace

TEST_CASE("equal-weight mixture run reaches every mode at the published rates", "[run]") {
  auto model = ee::GaussianMixture::equal_weight();
  auto lad = gm_ladder();

  ee::RunConfig cfg;
  cfg.burn_in = 5000;
  cfg.ring_warmup = 5000;
  cfg.iterations = 4 * 10000 + 5000 + 50000;
  cfg.jump_probability = 0.1;
  cfg.seed = 20260815;
  auto out = ee::run(model, lad, cfg, unit_square_draw);

  auto x0 = chain_samples(out.samples, 0);
  REQUIRE(x0.size() == 50000);

  // every component is visited, and still visited within the final stretch
  CHECK(modes_visited(model, x0).size() == 20);
  CHECK(modes_visited(model, x0, 2000).size() == 20);

  // local moves sit near the tuned band; jumps accept at the published rate
  const auto& a0 = out.acceptance[0];
  double local_rate = double(a0.local_accepts) / double(a0.local_attempts);
  CHECK(local_rate > 0.15);
  CHECK(local_rate < 0.45);

  std::uint64_t jat = 0, jac = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    CHECK(out.acceptance[i].jump_attempts > 0);
    jat += out.acceptance[i].jump_attempts;
    jac += out.acceptance[i].jump_accepts;
  }
  CHECK(out.acceptance[4].jump_attempts == 0);
  double jump_rate = double(jac) / double(jat);
  CHECK(jump_rate > 0.6);
  CHECK(jump_rate < 0.95);

  // occupancy shifts monotonically toward hot rings as the chain index grows
  double t0 = double(out.rings.total(0));
  CHECK(double(out.occupancy[0][0]) / t0 > 0.7);
  double t4 = double(out.rings.total(4));
  CHECK(double(out.occupancy[4][3] + out.occupancy[4][4]) / t4 > 0.6);
  std::size_t prev_peak = 0;
  for (std::size_t i = 0; i < 5; ++i) {
    std::size_t peak = std::max_element(out.occupancy[i].begin(), out.occupancy[i].end()) -
                       out.occupancy[i].begin();
    CHECK(peak >= prev_peak);
    prev_peak = peak;
  }

  // single-seed sanity bands around the analytic moments
  double ex1 = 0, ex1sq = 0;
  for (const auto& s : x0) {
    ex1 += s[0];
    ex1sq += s[0] * s[0];
  }
  ex1 /= double(x0.size());
  ex1sq /= double(x0.size());
  CHECK_THAT(ex1, WithinAbs(model.mean_of(0), 0.3));
  CHECK_THAT(ex1sq, WithinAbs(model.second_moment_of(0), 2.5));

  CHECK(out.min_energy_seen >= 0.226354343 - 1e-9);
  CHECK(out.min_energy_seen < 1.0);
}

TEST_CASE("tempering baseline runs in the published exchange regime", "[run]") {
  auto model = ee::GaussianMixture::equal_weight();
  auto lad = gm_ladder();

  ee::PTConfig cfg;
  cfg.exchange_probability = 0.1;
  cfg.swaps_per_event = 4;
  cfg.burn_in = 5000;
  cfg.iterations = 55000;
  cfg.seed = 4711;

  ee::Rng init(99);
  std::vector<State> start;
  for (int i = 0; i < 5; ++i) start.push_back({init.uniform01(), init.uniform01()});
  auto out = ee::pt_run(model, lad, cfg, start);

  auto x0 = chain_samples(out.samples, 0);
  REQUIRE(x0.size() == 50000);

  std::uint64_t xat = 0, xac = 0;
  for (std::size_t i = 0; i < 4; ++i) {
    xat += out.acceptance[i].jump_attempts;
    xac += out.acceptance[i].jump_accepts;
  }
  REQUIRE(xat > 0);
  double exchange_rate = double(xac) / double(xat);
  CHECK(exchange_rate > 0.49);
  CHECK(exchange_rate < 0.69);

  const auto& a0 = out.acceptance[0];
  double local_rate = double(a0.local_accepts) / double(a0.local_attempts);
  CHECK(local_rate > 0.15);
  CHECK(local_rate < 0.45);

  // the hot ladder does move the cold chain around, even if it misses modes
  CHECK(modes_visited(model, x0).size() >= 10);
}

TEST_CASE("unequal-weight run lowers the floor dynamically", "[run]") {
  auto model = ee::GaussianMixture::unequal_weight();
  auto lad = ee::build_ladder(3.0, 63.2, 4);
  REQUIRE(lad.temps.front() == 1.0);

  ee::RunConfig cfg;
  cfg.burn_in = 2000;
  cfg.ring_warmup = 2000;
  cfg.iterations = 4 * 4000 + 2000 + 20000;
  cfg.jump_probability = 0.1;
  cfg.seed = 77;
  cfg.adjust_floor = true;
  cfg.floor_margin = 2.0;
  auto out = ee::run(model, lad, cfg, unit_square_draw);

  // the tightest components dip well below the H_0 = 3 guess
  CHECK(out.min_energy_seen < 0.0);
  CHECK(out.floor_adjustments >= 1);
  CHECK(out.ladder.levels.front() < 3.0);

  const auto& fl = out.ladder;
  REQUIRE(fl.temps.front() == 1.0);
  for (std::size_t j = 1; j < fl.levels.size(); ++j) {
    CHECK(fl.levels[j] > fl.levels[j - 1]);
    CHECK(fl.temps[j] > fl.temps[j - 1]);
  }

  // all stored records were regrouped consistently with the final boundaries
  for (std::size_t i = 0; i < out.rings.num_chains(); ++i)
    for (std::size_t j = 0; j < out.rings.num_bands(); ++j)
      for (const auto& r : out.rings.ring(i, j)) {
        CHECK(fl.ring_index(r.energy) == j);
        CHECK(r.energy == model.energy(r.state));
      }

  // the run still finds the dominant tight modes near (5,5)
  auto x0 = chain_samples(out.samples, 0);
  REQUIRE(!x0.empty());
  auto seen = modes_visited(model, x0);
  CHECK(seen.count(7) == 1);
  CHECK(seen.size() >= 15);
}
