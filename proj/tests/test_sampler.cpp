#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <utility>
#include <vector>

#include "ee/sampler.hpp"
#include "support/models.hpp"

using namespace ee;
using eetest::Gaussian1D;
using eetest::NanModel;
using eetest::ToyRing;

namespace {

using eetest::reference_mh;

EnergyLadder toy_ladder() {
  EnergyLadder lad;
  lad.levels = {0.0, 2.5, 4.0};
  lad.temps = {1.0, 2.0, 4.0};
  return lad;
}

template <class State>
std::string fingerprint(const Gaussian1D& model, const RunOutput<State>& out) {
  std::string buf;
  for (const auto& s : out.samples) {
    put_u64(buf, s.chain);
    put_u64(buf, s.step);
    put_f64(buf, s.energy);
    put_u64(buf, s.ring);
    model.serialize_state(s.state, buf);
  }
  for (std::size_t i = 0; i < out.rings.num_chains(); ++i)
    for (std::size_t j = 0; j < out.rings.num_bands(); ++j)
      for (const auto& r : out.rings.ring(i, j)) {
        put_f64(buf, r.energy);
        model.serialize_state(r.state, buf);
      }
  for (const auto& row : out.occupancy)
    for (auto c : row) put_u64(buf, c);
  for (const auto& a : out.acceptance) {
    put_u64(buf, a.local_attempts);
    put_u64(buf, a.local_accepts);
    put_u64(buf, a.jump_attempts);
    put_u64(buf, a.jump_accepts);
  }
  for (double t : out.final_steps) put_f64(buf, t);
  put_f64(buf, out.min_energy_seen);
  return buf;
}

}  // namespace

TEST_CASE("single-stage run reproduces a plain Metropolis chain state by state") {
  Gaussian1D model;
  EnergyLadder lad;
  lad.levels = {-1.0};
  lad.temps = {1.0};

  RunConfig cfg;
  cfg.iterations = 5000;
  cfg.burn_in = 500;
  cfg.seed = 77;
  cfg.thin = 3;

  auto out = run(model, lad, cfg, std::vector<Gaussian1D::state_type>{{0.3}});
  auto ref = reference_mh(model, -1.0, cfg, {0.3}, cfg.iterations);

  REQUIRE(out.samples.size() == ref.size());
  for (std::size_t t = 0; t < ref.size(); ++t) {
    REQUIRE(out.samples[t].energy == ref[t].first);
    REQUIRE(out.samples[t].state[0] == ref[t].second[0]);
  }
}

TEST_CASE("zero jump probability degenerates the target chain to plain Metropolis") {
  Gaussian1D model;
  EnergyLadder lad = toy_ladder();

  RunConfig cfg;
  cfg.iterations = 2 * 700 + 300 + 2000;  // K(B+N) + B + 2000 recorded
  cfg.burn_in = 300;
  cfg.ring_warmup = 400;
  cfg.jump_probability = 0.0;
  cfg.seed = 1234;

  std::vector<Gaussian1D::state_type> init{{0.1}, {0.2}, {0.3}};
  auto out = run(model, lad, cfg, init);

  RunConfig ref_cfg = cfg;
  ref_cfg.iterations = cfg.iterations - 2 * 700;
  auto ref = reference_mh(model, lad.levels[0], ref_cfg, {0.1}, ref_cfg.iterations);

  std::size_t t = 0;
  for (const auto& s : out.samples) {
    if (s.chain != 0) continue;
    REQUIRE(t < ref.size());
    REQUIRE(s.energy == ref[t].first);
    REQUIRE(s.state[0] == ref[t].second[0]);
    ++t;
  }
  CHECK(t == ref.size());
}

TEST_CASE("equal configs give byte-identical output, different seeds do not") {
  Gaussian1D model;
  EnergyLadder lad = toy_ladder();
  RunConfig cfg;
  cfg.iterations = 2 * 600 + 300 + 1500;
  cfg.burn_in = 300;
  cfg.ring_warmup = 300;
  cfg.seed = 99;

  std::vector<Gaussian1D::state_type> init{{0.0}, {0.0}, {0.0}};
  auto a = run(model, lad, cfg, init);
  auto b = run(model, lad, cfg, init);
  CHECK(fingerprint(model, a) == fingerprint(model, b));

  cfg.seed = 100;
  auto c = run(model, lad, cfg, init);
  CHECK(fingerprint(model, a) != fingerprint(model, c));
}

TEST_CASE("staged schedule fixes each chain's recorded count and the top chain never jumps") {
  Gaussian1D model;
  EnergyLadder lad = toy_ladder();
  RunConfig cfg;
  cfg.iterations = 2 * 500 + 300 + 1000;
  cfg.burn_in = 300;
  cfg.ring_warmup = 200;
  cfg.seed = 5;

  std::vector<Gaussian1D::state_type> init{{0.0}, {0.0}, {0.0}};
  auto out = run(model, lad, cfg, init);

  CHECK(out.rings.total(0) == 1000);
  CHECK(out.rings.total(1) == 1500);
  CHECK(out.rings.total(2) == 2000);
  CHECK(out.acceptance[2].jump_attempts == 0);
  CHECK(out.acceptance[0].jump_attempts > 0);
  CHECK(out.acceptance[1].jump_attempts > 0);

  // occupancy mirrors ring lengths, and every record sits in its band
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& ring = out.rings.ring(i, j);
      CHECK(out.occupancy[i][j] == ring.size());
      for (const auto& rec : ring) {
        CHECK(rec.energy >= out.ladder.levels[j]);
        if (j + 1 < 3) CHECK(rec.energy < out.ladder.levels[j + 1]);
        CHECK(rec.energy == model.energy(rec.state));
      }
    }
  }
}

TEST_CASE("identity proposal is always accepted and leaves the state alone") {
  Gaussian1D model;
  EnergyLadder lad = toy_ladder();
  RunConfig cfg;
  cfg.iterations = 2 * 200 + 100 + 500;
  cfg.burn_in = 100;
  cfg.ring_warmup = 100;
  cfg.jump_probability = 0.0;
  cfg.adapt_steps = false;
  cfg.step_overrides = {0.0, 0.0, 0.0};
  cfg.seed = 11;

  std::vector<Gaussian1D::state_type> init{{0.7}, {0.7}, {0.7}};
  auto out = run(model, lad, cfg, init);
  for (const auto& a : out.acceptance) CHECK(a.local_attempts == a.local_accepts);
  for (const auto& s : out.samples) CHECK(s.state[0] == 0.7);
}

TEST_CASE("NaN energies abort with a diagnostic naming the state") {
  NanModel model;
  EnergyLadder lad;
  lad.levels = {0.0};
  lad.temps = {1.0};
  RunConfig cfg;
  cfg.iterations = 10;
  CHECK_THROWS_WITH(run(model, lad, cfg, std::vector<NanModel::state_type>{{0.25}}),
                    Catch::Matchers::ContainsSubstring("NaN"));
}

TEST_CASE("config validation") {
  Gaussian1D model;
  EnergyLadder lad = toy_ladder();
  RunConfig cfg;
  cfg.iterations = 100;  // too small: 2*(B+N)+B = 2*600+300
  cfg.burn_in = 300;
  cfg.ring_warmup = 300;
  std::vector<Gaussian1D::state_type> init{{0.0}, {0.0}, {0.0}};
  CHECK_THROWS_AS(run(model, lad, cfg, init), std::invalid_argument);

  cfg.iterations = 5000;
  cfg.jump_probability = 1.0;
  CHECK_THROWS_AS(run(model, lad, cfg, init), std::invalid_argument);

  cfg.jump_probability = 0.1;
  CHECK_THROWS_AS(run(model, lad, cfg, std::vector<Gaussian1D::state_type>{{0.0}}),
                  std::invalid_argument);
}

TEST_CASE("step adaptation happens during burn-in only and tames an oversized step") {
  Gaussian1D model;
  model.sigma = 0.05;
  EnergyLadder lad;
  lad.levels = {-1.0};
  lad.temps = {1.0};
  RunConfig cfg;
  cfg.iterations = 30000;
  cfg.burn_in = 20000;
  cfg.initial_step = 25.0;  // far too wide for sigma = 0.05
  cfg.adapt_window = 500;
  cfg.seed = 3;

  auto out = run(model, lad, cfg, std::vector<Gaussian1D::state_type>{{0.0}});
  REQUIRE_FALSE(out.adaptation.empty());
  CHECK(out.final_steps[0] < 25.0);
  for (const auto& ev : out.adaptation) {
    CHECK(ev.chain == 0);
    CHECK(ev.step <= cfg.burn_in);  // frozen once recording starts
    CHECK((ev.new_step == ev.old_step * 1.5 || ev.new_step == ev.old_step / 1.5));
  }
}

TEST_CASE("reservoir cap bounds ring memory while counts stay exact") {
  ToyRing model = ToyRing::rugged(24);
  EnergyLadder lad = toy_ladder();
  RunConfig cfg;
  cfg.iterations = 2 * 500 + 200 + 3000;
  cfg.burn_in = 200;
  cfg.ring_warmup = 300;
  cfg.seed = 21;
  cfg.ring_capacity = 64;

  std::vector<ToyRing::state_type> init{0, 0, 0};
  auto out = run(model, lad, cfg, init);
  bool some_overflow = false;
  for (std::size_t i = 0; i < 3; ++i) {
    std::uint64_t seen_total = 0;
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(out.rings.ring(i, j).size() <= 64);
      seen_total += out.occupancy[i][j];
      if (out.occupancy[i][j] > 64) some_overflow = true;
    }
    CHECK(seen_total == out.rings.total(i));
  }
  CHECK(some_overflow);
}

TEST_CASE("floor reset triggers when states dip below the configured floor") {
  Gaussian1D model;  // true minimum energy is 0
  EnergyLadder lad;
  lad.levels = {2.0, 4.0, 8.0};
  lad.temps = {1.0, 2.0, 4.0};
  RunConfig cfg;
  cfg.iterations = 2 * 1000 + 500 + 500;
  cfg.burn_in = 500;
  cfg.ring_warmup = 500;
  cfg.seed = 8;
  cfg.adjust_floor = true;
  cfg.floor_margin = 0.5;

  std::vector<Gaussian1D::state_type> init{{0.0}, {0.0}, {0.0}};
  auto out = run(model, lad, cfg, init);

  CHECK(out.floor_adjustments >= 1);
  CHECK(out.ladder.levels.front() < 2.0);
  out.ladder.validate();
  // membership invariant under the final (adjusted) ladder
  for (std::size_t i = 0; i < out.rings.num_chains(); ++i)
    for (std::size_t j = 0; j < out.rings.num_bands(); ++j)
      for (const auto& rec : out.rings.ring(i, j)) {
        CHECK(rec.energy >= out.ladder.levels[j]);
        if (j + 1 < out.ladder.levels.size()) CHECK(rec.energy < out.ladder.levels[j + 1]);
      }
  // the target chain recorded under the final ladder
  CHECK(out.rings.total(out.rings.num_chains() - out.ladder.num_chains()) >= 0);
  CHECK(out.samples.back().chain <= out.ladder.top_chain());
}
