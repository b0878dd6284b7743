#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <numeric>
#include <vector>

#include "ee/estimation.hpp"
#include "ee/sampler.hpp"
#include "support/models.hpp"

using namespace ee;
using eetest::ToyRing;

namespace {

using Point = std::array<double, 1>;

EnergyLadder ring_ladder() {
  EnergyLadder lad;
  lad.levels = {0.0, 2.5, 4.0};
  lad.temps = {1.0, 2.0, 4.0};
  return lad;
}

DensityOfStates linear_dos(double lo, double hi, std::size_t bins) {
  DensityOfStates dos;
  double w = (hi - lo) / static_cast<double>(bins);
  for (std::size_t b = 0; b < bins; ++b) {
    double u = lo + (static_cast<double>(b) + 0.5) * w;
    dos.u.push_back(u);
    dos.log_omega.push_back(std::log(u));
    dos.omega.push_back(u);
    dos.widths.push_back(w);
    dos.pooled.push_back(1.0);
  }
  return dos;
}

}  // namespace

TEST_CASE("microcanonical pooling is the slice-size weighted mean") {
  EnergyRings<Point> rings(2, 2);
  for (int t = 0; t < 10; ++t) rings.append(0, 0, {1.0}, 0.0, nullptr);
  for (int t = 0; t < 30; ++t) rings.append(1, 0, {2.0}, 0.0, nullptr);
  auto h = histogram_discrete(rings);
  auto curve = microcanonical_average(rings, h, [](const Point& x) { return x[0]; });
  REQUIRE(curve.num_bins() == 1);
  CHECK_FALSE(curve.absent[0]);
  CHECK(curve.value[0] == Catch::Approx(1.75));
  CHECK(curve.count[0] == 40.0);

  auto cconst = microcanonical_average(rings, h, [](const Point&) { return 3.25; });
  CHECK(cconst.value[0] == 3.25);
}

TEST_CASE("degenerate support returns the slice value at every temperature") {
  DensityOfStates dos;
  dos.u = {5.0};
  dos.log_omega = {0.0};
  dos.omega = {1.0};
  dos.widths = {1.0};
  dos.pooled = {42.0};
  MicrocanonicalCurve curve;
  curve.u = {5.0};
  curve.value = {7.5};
  curve.count = {42.0};
  curve.absent = {false};
  for (double T : {0.5, 1.0, 10.0}) CHECK(boltzmann_average(dos, curve, T) == 7.5);
  auto pts = thermo_curves(dos, {0.5, 1.0, 10.0});
  for (const auto& p : pts) {
    CHECK(p.U == Catch::Approx(5.0));
    CHECK(p.C == Catch::Approx(0.0).margin(1e-12));
  }
}

TEST_CASE("linear density reproduces the exponential-family closed forms") {
  auto dos = linear_dos(0.0, 60.0, 1200);
  MicrocanonicalCurve curve;
  curve.u = dos.u;
  curve.count.assign(dos.u.size(), 1.0);
  curve.absent.assign(dos.u.size(), false);
  for (double u : dos.u) curve.value.push_back(0.5 * u);

  auto pts = thermo_curves(dos, {1.0, 2.5, 5.0}, 1.0);
  for (const auto& p : pts) {
    INFO("T=" << p.T);
    CHECK(boltzmann_average(dos, curve, p.T) == Catch::Approx(p.T).epsilon(0.01));
    CHECK(p.U == Catch::Approx(2.0 * p.T).epsilon(0.01));
    CHECK(p.C == Catch::Approx(2.0).epsilon(0.01));
    CHECK(p.z_ratio == Catch::Approx(p.T * p.T).epsilon(0.01));
  }
  CHECK(pts[0].z_ratio == 1.0);
  CHECK(pts[0].F == 0.0);
}

TEST_CASE("temperature errors are explicit") {
  auto dos = linear_dos(0.0, 10.0, 10);
  MicrocanonicalCurve curve;
  curve.u = dos.u;
  curve.value.assign(10, 1.0);
  curve.count.assign(10, 1.0);
  curve.absent.assign(10, true);  // nothing shared
  CHECK_THROWS_AS(boltzmann_average(dos, curve, -1.0), std::invalid_argument);
  CHECK_THROWS_WITH(boltzmann_average(dos, curve, 2.0),
                    Catch::Matchers::ContainsSubstring("2.0"));
}

TEST_CASE("importance weights depend on energy alone") {
  EnergyLadder lad;
  lad.levels = {0.0, 2.0};
  lad.temps = {1.0, 2.8};
  CHECK(importance_weight(lad, 0, 3.0) == 1.0);
  CHECK(importance_weight(lad, 0, 0.5) == 1.0);
  CHECK(importance_weight(lad, 1, 3.0) == Catch::Approx(std::exp(3.0 / 2.8 - 3.0)).epsilon(1e-12));
  CHECK(importance_weight(lad, 1, 3.0) == Catch::Approx(0.1454).margin(5e-5));
  CHECK(importance_weight(lad, 1, 7.25) == importance_weight(lad, 1, 7.25));
}

TEST_CASE("effective sample size formulas") {
  CHECK(ess({2.0, 2.0, 2.0, 2.0}) == 4.0);
  CHECK(ess({1.0, 1.0, 4.0}) == Catch::Approx(2.0));
  Rng rng(5);
  std::vector<double> w, lw;
  for (int t = 0; t < 100; ++t) {
    double x = rng.uniform01() * 3.0 + 0.1;
    w.push_back(x);
    lw.push_back(std::log(x) + 1700.0);  // same shape, astronomically scaled
  }
  CHECK(ess(w) <= 100.0);
  CHECK(ess_from_log_weights(lw) == Catch::Approx(ess(w)).epsilon(1e-9));
}

TEST_CASE("single-chain combination collapses to the plain sample mean") {
  ToyRing model = ToyRing::rugged(16);
  EnergyLadder lad;
  lad.levels = {0.0};
  lad.temps = {1.0};
  RunConfig cfg;
  cfg.iterations = 4000;
  cfg.burn_in = 500;
  cfg.seed = 31;
  auto out = run(model, lad, cfg, std::vector<ToyRing::state_type>{3});

  auto g = [&](const ToyRing::state_type& s) { return std::cos(2.0 * M_PI * s / 16.0); };
  auto est = combined_expectation(out.rings, out.ladder, g, "g", 50);

  double acc = 0, n = 0;
  for (const auto& rec : out.rings.ring(0, 0)) {
    acc += g(rec.state);
    n += 1.0;
  }
  CHECK(est.value == Catch::Approx(acc / n).epsilon(1e-12));
  CHECK(est.p_hat == std::vector<double>{1.0});
  CHECK(est.ess_cell[0][0] == Catch::Approx(n).epsilon(1e-12));
}

TEST_CASE("combined estimate tracks the exactly enumerable expectation") {
  ToyRing model = ToyRing::rugged(24);
  EnergyLadder lad = ring_ladder();
  auto g = [](const ToyRing::state_type& s) { return std::cos(2.0 * M_PI * s / 24.0); };

  // exact value under the untempered law
  double z = 0, truth = 0;
  for (std::uint32_t s = 0; s < 24; ++s) {
    double w = std::exp(-model.table[s]);
    z += w;
    truth += w * g(s);
  }
  truth /= z;

  std::vector<double> ests;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    RunConfig cfg;
    cfg.iterations = 2 * 2000 + 500 + 12000;
    cfg.burn_in = 500;
    cfg.ring_warmup = 1500;
    cfg.jump_probability = 0.15;
    cfg.seed = seed;
    cfg.adapt_steps = false;
    auto out = run(model, lad, cfg, std::vector<ToyRing::state_type>{0, 8, 16});
    auto est = combined_expectation(out.rings, out.ladder, g, "g", 50);

    double psum = std::accumulate(est.p_hat.begin(), est.p_hat.end(), 0.0);
    CHECK(psum == Catch::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        CHECK(est.ess_cell[i][j] <= out.rings.ring(i, j).size() * (1.0 + 1e-12));
        if (est.included[i][j]) CHECK(out.rings.ring(i, j).size() >= 50);
      }
    ests.push_back(est.value);
  }
  double mean = std::accumulate(ests.begin(), ests.end(), 0.0) / ests.size();
  double var = 0;
  for (double e : ests) var += (e - mean) * (e - mean);
  var /= (ests.size() - 1);
  double se = std::sqrt(var / ests.size());
  INFO("truth " << truth << " mean " << mean << " se " << se);
  CHECK(std::abs(mean - truth) <= 3.0 * se);
}

TEST_CASE("rings empty in every chain are dropped with renormalized mass") {
  EnergyRings<Point> rings(2, 2);
  for (int t = 0; t < 60; ++t) rings.append(0, 0, {1.0}, 0.5, nullptr);
  for (int t = 0; t < 60; ++t) rings.append(1, 0, {2.0}, 0.5, nullptr);
  EnergyLadder lad;
  lad.levels = {0.0, 2.5};
  lad.temps = {1.0, 2.0};
  auto est = combined_expectation(rings, lad, [](const Point& x) { return x[0]; }, "x", 50);
  REQUIRE(est.empty_rings == std::vector<std::size_t>{1});
  CHECK(est.p_hat[0] == 1.0);
  CHECK(est.p_hat[1] == 0.0);
  CHECK(std::isnan(est.g_ring[1]));
}

TEST_CASE("estimation tables serialize to csv") {
  auto dos = linear_dos(0.0, 2.0, 2);
  MicrocanonicalCurve curve;
  curve.u = dos.u;
  curve.value = {1.0, 2.0};
  curve.count = {3.0, 0.0};
  curve.absent = {false, true};
  CHECK(curve_to_csv(curve) ==
        "u,value,count,flag\n0.5,1,3,ok\n1.5,0,0,absent\n");
  CHECK(dos_to_csv(dos).substr(0, 21) == "u,value,count,flag\n0.");
  auto pts = thermo_curves(dos, {1.0});
  auto csv = thermo_to_csv(pts);
  CHECK(csv.substr(0, 15) == "T,Z_ratio,U,C,F");
}
