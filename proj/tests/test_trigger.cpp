#include <doctest.h>

#include <chrono>

#include "checkerboard/trigger.hpp"
#include "oracles.hpp"

using namespace checkerboard;

namespace {
TriggerSpec spec(TriggerKind kind, std::size_t b = 1, int phase = 1,
                 std::optional<std::uint64_t> seed = std::nullopt) {
  return {kind, b, phase, seed};
}
}  // namespace

TEST_CASE("gen_template shapes") {
  SUBCASE("b=1 checkerboard 2x2") {
    auto g = gen_template(spec(TriggerKind::kCheckerboard), 2, 2);
    CHECK(g.values == std::vector<double>{1, -1, -1, 1});
  }
  SUBCASE("b=2 checkerboard 4x4 has constant 2x2 blocks") {
    auto g = gen_template(spec(TriggerKind::kCheckerboard, 2), 4, 4);
    CHECK(g.values == std::vector<double>{1, 1, -1, -1,  //
                                          1, 1, -1, -1,  //
                                          -1, -1, 1, 1,  //
                                          -1, -1, 1, 1});
  }
  SUBCASE("h_stripes alternate by row") {
    auto g = gen_template(spec(TriggerKind::kHStripes), 3, 3);
    CHECK(g.values == std::vector<double>{1, 1, 1, -1, -1, -1, 1, 1, 1});
  }
  SUBCASE("v_stripes alternate by column") {
    auto g = gen_template(spec(TriggerKind::kVStripes), 2, 3);
    CHECK(g.values == std::vector<double>{1, -1, 1, 1, -1, 1});
  }
  SUBCASE("negative phase flips the sign") {
    auto g = gen_template(spec(TriggerKind::kCheckerboard, 1, -1), 2, 2);
    CHECK(g.values == std::vector<double>{-1, 1, 1, -1});
  }
  SUBCASE("zero dimension") {
    CHECK_THROWS_AS(gen_template(spec(TriggerKind::kCheckerboard), 0, 3), InvalidInput);
  }
}

TEST_CASE("TriggerSpec validation") {
  CHECK_THROWS_AS(spec(TriggerKind::kRandomNoise).validate(), InvalidInput);
  CHECK_THROWS_AS(spec(TriggerKind::kCheckerboard, 1, 1, 5).validate(), InvalidInput);
  CHECK_THROWS_AS(spec(TriggerKind::kCheckerboard, 0).validate(), InvalidInput);
  CHECK_THROWS_AS(spec(TriggerKind::kCheckerboard, 1, 2).validate(), InvalidInput);
  CHECK_NOTHROW(spec(TriggerKind::kSaltPepper, 1, 1, 5).validate());
  CHECK(parse_trigger_kind("salt_pepper") == TriggerKind::kSaltPepper);
  CHECK_THROWS_AS(parse_trigger_kind("plaid"), InvalidInput);
}

TEST_CASE("noise templates") {
  const auto rn = gen_template(spec(TriggerKind::kRandomNoise, 1, 1, 42), 16, 16);
  for (double v : rn.values) CHECK((v == 1.0 || v == -1.0));
  CHECK(rn == gen_template(spec(TriggerKind::kRandomNoise, 1, 1, 42), 16, 16));
  CHECK(rn != gen_template(spec(TriggerKind::kRandomNoise, 1, 1, 43), 16, 16));

  const auto sp = gen_template(spec(TriggerKind::kSaltPepper, 1, 1, 9), 100, 100);
  std::size_t active = 0;
  for (double v : sp.values) {
    CHECK((v == 1.0 || v == -1.0 || v == 0.0));
    if (v != 0.0) ++active;
  }
  // 10% of 10^4 sites; binomial sd is 30.
  CHECK(active > 850);
  CHECK(active < 1150);
  CHECK(sp == gen_template(spec(TriggerKind::kSaltPepper, 1, 1, 9), 100, 100));
}

TEST_CASE("replicate") {
  const auto g = checkerboard_template(2, 2);
  const auto p3 = replicate(g, 3);
  CHECK(p3.values.size() == 12);
  for (std::size_t c = 0; c < 3; ++c) CHECK(p3.channel(c) == g);
  CHECK(replicate(g, 1).values == g.values);
  CHECK_THROWS_AS(replicate(g, 4), InvalidInput);
}

TEST_CASE("discrete_objective against the edge-list oracle") {
  CHECK(discrete_objective({3, 3, std::vector<double>(9, 0.4)}) == 0.0);

  const auto cb = checkerboard_template(3, 3);
  CHECK(oracle::grid_edge_energy(cb.values, 3, 3) == 48.0);
  CHECK(discrete_objective(cb) == 48.0);

  const auto hs = gen_template(spec(TriggerKind::kHStripes), 3, 3);
  CHECK(oracle::grid_edge_energy(hs.values, 3, 3) == 24.0);
  CHECK(discrete_objective(hs) == 24.0);

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t h = 1 + rng() % 7;
    const std::size_t w = 1 + rng() % 7;
    LuminanceTemplate g{h, w, std::vector<double>(h * w)};
    for (double& v : g.values) v = u(rng);
    CHECK(discrete_objective(g) == doctest::Approx(oracle::grid_edge_energy(g.values, h, w)));
    CHECK(discrete_objective(g) == discrete_objective(g.negated()));
  }
}

TEST_CASE("brute_force_optimum small grids") {
  const auto cb22 = checkerboard_template(2, 2);
  auto r = brute_force_optimum(2, 2);
  CHECK(r.max_value == 16.0);
  REQUIRE(r.maximizers.size() == 2);
  CHECK(std::find(r.maximizers.begin(), r.maximizers.end(), cb22) != r.maximizers.end());
  CHECK(std::find(r.maximizers.begin(), r.maximizers.end(), cb22.negated()) !=
        r.maximizers.end());

  r = brute_force_optimum(1, 2);
  CHECK(r.max_value == 4.0);
  CHECK(r.maximizers ==
        std::vector<LuminanceTemplate>{{1, 2, {-1, 1}}, {1, 2, {1, -1}}});

  r = brute_force_optimum(3, 3);
  CHECK(r.max_value == 48.0);
  CHECK(r.maximizers.size() == 2);

  CHECK_THROWS_AS(brute_force_optimum(5, 5), ResourceLimit);
}

TEST_CASE("brute_force_optimum closed form for H, W in 1..4") {
  for (std::size_t h = 1; h <= 4; ++h) {
    for (std::size_t w = 1; w <= 4; ++w) {
      if (h * w < 2) continue;
      CAPTURE(h);
      CAPTURE(w);
      const auto r = brute_force_optimum(h, w);
      CHECK(r.max_value == 4.0 * static_cast<double>(h * (w - 1) + w * (h - 1)));
      const auto g = checkerboard_template(h, w);
      std::vector<LuminanceTemplate> want = {g, g.negated()};
      std::sort(want.begin(), want.end());
      CHECK(r.maximizers == want);
      // Every returned maximizer re-evaluates to the reported value.
      for (const auto& m : r.maximizers) CHECK(discrete_objective(m) == r.max_value);
    }
  }
}

TEST_CASE("checkerboard beats the ablation patterns") {
  for (std::size_t h = 2; h <= 8; ++h) {
    for (std::size_t w = 2; w <= 8; ++w) {
      const auto cb = checkerboard_template(h, w);
      const double best = discrete_objective(cb);
      CHECK(best > discrete_objective(gen_template(spec(TriggerKind::kHStripes), h, w)));
      CHECK(best > discrete_objective(gen_template(spec(TriggerKind::kVStripes), h, w)));
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto rn = gen_template(spec(TriggerKind::kRandomNoise, 1, 1, seed), h, w);
        // A Rademacher draw can coincide with +-checkerboard on tiny grids;
        // those draws tie, every other draw is strictly worse.
        if (rn == cb || rn == cb.negated()) {
          CHECK(best == discrete_objective(rn));
        } else {
          CHECK(best > discrete_objective(rn));
        }
      }
    }
  }
}
