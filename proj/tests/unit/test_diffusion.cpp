#include <doctest.h>

#include <cmath>

#include "gbim/diffusion.hpp"
#include "gbim/error.hpp"
#include "helpers.hpp"

using namespace gbim;
using gbim::test::tiny_dataset;

namespace {

DiffusionConfig make_config(DiffusionModel model, double beta, std::size_t runs = 100,
                            std::uint64_t seed = 1) {
  DiffusionConfig c;
  c.model = model;
  c.beta = beta;
  c.simulations = runs;
  c.seed = seed;
  return c;
}

constexpr auto IC = DiffusionModel::independent_cascade;
constexpr auto LT = DiffusionModel::linear_threshold;

}  // namespace

TEST_CASE("seed sets are canonical") {
  const SeedSet a({{2, 1}, {0, 0}});
  const SeedSet b({{0, 0}, {2, 1}});
  CHECK(a == b);
  CHECK(SeedSetHash{}(a) == SeedSetHash{}(b));
  CHECK(a.pairs().front() == SeedPair{0, 0});
  CHECK(a.uses_user(2));
  CHECK_FALSE(a.uses_item(2));
  CHECK_THROWS_AS(SeedSet({{0, 0}, {0, 1}}), ValidationError);
  CHECK_THROWS_AS(SeedSet({{0, 1}, {1, 1}}), ValidationError);
  CHECK_THROWS_AS(SeedSet({{0, 0}, {1, 1}}, 1), ValidationError);
  CHECK_THROWS_AS(a.with({2, 3}), ValidationError);
  CHECK(a.with({5, 5}).size() == 3);
  CHECK(SeedSet::parse(a.to_string()) == a);
  CHECK_THROWS_AS(a.check_bounds(2, 5), ValidationError);
}

TEST_CASE("diffusion model names") {
  CHECK(parse_diffusion_model("lt") == LT);
  CHECK(parse_diffusion_model("ic") == IC);
  CHECK(to_string(LT) == "lt");
  CHECK_THROWS_AS(parse_diffusion_model("sir"), ValidationError);
}

TEST_CASE("config validation") {
  auto c = make_config(IC, 1.5);
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = make_config(IC, 0.3, 0);
  CHECK_THROWS_AS(c.validate(), ValidationError);
}

TEST_CASE("empty seed set activates nobody") {
  const auto d = tiny_dataset();
  CHECK(estimate_influence(SeedSet{}, d, make_config(IC, 0.5)) == 0.0);
  CHECK(exact_influence(SeedSet{}, d, make_config(LT, 0.5)) == 0.0);
}

TEST_CASE("seeds are always counted") {
  // No edges, beta = 0: influence is exactly the number of seed pairs.
  Dataset d{SocialGraph(3, {}), ItemGraph(3, {}), PreferenceMatrix(3, 3, 1.0)};
  const SeedSet s({{0, 0}, {1, 2}});
  CHECK(estimate_influence(s, d, make_config(IC, 0.0)) == 2.0);
  CHECK(exact_influence(s, d, make_config(LT, 0.0)) == 2.0);
}

TEST_CASE("deterministic chains") {
  // Weight 1 and preference 1: IC edges always fire, LT thresholds are 0.
  Dataset d{SocialGraph(4, {{0, 1, 1.0}, {1, 2, 1.0}, {2, 3, 1.0}}), ItemGraph(2, {{0, 1}}),
            PreferenceMatrix(4, 2, 1.0)};
  const SeedSet s({{0, 0}});
  CHECK(estimate_influence(s, d, make_config(IC, 0.0)) == 4.0);
  CHECK(estimate_influence(s, d, make_config(LT, 0.0)) == 4.0);
  // beta = 1 with preference 1 copies every activation onto item 1.
  CHECK(estimate_influence(s, d, make_config(IC, 1.0)) == 8.0);
  CHECK(exact_influence(s, d, make_config(LT, 1.0)) == 8.0);
  CHECK(count_random_events(d, make_config(IC, 1.0)) == 0);
}

TEST_CASE("simulation outcome per layer") {
  Dataset d{SocialGraph(3, {{0, 1, 1.0}, {0, 2, 1.0}}), ItemGraph(2, {}), PreferenceMatrix(3, 2, 1.0)};
  Rng rng(5);
  const auto out = simulate_once(SeedSet({{0, 1}}), d, make_config(IC, 0.0), rng);
  CHECK(out.total == 3);
  CHECK(out.sigma == std::vector<std::size_t>{0, 3});
}

TEST_CASE("LT uses synchronous rounds") {
  // User 2 needs pressure from both 0 and 1 (0.5 each, threshold 1 - 0.2 = 0.8).
  Dataset d{SocialGraph(3, {{0, 2, 0.5}, {1, 2, 0.5}}), ItemGraph(1, {}),
            PreferenceMatrix(3, 1, {1.0, 1.0, 0.2})};
  CHECK(estimate_influence(SeedSet({{0, 0}}), d, make_config(LT, 0.0)) == 1.0);
  // 0 activates 1 and 3 in round 1; their pressures reach 2 together in round 2.
  Dataset diamond{SocialGraph(4, {{0, 1, 1.0}, {0, 3, 1.0}, {1, 2, 0.5}, {3, 2, 0.5}}),
                  ItemGraph(1, {}), PreferenceMatrix(4, 1, {1.0, 1.0, 0.2, 1.0})};
  CHECK(estimate_influence(SeedSet({{0, 0}}), diamond, make_config(LT, 0.0)) == 4.0);
  CHECK(exact_influence(SeedSet({{0, 0}}), diamond, make_config(LT, 0.0)) == 4.0);
}

// Values from tests/oracles/multiplex_oracle.py (full enumeration, stepwise replay).
TEST_CASE("exact oracle matches brute-force enumeration") {
  const auto d = tiny_dataset();
  struct Case {
    DiffusionModel model;
    double beta;
    SeedSet seeds;
    double expected;
  };
  const Case cases[] = {
      {IC, 0.5, SeedSet({{0, 0}}), 2.2476440264319986},
      {IC, 0.5, SeedSet({{0, 0}, {1, 1}}), 3.5649200255999998},
      {IC, 0.0, SeedSet({{0, 0}, {1, 1}}), 2.8763999999999994},
      {LT, 0.5, SeedSet({{0, 0}}), 3.7010000000000014},
      {LT, 0.5, SeedSet({{0, 1}, {1, 0}}), 3.619999999999999},
      {LT, 0.0, SeedSet({{1, 1}}), 1.0},
  };
  for (const auto& c : cases) {
    CAPTURE(c.seeds.to_string());
    CHECK(exact_influence(c.seeds, d, make_config(c.model, c.beta)) ==
          doctest::Approx(c.expected).epsilon(1e-12));
  }
}

TEST_CASE("Monte Carlo agrees with the exact oracle") {
  const auto d = tiny_dataset();
  for (auto model : {IC, LT}) {
    const SeedSet s({{0, 0}, {1, 1}});
    const auto cfg = make_config(model, 0.5, 20000, 3);
    const auto est = estimate_influence_stats(s, d, cfg);
    const double exact = exact_influence(s, d, cfg);
    CHECK(est.runs == 20000);
    CHECK(std::abs(est.mean - exact) <= 4.0 * est.std_error + 1e-12);
  }
}

TEST_CASE("estimates are reproducible and thread-count independent") {
  const auto d = generate_synthetic({300, 1500, 8, 10, 4});
  const SeedSet s({{1, 2}, {7, 5}, {40, 0}});
  auto c = make_config(IC, 0.3, 64, 99);
  const double one = estimate_influence(s, d, c);
  c.threads = 3;
  CHECK(estimate_influence(s, d, c) == one);
  c.threads = 1;
  CHECK(estimate_influence(s, d, c) == one);
  c.seed = 100;
  CHECK(estimate_influence(s, d, c) != one);
}

TEST_CASE("random event count and infeasibility") {
  const auto d = tiny_dataset();
  // IC: 3 edges x 2 layers; association: 3 users x 2 directed item pairs.
  CHECK(count_random_events(d, make_config(IC, 0.5)) == 12);
  CHECK(count_random_events(d, make_config(LT, 0.5)) == 6);
  CHECK(count_random_events(d, make_config(LT, 0.0)) == 0);
  const auto big = generate_synthetic({30, 100, 5, 4, 1});
  CHECK_THROWS_AS(exact_influence(SeedSet({{0, 0}}), big, make_config(IC, 0.3)), OracleInfeasible);
}

TEST_CASE("beta = 0 keeps layers independent") {
  const auto d = tiny_dataset();
  for (auto model : {IC, LT}) {
    const auto c = make_config(model, 0.0);
    const double both = exact_influence(SeedSet({{0, 0}, {1, 1}}), d, c);
    const double first = exact_influence(SeedSet({{0, 0}}), d, c);
    const double second = exact_influence(SeedSet({{1, 1}}), d, c);
    CHECK(both == doctest::Approx(first + second).epsilon(1e-14));
  }
}

TEST_CASE("adding a pair never lowers exact influence") {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto d = generate_synthetic({4, 4, 2, 1, seed});
    for (auto model : {IC, LT}) {
      const auto c = make_config(model, 0.4);
      REQUIRE(count_random_events(d, c) <= kExactOracleEventLimit);
      for (UserId u = 0; u < 4; ++u) {
        for (ItemId v = 0; v < 2; ++v) {
          const SeedSet base({{u, v}});
          const double before = exact_influence(base, d, c);
          for (UserId u2 = 0; u2 < 4; ++u2) {
            for (ItemId v2 = 0; v2 < 2; ++v2) {
              if (u2 == u || v2 == v) continue;
              CHECK(exact_influence(base.with({u2, v2}), d, c) >= before - 1e-12);
            }
          }
        }
      }
    }
  }
}

TEST_CASE("multiplex state resets only what it touched") {
  MultiplexState st(3, 2);
  CHECK(st.activate(1, 1));
  CHECK_FALSE(st.activate(1, 1));
  CHECK(st.active(1, 1));
  CHECK(st.num_active() == 1);
  st.reset();
  CHECK_FALSE(st.active(1, 1));
  CHECK(st.num_active() == 0);
}
