#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "disco/errors.hpp"
#include "disco/objective.hpp"
#include "support.hpp"

using namespace disco;
using Big = boost::multiprecision::cpp_bin_float_50;

TEST_SUITE("objective") {
  TEST_CASE("clipped term branches") {
    CHECK(clipped_term(1.5, 2.0, 0.2) == doctest::Approx(2.4));
    CHECK(clipped_term(0.5, 2.0, 0.2) == doctest::Approx(1.0));
    CHECK(clipped_term(1.5, -1.0, 0.2) == doctest::Approx(-1.5));
    CHECK(clipped_term(0.5, -1.0, 0.2) == doctest::Approx(-0.8));
    CHECK(clipped_term(1.1, 3.0, 0.2) == doctest::Approx(3.3));
    CHECK(clipped_term(1.0, 0.0, 0.2) == 0.0);
  }

  TEST_CASE("clipped term never exceeds the unclipped term") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> ratio(0.0, 3.0), adv(-5.0, 5.0);
    for (int i = 0; i < 1000; ++i) {
      const double r = ratio(rng), a = adv(rng);
      CHECK(clipped_term(r, a, 0.2) <= r * a + 1e-15);
    }
  }

  TEST_CASE("k3 is non-negative, zero at equality and matches a 50-digit oracle") {
    CHECK(k3_kl(-1.3, -1.3) == 0.0);
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> lp(-8.0, 0.0);
    std::uniform_real_distribution<double> tiny(-0.15, 0.15);
    for (int i = 0; i < 1000; ++i) {
      const double ref = lp(rng);
      const double cur = i % 2 ? lp(rng) : ref + tiny(rng) * std::pow(10.0, -static_cast<double>(i % 7));
      const double got = k3_kl(ref, cur);
      CHECK(got >= 0.0);
      const Big x = Big(ref) - Big(cur);
      const Big want = boost::multiprecision::exp(x) - x - 1;
      if (want == 0) {
        CHECK(got == 0.0);
      } else {
        CHECK(static_cast<double>(abs((Big(got) - want) / want)) < 1e-10);
      }
    }
    CHECK_THROWS_AS(k3_kl(-INFINITY, -1.0), NonFiniteLogProb);
    CHECK_THROWS_AS(prob_ratio(std::nan(""), -1.0), NonFiniteLogProb);
  }

  TEST_CASE("default aggregation") {
    CHECK(default_aggregation(Method::dr_grpo) == Aggregation::token_sum);
    CHECK(default_aggregation(Method::disco) == Aggregation::token_mean);
    CHECK(parse_aggregation("sequence") == Aggregation::sequence);
    CHECK_THROWS_AS(parse_aggregation("mean"), InvalidConfig);
  }

  TEST_CASE("single-token objective by hand") {
    Policy p;
    LogitTable t({1, 2});
    t(0, 0) = std::log(3.0);  // p = [0.75, 0.25]
    p.add_table("k", t);
    RolloutGroup g;
    g.prompt_id = g.key = "k";
    g.domain = "d";
    g.outputs = {{0}, {1}};
    g.rewards = {1.0, 0.0};
    g.logp_old = {{std::log(0.75)}, {std::log(0.25)}};
    g.logp_ref = g.logp_old;
    GroupAdvantages a;
    a.advantages = {0.5, -0.5};
    ObjectiveConfig cfg;
    cfg.kl_beta = 0.0;
    const auto res = group_objective(p, std::vector{g}, std::vector{a}, cfg);
    CHECK(res.loss == doctest::Approx(0.0));
    CHECK(res.kl == doctest::Approx(0.0));
    // d/dz0 of mean(A_i * logp(o_i)) = 0.5*(0.5*(1-0.75) + -0.5*(0-0.75)) = 0.25
    CHECK(res.gradient.at("k")(0, 0) == doctest::Approx(-0.25));
    CHECK(res.gradient.at("k")(0, 1) == doctest::Approx(0.25));
  }

  TEST_CASE("analytic gradient matches finite differences") {
    std::mt19937_64 rng(99);
    for (Aggregation agg : {Aggregation::sequence, Aggregation::token_mean, Aggregation::token_sum}) {
      for (int trial = 0; trial < 12; ++trial) {
        const auto inst = testing::random_objective_instance(rng, trial % 2 ? 4 : 2, 2 + trial % 3,
                                                             1 + trial % 2, 2);
        ObjectiveConfig cfg;
        cfg.aggregation = agg;
        cfg.kl_beta = 0.05;
        CHECK(testing::gradient_check(inst, cfg, 1e-5, 1e-8) < 1e-4);
      }
    }
  }

  TEST_CASE("zero advantages and zero beta give a zero gradient") {
    std::mt19937_64 rng(4);
    auto inst = testing::random_objective_instance(rng, 4, 3, 2, 3);
    for (auto& a : inst.advantages) std::fill(a.advantages.begin(), a.advantages.end(), 0.0);
    ObjectiveConfig cfg;
    cfg.kl_beta = 0.0;
    const auto res = group_objective(inst.policy, inst.groups, inst.advantages, cfg);
    for (const auto& [k, t] : res.gradient) {
      for (double x : t.data()) CHECK(x == 0.0);
    }
  }

  TEST_CASE("token_sum scales with answer length relative to token_mean") {
    std::mt19937_64 rng(8);
    const auto inst = testing::random_objective_instance(rng, 4, 3, 2, 1);
    ObjectiveConfig mean_cfg, sum_cfg;
    mean_cfg.kl_beta = sum_cfg.kl_beta = 0.0;
    sum_cfg.aggregation = Aggregation::token_sum;
    const auto m = group_objective(inst.policy, inst.groups, inst.advantages, mean_cfg);
    const auto s = group_objective(inst.policy, inst.groups, inst.advantages, sum_cfg);
    CHECK(s.loss == doctest::Approx(2.0 * m.loss));
  }

  TEST_CASE("objective input errors") {
    std::mt19937_64 rng(6);
    auto inst = testing::random_objective_instance(rng, 2, 2, 1, 2);
    ObjectiveConfig cfg;
    CHECK_THROWS_AS(group_objective(inst.policy, inst.groups, std::span(inst.advantages).first(1), cfg),
                    MismatchedGroupSizes);
    auto broken = inst.groups;
    broken[0].logp_old.pop_back();
    CHECK_THROWS_AS(group_objective(inst.policy, broken, inst.advantages, cfg), MissingLogProbs);
    auto short_adv = inst.advantages;
    short_adv[1].advantages.pop_back();
    CHECK_THROWS_AS(group_objective(inst.policy, inst.groups, short_adv, cfg), MismatchedGroupSizes);
    cfg.clip_eps = 0.0;
    CHECK_THROWS_AS(group_objective(inst.policy, inst.groups, inst.advantages, cfg), InvalidConfig);
    CHECK(group_objective(inst.policy, {}, {}, ObjectiveConfig{}).loss == 0.0);
  }
}
