#include <doctest.h>

#include <cmath>
#include <random>

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "disco/errors.hpp"
#include "disco/scaling.hpp"

using namespace disco;
using Big = boost::multiprecision::cpp_bin_float_50;

namespace {

double rel_err(double got, const Big& want) {
  const Big diff = abs(Big(got) - want);
  const Big denom = abs(want) > Big(1e-300) ? abs(want) : Big(1);
  return static_cast<double>(diff / denom);
}

RolloutGroup group_of(std::vector<double> rewards, std::string domain = "math") {
  RolloutGroup g;
  g.prompt_id = "p";
  g.key = "p";
  g.domain = std::move(domain);
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    g.outputs.push_back({0});
    g.logp_old.push_back({-1.0});
    g.logp_ref.push_back({-1.0});
  }
  g.rewards = std::move(rewards);
  return g;
}

}  // namespace

TEST_SUITE("scaling") {
  TEST_CASE("domain weight values") {
    CHECK(domain_weight(WeightVariant::v1_log, 0.5) == doctest::Approx(std::log(3.0)));
    CHECK(domain_weight(WeightVariant::v2_log_squared, 0.5) == doctest::Approx(std::log(3.0) * std::log(3.0)));
    CHECK(domain_weight(WeightVariant::v3_inverse, 0.25) == 4.0);
    CHECK(domain_weight(WeightVariant::v1_log, 1.0) == doctest::Approx(std::log(2.0)));
  }

  TEST_CASE("domain weight rejects proportions outside (0, 1]") {
    for (double p : {0.0, -0.1, 1.0000001, std::nan("")}) {
      CHECK_THROWS_AS(domain_weight(WeightVariant::v1_log, p), InvalidProportion);
    }
  }

  TEST_CASE("domain weight matches a 50-digit oracle") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> logp(-9.0, 0.0);
    for (int i = 0; i < 500; ++i) {
      const double p = std::pow(10.0, logp(rng));
      const Big v1 = boost::multiprecision::log1p(Big(1) / Big(p));
      CHECK(rel_err(domain_weight(WeightVariant::v1_log, p), v1) < 1e-13);
      CHECK(rel_err(domain_weight(WeightVariant::v2_log_squared, p), v1 * v1) < 1e-13);
      CHECK(rel_err(domain_weight(WeightVariant::v3_inverse, p), Big(1) / Big(p)) < 1e-15);
    }
  }

  TEST_CASE("domain weights strictly decrease and v1 < v3") {
    double prev[3] = {INFINITY, INFINITY, INFINITY};
    for (int i = 1; i <= 100; ++i) {
      const double p = i / 100.0;
      const WeightVariant vs[] = {WeightVariant::v1_log, WeightVariant::v2_log_squared, WeightVariant::v3_inverse};
      for (int k = 0; k < 3; ++k) {
        const double w = domain_weight(vs[k], p);
        CHECK(w < prev[k]);
        prev[k] = w;
      }
      CHECK(domain_weight(WeightVariant::v1_log, p) < domain_weight(WeightVariant::v3_inverse, p));
    }
  }

  TEST_CASE("self-consistency and difficulty weight") {
    CHECK(self_consistency(std::vector{1.0, 0.0, 1.0, 0.0}) == 0.5);
    CHECK(self_consistency(std::vector{0.0, 0.0}) == 0.0);
    CHECK_THROWS_AS(self_consistency(std::vector<double>{}), EmptyGroup);
    CHECK(difficulty_weight(0.0, 1e-6) == doctest::Approx(1e6));
    CHECK(difficulty_weight(1.0, 1e-6) == doctest::Approx(1.0 / (1.0 + 1e-6)));
    CHECK_THROWS_AS(difficulty_weight(1.5, 1e-6), InvalidConfig);
    CHECK_THROWS_AS(difficulty_weight(0.5, 0.0), InvalidConfig);
    double prev = INFINITY;
    for (int k = 0; k <= 16; ++k) {
      const double w = difficulty_weight(k / 16.0, 1e-6);
      CHECK(w < prev);
      prev = w;
    }
  }

  TEST_CASE("centered advantages sum to zero and are linear") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::uniform_real_distribution<double> wd(0.01, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
      const std::size_t g = 2 + trial % 15;
      std::vector<double> r(g);
      for (double& x : r) x = u(rng) < 0.5 ? 1.0 : u(rng);
      const double w = wd(rng);
      const auto a = centered_advantages(r);
      double sum = 0.0;
      for (double x : a) sum += x;
      CHECK(std::abs(sum) < 1e-12);
      std::vector<double> wr(g);
      for (std::size_t i = 0; i < g; ++i) wr[i] = w * r[i];
      const auto b = centered_advantages(wr);
      for (std::size_t i = 0; i < g; ++i) CHECK(std::abs(b[i] - w * a[i]) < 1e-12 * std::max(1.0, w));
    }
  }

  TEST_CASE("normalized advantages") {
    const auto a = normalized_advantages(std::vector{1.0, 0.0, 0.0, 0.0});
    CHECK(a[0] == doctest::Approx(std::sqrt(3.0)));
    CHECK(a[1] == doctest::Approx(-1.0 / std::sqrt(3.0)));
    for (double c : {0.0, 1.0}) {
      for (double x : normalized_advantages(std::vector{c, c, c})) CHECK(x == 0.0);
    }
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<double> r(2 + trial % 9);
      for (double& x : r) x = u(rng);
      const auto n = normalized_advantages(r);
      double m = 0.0, v = 0.0;
      for (double x : n) m += x;
      m /= static_cast<double>(n.size());
      for (double x : n) v += (x - m) * (x - m);
      v /= static_cast<double>(n.size());
      CHECK(std::abs(m) < 1e-12);
      CHECK(v == doctest::Approx(1.0).epsilon(1e-12));
    }
  }

  TEST_CASE("group advantages per method") {
    const DomainCatalog cat({{"math", 3}, {"nq", 1}});
    const RolloutGroup g = group_of({1.0, 0.0, 0.0, 0.0}, "nq");
    ScalingConfig cfg;

    cfg.method = Method::disco;
    const auto d = compute_group_advantages(g, cat, cfg);
    CHECK(d.sc == 0.25);
    CHECK(d.w_dom == doctest::Approx(std::log(5.0)));
    CHECK(d.w_diff == doctest::Approx(1.0 / (0.25 + 1e-6)));
    CHECK(d.advantages[0] == doctest::Approx(0.75 * d.w_dom * d.w_diff));
    CHECK(d.advantages[1] == doctest::Approx(-0.25 * d.w_dom * d.w_diff));

    cfg.method = Method::domain_only;
    const auto dom = compute_group_advantages(g, cat, cfg);
    CHECK(dom.w_diff == 1.0);
    CHECK(dom.advantages[0] == doctest::Approx(0.75 * std::log(5.0)));

    cfg.method = Method::diff_only;
    const auto diff = compute_group_advantages(g, cat, cfg);
    CHECK(diff.w_dom == 1.0);
    CHECK(diff.advantages[0] == doctest::Approx(0.75 / (0.25 + 1e-6)));

    cfg.method = Method::dr_grpo;
    CHECK(compute_group_advantages(g, cat, cfg).advantages[0] == 0.75);

    cfg.method = Method::naive;
    CHECK(compute_group_advantages(g, cat, cfg).advantages[0] == doctest::Approx(std::sqrt(3.0)));

    cfg.method = Method::disco;
    CHECK_THROWS_AS(compute_group_advantages(group_of({1.0, 0.0}, "arc"), cat, cfg), UnknownDomain);
  }

  TEST_CASE("groups without signal give zero advantages for every method") {
    const DomainCatalog cat({{"math", 1}});
    for (Method m : {Method::naive, Method::dr_grpo, Method::disco, Method::domain_only, Method::diff_only}) {
      ScalingConfig cfg;
      cfg.method = m;
      for (double c : {0.0, 1.0}) {
        const auto a = compute_group_advantages(group_of({c, c, c, c}), cat, cfg);
        for (double x : a.advantages) CHECK(x == 0.0);
      }
    }
  }

  TEST_CASE("rarer domain and harder prompt get larger disco advantages") {
    const DomainCatalog cat({{"math", 9}, {"nq", 1}});
    ScalingConfig cfg;
    const auto rare = compute_group_advantages(group_of({1.0, 0.0, 0.0, 0.0}, "nq"), cat, cfg);
    const auto common = compute_group_advantages(group_of({1.0, 0.0, 0.0, 0.0}, "math"), cat, cfg);
    const auto easy = compute_group_advantages(group_of({1.0, 1.0, 1.0, 0.0}, "nq"), cat, cfg);
    CHECK(rare.advantages[0] > common.advantages[0]);
    CHECK(rare.w_diff > easy.w_diff);
  }
}
