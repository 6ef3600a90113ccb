#include <doctest.h>

#include <cmath>

#include "disco/errors.hpp"
#include "disco/report.hpp"
#include "disco/trainer.hpp"

using namespace disco;

namespace {

TrainConfig small_config(Method m) {
  TrainConfig c;
  c.with_method(m);
  c.env.domains = {{"a", 400, 4, 1, 20}, {"b", 400, 2, 2, 20}};
  c.mixture = MixtureSpec::heavy({"a", "b"}, "a", 300);
  c.batch_size = 16;
  c.eval_every = 5;
  return c;
}

}  // namespace

TEST_SUITE("trainer") {
  TEST_CASE("config validation") {
    TrainConfig c;
    CHECK_NOTHROW(c.validate());
    c.group_size = 1;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = TrainConfig{};
    c.learning_rate = NAN;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    c = TrainConfig{};
    c.objective.kl_beta = -1.0;
    CHECK_THROWS_AS(c.validate(), InvalidConfig);
    CHECK(TrainConfig{}.with_method(Method::dr_grpo).objective.aggregation == Aggregation::token_sum);
    CHECK(TrainConfig{}.resolved_mixture().total == 4000);
  }

  TEST_CASE("runs are deterministic and report the expected shape") {
    for (Method m : {Method::naive, Method::dr_grpo, Method::disco, Method::domain_only, Method::diff_only}) {
      const TrainConfig c = small_config(m);
      const RunReport a = run_training(c);
      const RunReport b = run_training(c);
      CHECK(a == b);
      CHECK(report_to_json(a).dump() == report_to_json(b).dump());
      CHECK(a.reward_curve.size() == 19);
      CHECK(a.eval_table.front().batch == 0);
      CHECK(a.eval_table.back().batch == 19);
      CHECK(a.eval_table.size() == 5);
      for (double r : a.reward_curve) {
        CHECK(r >= 0.0);
        CHECK(r <= 1.0);
      }
      for (const Checkpoint& cp : a.eval_table) {
        CHECK(cp.accuracy.size() == 2);
        double sum = 0.0;
        for (const auto& [d, acc] : cp.accuracy) sum += acc;
        CHECK(cp.average == doctest::Approx(sum / 2.0));
      }
    }
  }

  TEST_CASE("zero-signal batch leaves parameters bit-identical") {
    TrainConfig c = small_config(Method::disco);
    c.objective.kl_beta = 0.0;
    const EnvData data = training_data(c);
    // A policy that never produces the right answer: every target token gets a
    // huge negative logit.
    std::vector<PromptRecord> all = data.train;
    Policy init = init_policy(validate_dataset(all), PolicyInit::seeded_gaussian(1.0), 3);
    for (const auto& r : all) {
      LogitTable& t = init.table(r.key());
      for (std::size_t pos = 0; pos < r.target.size(); ++pos) t(pos, r.target[pos]) = -1e4;
    }
    for (Method m : {Method::naive, Method::dr_grpo, Method::disco, Method::domain_only, Method::diff_only}) {
      c.with_method(m);
      Trainer trainer(c, data.train, data.eval, init);
      const std::vector<PromptRecord> batch(data.train.begin(), data.train.begin() + 16);
      const BatchStats stats = trainer.train_batch(batch, 0, 0);
      CHECK(stats.mean_reward == 0.0);
      CHECK(stats.zero_signal_groups == 16);
      CHECK(trainer.policy().tables() == init.tables());
    }
  }

  TEST_CASE("evaluation") {
    Policy p;
    LogitTable t({1, 2});
    t(0, 1) = 1.0;
    p.add_table("k", t);
    const std::vector<PromptRecord> eval{{"x", "a", {1}, 2, "k"}, {"y", "b", {0}, 2, "k"}};
    const auto acc = evaluate(p, eval);
    CHECK(acc.at("a") == 100.0);
    CHECK(acc.at("b") == 0.0);
    CHECK(make_checkpoint(3, acc).average == 50.0);
    CHECK_THROWS_AS(evaluate(p, {}), EmptyEvalSet);
  }

  TEST_CASE("paired t-test examples") {
    const std::vector<double> zero{0.0, 0.0, 0.0};
    const auto r = paired_t_test(std::vector{1.0, 2.0, 3.0}, zero);
    CHECK(r.t == doctest::Approx(2.0 * std::sqrt(3.0)).epsilon(1e-9));
    CHECK(r.df == 2);
    const double t = r.t;
    CHECK(r.p_one_tailed == doctest::Approx(0.5 - t / (2.0 * std::sqrt(t * t + 2.0))).epsilon(1e-9));

    const auto s = paired_t_test(std::vector{1.0, -1.0}, std::vector{0.0, 0.0});
    CHECK(s.t == 0.0);
    CHECK(s.p_one_tailed == doctest::Approx(0.5));

    CHECK_THROWS_AS(paired_t_test(std::vector{1.0, 2.0}, std::vector{1.0, 2.0}), DegenerateVariance);
    CHECK_THROWS_AS(paired_t_test(std::vector{1.0}, std::vector{2.0}), InvalidConfig);
    CHECK_THROWS_AS(paired_t_test(std::vector{1.0, 2.0}, std::vector{2.0}), LengthMismatch);
  }

  TEST_CASE("t statistic flips sign when the arguments swap") {
    const std::vector<double> a{3.0, 1.5, 4.0, 2.2}, b{1.0, 2.0, 2.5, 0.1};
    const auto ab = paired_t_test(a, b);
    const auto ba = paired_t_test(b, a);
    CHECK(ab.t == doctest::Approx(-ba.t));
    CHECK(ab.p_one_tailed + ba.p_one_tailed == doctest::Approx(1.0));
  }
}
