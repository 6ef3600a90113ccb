#pragma once

// Helpers shared by the unit tests and the acceptance runner.

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "disco/objective.hpp"
#include "disco/policy.hpp"
#include "disco/scaling.hpp"

namespace disco::testing {

struct ObjectiveInstance {
  Policy policy;
  std::vector<RolloutGroup> groups;
  std::vector<GroupAdvantages> advantages;
};

inline Policy random_policy(std::mt19937_64& rng, const std::vector<std::string>& keys, TableShape shape,
                            double sigma) {
  std::normal_distribution<double> n(0.0, sigma);
  Policy p;
  for (const auto& k : keys) {
    LogitTable t(shape);
    for (double& x : t.data()) x = n(rng);
    p.add_table(k, std::move(t));
  }
  return p;
}

// Live policy near pi_old so that some ratios fall inside and some outside the
// clip range; rewards and advantages are random.
inline ObjectiveInstance random_objective_instance(std::mt19937_64& rng, std::size_t g, std::uint32_t vocab,
                                                   std::size_t length, std::size_t n_groups) {
  ObjectiveInstance inst;
  const TableShape shape{length, vocab};
  std::vector<std::string> keys;
  for (std::size_t j = 0; j < n_groups; ++j) keys.push_back("k" + std::to_string(j));
  const Policy old = random_policy(rng, keys, shape, 1.0);
  const Policy ref = random_policy(rng, keys, shape, 1.0);
  inst.policy = old;
  std::normal_distribution<double> jitter(0.0, 0.3);
  for (const auto& k : keys) {
    for (double& x : inst.policy.table(k).data()) x += jitter(rng);
  }
  std::uniform_int_distribution<Token> tok(0, vocab - 1);
  std::normal_distribution<double> adv(0.0, 1.0);
  for (std::size_t j = 0; j < n_groups; ++j) {
    RolloutGroup group;
    group.prompt_id = keys[j];
    group.key = keys[j];
    group.domain = "d";
    GroupAdvantages a;
    for (std::size_t i = 0; i < g; ++i) {
      TokenSeq out(length);
      for (Token& t : out) t = tok(rng);
      group.logp_old.push_back(log_prob(old, keys[j], out));
      group.logp_ref.push_back(log_prob(ref, keys[j], out));
      group.rewards.push_back(static_cast<double>(rng() % 2));
      group.outputs.push_back(std::move(out));
      a.advantages.push_back(adv(rng));
    }
    inst.groups.push_back(std::move(group));
    inst.advantages.push_back(std::move(a));
  }
  return inst;
}

// Largest relative error between the analytic gradient and central finite
// differences over entries whose magnitude exceeds `floor`.
inline double gradient_check(const ObjectiveInstance& inst, const ObjectiveConfig& config, double step,
                             double floor) {
  const ObjectiveResult base = group_objective(inst.policy, inst.groups, inst.advantages, config);
  double worst = 0.0;
  for (const auto& [key, table] : inst.policy.tables()) {
    for (std::size_t idx = 0; idx < table.data().size(); ++idx) {
      Policy plus = inst.policy;
      Policy minus = inst.policy;
      plus.table(key).data()[idx] += step;
      minus.table(key).data()[idx] -= step;
      const double lp = group_objective(plus, inst.groups, inst.advantages, config).loss;
      const double lm = group_objective(minus, inst.groups, inst.advantages, config).loss;
      const double fd = (lp - lm) / (2.0 * step);
      const auto it = base.gradient.find(key);
      const double analytic = it == base.gradient.end() ? 0.0 : it->second.data()[idx];
      if (std::abs(analytic) <= floor) continue;
      worst = std::max(worst, std::abs(analytic - fd) / std::abs(analytic));
    }
  }
  return worst;
}

}  // namespace disco::testing
