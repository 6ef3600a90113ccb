#include "disco/scaling.hpp"

#include <algorithm>
#include <cmath>

#include "disco/errors.hpp"

namespace disco {

namespace {

double mean(std::span<const double> xs) {
  double sum = 0.0;
  for (double x : xs) sum += x;
  return sum / static_cast<double>(xs.size());
}

}  // namespace

double domain_weight(WeightVariant variant, double p) {
  if (!(p > 0.0 && p <= 1.0)) throw InvalidProportion(p);
  switch (variant) {
    case WeightVariant::v1_log: return std::log1p(1.0 / p);
    case WeightVariant::v2_log_squared: {
      const double w = std::log1p(1.0 / p);
      return w * w;
    }
    case WeightVariant::v3_inverse: return 1.0 / p;
  }
  throw InvalidConfig("unknown weight variant");
}

double self_consistency(std::span<const double> rewards) {
  if (rewards.empty()) throw EmptyGroup();
  return mean(rewards);
}

double difficulty_weight(double sc, double eps_prime) {
  if (!(sc >= 0.0 && sc <= 1.0)) throw InvalidConfig("self-consistency must lie in [0, 1]");
  if (!(eps_prime > 0.0)) throw InvalidConfig("eps_prime must be positive");
  return 1.0 / (sc + eps_prime);
}

std::vector<double> scale_rewards(std::span<const double> rewards, double w_dom, double w_diff) {
  if (w_dom < 0.0 || w_diff < 0.0) throw InvalidConfig("reward weights must be non-negative");
  std::vector<double> out(rewards.size());
  const double w = w_dom * w_diff;
  for (std::size_t i = 0; i < rewards.size(); ++i) out[i] = rewards[i] * w;
  return out;
}

std::vector<double> centered_advantages(std::span<const double> scaled_rewards) {
  if (scaled_rewards.empty()) throw EmptyGroup();
  const double m = mean(scaled_rewards);
  std::vector<double> out(scaled_rewards.size());
  for (std::size_t i = 0; i < scaled_rewards.size(); ++i) out[i] = scaled_rewards[i] - m;
  return out;
}

std::vector<double> normalized_advantages(std::span<const double> rewards) {
  std::vector<double> out = centered_advantages(rewards);
  double ss = 0.0;
  for (double a : out) ss += a * a;
  const double sigma = std::sqrt(ss / static_cast<double>(out.size()));
  if (sigma == 0.0) {
    std::fill(out.begin(), out.end(), 0.0);
    return out;
  }
  for (double& a : out) a /= sigma;
  return out;
}

GroupAdvantages compute_group_advantages(const RolloutGroup& group, const DomainCatalog& catalog,
                                         const ScalingConfig& config) {
  config.validate();
  GroupAdvantages result;
  result.method = config.method;
  result.sc = self_consistency(group.rewards);

  switch (config.method) {
    case Method::naive:
      result.advantages = normalized_advantages(group.rewards);
      return result;
    case Method::dr_grpo:
      result.advantages = centered_advantages(group.rewards);
      return result;
    case Method::domain_only:
      result.w_dom = domain_weight(config.variant, catalog.proportion(group.domain));
      break;
    case Method::diff_only:
      result.w_diff = difficulty_weight(result.sc, config.eps_prime);
      break;
    case Method::disco:
      result.w_dom = domain_weight(config.variant, catalog.proportion(group.domain));
      result.w_diff = difficulty_weight(result.sc, config.eps_prime);
      break;
  }
  result.advantages = centered_advantages(scale_rewards(group.rewards, result.w_dom, result.w_diff));
  return result;
}

}  // namespace disco
