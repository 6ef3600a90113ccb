#pragma once

#include <span>
#include <vector>

#include "disco/core.hpp"

namespace disco {

/// Advantages for one rollout group plus the weights that produced them.
struct GroupAdvantages {
  std::vector<double> advantages;
  double w_dom = 1.0;
  double w_diff = 1.0;
  double sc = 0.0;
  Method method = Method::naive;
};

/// Domain weight for proportion p in (0, 1]:
///   v1: ln(1 + 1/p), v2: ln(1 + 1/p)^2, v3: 1/p.
/// Throws InvalidProportion outside (0, 1].
double domain_weight(WeightVariant variant, double p);

/// Mean of binary rewards. Throws EmptyGroup.
double self_consistency(std::span<const double> rewards);

/// 1 / (sc + eps_prime).
double difficulty_weight(double sc, double eps_prime);

std::vector<double> scale_rewards(std::span<const double> rewards, double w_dom, double w_diff);

/// r_i - mean(r). No variance normalization. Throws EmptyGroup.
std::vector<double> centered_advantages(std::span<const double> scaled_rewards);

/// (r_i - mean(r)) / sigma with population sigma; all zeros when sigma == 0.
/// Throws EmptyGroup.
std::vector<double> normalized_advantages(std::span<const double> rewards);

/// Dispatches on config.method. The self-consistency score is always taken from
/// the raw binary rewards. Throws UnknownDomain when a domain weight is needed
/// and the group's domain is not in the catalog.
GroupAdvantages compute_group_advantages(const RolloutGroup& group, const DomainCatalog& catalog,
                                         const ScalingConfig& config);

}  // namespace disco
