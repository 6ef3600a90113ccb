#pragma once

#include <span>

#include "disco/core.hpp"
#include "disco/policy.hpp"
#include "disco/scaling.hpp"

namespace disco {

/// How per-token terms of one output are combined.
///   sequence:   one ratio for the whole answer, exp(sum new - sum old)
///   token_mean: per-token ratios, averaged over the answer length
///   token_sum:  per-token ratios, summed (no length normalization)
enum class Aggregation { sequence, token_mean, token_sum };

struct ObjectiveConfig {
  double clip_eps = 0.2;
  double kl_beta = 1e-3;
  Aggregation aggregation = Aggregation::token_mean;

  void validate() const;
};

std::string to_string(Aggregation a);
Aggregation parse_aggregation(const std::string& name);

/// Token aggregation each method uses unless configured otherwise.
Aggregation default_aggregation(Method method);

/// exp(logp_new - logp_old). Throws NonFiniteLogProb.
double prob_ratio(double logp_new, double logp_old);

/// min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A).
double clipped_term(double ratio, double advantage, double clip_eps);

/// K3 estimate rho - ln(rho) - 1 with rho = exp(logp_ref - logp_new).
/// Throws NonFiniteLogProb.
double k3_kl(double logp_ref, double logp_new);

struct ObjectiveResult {
  double loss = 0.0;       // negated objective
  double surrogate = 0.0;  // mean clipped surrogate
  double kl = 0.0;         // mean K3 penalty before beta
  PolicyGradient gradient;  // d loss / d logits
};

/// Clipped surrogate with K3 penalty, averaged over groups (ascending index),
/// and its exact gradient with respect to the live policy's logits. Advantages
/// are treated as constants. Throws MismatchedGroupSizes, MissingLogProbs.
ObjectiveResult group_objective(const Policy& policy, std::span<const RolloutGroup> groups,
                                std::span<const GroupAdvantages> advantages,
                                const ObjectiveConfig& config);

}  // namespace disco
