#include "disco/objective.hpp"

#include <algorithm>
#include <cmath>

#include "disco/errors.hpp"

namespace disco {

void ObjectiveConfig::validate() const {
  if (!(clip_eps > 0.0 && clip_eps < 1.0)) throw InvalidConfig("clip_eps must lie in (0, 1)");
  if (!(kl_beta >= 0.0)) throw InvalidConfig("kl_beta must be non-negative");
}

std::string to_string(Aggregation a) {
  switch (a) {
    case Aggregation::sequence: return "sequence";
    case Aggregation::token_mean: return "token_mean";
    case Aggregation::token_sum: return "token_sum";
  }
  return "unknown";
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "sequence") return Aggregation::sequence;
  if (name == "token_mean") return Aggregation::token_mean;
  if (name == "token_sum") return Aggregation::token_sum;
  throw InvalidConfig("unknown aggregation '" + name + "'");
}

Aggregation default_aggregation(Method method) {
  return method == Method::dr_grpo ? Aggregation::token_sum : Aggregation::token_mean;
}

double prob_ratio(double logp_new, double logp_old) {
  if (!std::isfinite(logp_new) || !std::isfinite(logp_old)) throw NonFiniteLogProb();
  return std::exp(logp_new - logp_old);
}

double clipped_term(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return std::min(ratio * advantage, clipped * advantage);
}

double k3_kl(double logp_ref, double logp_new) {
  if (!std::isfinite(logp_ref) || !std::isfinite(logp_new)) throw NonFiniteLogProb();
  const double x = logp_ref - logp_new;
  if (std::abs(x) < 0.1) {
    // e^x - x - 1 = sum_{n>=2} x^n / n!; 16 terms reach full precision here.
    double term = x * x / 2.0;
    double sum = 0.0;
    for (int n = 3; n <= 18; ++n) {
      sum += term;
      term *= x / n;
    }
    return sum;
  }
  return std::expm1(x) - x;
}

namespace {

// d/d ratio of min(ratio * A, clip(ratio) * A) is A on the unclipped branch
// and 0 once the clipped branch is strictly smaller.
double surrogate_slope(double ratio, double advantage, double clip_eps) {
  const double clipped = std::clamp(ratio, 1.0 - clip_eps, 1.0 + clip_eps);
  return ratio * advantage <= clipped * advantage ? advantage : 0.0;
}

}  // namespace

ObjectiveResult group_objective(const Policy& policy, std::span<const RolloutGroup> groups,
                                std::span<const GroupAdvantages> advantages,
                                const ObjectiveConfig& config) {
  config.validate();
  if (groups.size() != advantages.size()) {
    throw MismatchedGroupSizes(std::to_string(groups.size()) + " groups vs " +
                               std::to_string(advantages.size()) + " advantage sets");
  }
  ObjectiveResult result;
  if (groups.empty()) return result;

  const double beta = config.kl_beta;
  const double eps = config.clip_eps;
  double objective = 0.0;
  double surrogate_total = 0.0;
  double kl_total = 0.0;

  for (std::size_t j = 0; j < groups.size(); ++j) {
    const RolloutGroup& group = groups[j];
    group.validate();
    const std::vector<double>& adv = advantages[j].advantages;
    const std::size_t g = group.size();
    if (adv.size() != g) {
      throw MismatchedGroupSizes("group " + group.prompt_id + ": " + std::to_string(adv.size()) +
                                 " advantages for " + std::to_string(g) + " outputs");
    }
    if (g == 0) throw EmptyGroup();

    const LogitTable& table = policy.table(group.key);
    std::vector<std::vector<double>> lsm(table.rows());
    for (std::size_t t = 0; t < table.rows(); ++t) lsm[t] = log_softmax(table.row(t));

    LogitTable& grad = result.gradient.try_emplace(group.key, table.shape()).first->second;

    double group_surrogate = 0.0;
    double group_kl = 0.0;
    std::vector<double> coeff;
    for (std::size_t i = 0; i < g; ++i) {
      const TokenSeq& out = group.outputs[i];
      if (out.size() != table.rows()) throw LengthMismatch(out.size(), table.rows());
      const std::size_t len = out.size();
      const double a = adv[i];
      coeff.assign(len, 0.0);

      std::vector<double> logp_new(len);
      for (std::size_t t = 0; t < len; ++t) {
        if (out[t] >= table.cols()) throw TokenOutOfRange(out[t], table.cols());
        logp_new[t] = lsm[t][out[t]];
      }

      if (config.aggregation == Aggregation::sequence) {
        double s_new = 0.0, s_old = 0.0, s_ref = 0.0;
        for (std::size_t t = 0; t < len; ++t) {
          s_new += logp_new[t];
          s_old += group.logp_old[i][t];
          s_ref += group.logp_ref[i][t];
        }
        const double ratio = prob_ratio(s_new, s_old);
        const double kl = k3_kl(s_ref, s_new);
        group_surrogate += clipped_term(ratio, a, eps);
        group_kl += kl;
        const double d =
            surrogate_slope(ratio, a, eps) * ratio - beta * (1.0 - std::exp(s_ref - s_new));
        std::fill(coeff.begin(), coeff.end(), d);
      } else {
        const double norm =
            config.aggregation == Aggregation::token_mean ? 1.0 / static_cast<double>(len) : 1.0;
        for (std::size_t t = 0; t < len; ++t) {
          const double ratio = prob_ratio(logp_new[t], group.logp_old[i][t]);
          const double kl = k3_kl(group.logp_ref[i][t], logp_new[t]);
          group_surrogate += norm * clipped_term(ratio, a, eps);
          group_kl += norm * kl;
          coeff[t] = norm * (surrogate_slope(ratio, a, eps) * ratio -
                             beta * (1.0 - std::exp(group.logp_ref[i][t] - logp_new[t])));
        }
      }

      // d logp(o_t) / d z_v = [v == o_t] - softmax(z)_v
      for (std::size_t t = 0; t < len; ++t) {
        const double c = coeff[t] / static_cast<double>(g);
        if (c == 0.0) continue;
        auto row = grad.row(t);
        for (std::size_t v = 0; v < row.size(); ++v) {
          const double indicator = v == out[t] ? 1.0 : 0.0;
          row[v] += c * (indicator - std::exp(lsm[t][v]));
        }
      }
    }
    group_surrogate /= static_cast<double>(g);
    group_kl /= static_cast<double>(g);
    surrogate_total += group_surrogate;
    kl_total += group_kl;
    objective += group_surrogate - beta * group_kl;
  }

  const double n = static_cast<double>(groups.size());
  result.surrogate = surrogate_total / n;
  result.kl = kl_total / n;
  result.loss = -(objective / n);
  for (auto& [key, grad] : result.gradient) {
    for (double& x : grad.data()) x = -x / n;
  }
  return result;
}

}  // namespace disco
