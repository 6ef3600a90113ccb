#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "disco/core.hpp"
#include "disco/env.hpp"
#include "disco/objective.hpp"
#include "disco/policy.hpp"
#include "disco/sampler.hpp"
#include "disco/scaling.hpp"

namespace disco {

struct TrainConfig {
  ScalingConfig scaling;
  ObjectiveConfig objective;
  std::size_t group_size = 4;
  std::size_t batch_size = 64;
  std::size_t epochs = 1;
  std::size_t inner_steps = 1;
  double learning_rate = 32.0;
  std::uint64_t seed = 1;
  MixtureSpec mixture;
  EnvSpec env = EnvSpec::default_four_domain();
  std::size_t eval_every = 0;  // batches between evaluations; 0 = start and end only
  PolicyInit init = PolicyInit::seeded_gaussian(1.0);

  /// Throws InvalidConfig.
  void validate() const;

  /// Sets the scaling method together with that method's default aggregation.
  TrainConfig& with_method(Method method);
  /// The configured mixture, or a balanced 4000-prompt mixture over the env
  /// domains when none is set.
  MixtureSpec resolved_mixture() const;
};

struct Checkpoint {
  std::size_t batch = 0;  // optimizer steps taken before this evaluation
  std::map<std::string, double> accuracy;  // domain -> EM accuracy in percent
  double average = 0.0;  // unweighted mean over domains

  bool operator==(const Checkpoint&) const = default;
};

struct RunSummary {
  std::string method;
  std::string variant;
  std::string mixture;
  std::uint64_t seed = 0;
  std::size_t group_size = 0;

  bool operator==(const RunSummary&) const = default;
};

struct RunReport {
  std::vector<double> reward_curve;  // mean raw reward per batch
  std::vector<Checkpoint> eval_table;
  RunSummary summary;
  double wall_clock_seconds = 0.0;  // not serialized with the report

  const Checkpoint& final_checkpoint() const { return eval_table.back(); }
  /// Equality over everything except wall-clock time.
  bool operator==(const RunReport& other) const {
    return reward_curve == other.reward_curve && eval_table == other.eval_table &&
           summary == other.summary;
  }
};

/// Greedy EM accuracy (percent) per domain. Throws EmptyEvalSet.
std::map<std::string, double> evaluate(const Policy& policy, std::span<const PromptRecord> eval_records);

/// Checkpoint with the unweighted domain average filled in.
Checkpoint make_checkpoint(std::size_t batch, std::map<std::string, double> accuracy);

struct BatchStats {
  double mean_reward = 0.0;
  double loss = 0.0;
  std::size_t zero_signal_groups = 0;  // groups whose advantages are all zero
};

/// Rollout -> scale -> objective -> update loop over a fixed dataset.
class Trainer {
 public:
  /// `catalog` is computed from `train`; pi_ref is a snapshot of `initial`.
  Trainer(TrainConfig config, std::vector<PromptRecord> train, std::vector<PromptRecord> eval,
          Policy initial);

  /// One batch: snapshot pi_old, sample G outputs per prompt, score, and take
  /// `inner_steps` gradient steps.
  BatchStats train_batch(std::span<const PromptRecord> batch, std::size_t epoch, std::size_t batch_index);

  RunReport run();

  const Policy& policy() const { return policy_; }
  const DomainCatalog& catalog() const { return catalog_; }
  const TrainConfig& config() const { return config_; }

 private:
  TrainConfig config_;
  std::vector<PromptRecord> train_;
  std::vector<PromptRecord> eval_;
  DomainCatalog catalog_;
  Policy policy_;
  FrozenPolicy reference_;
};

/// Dataset for a config: env, then the configured mixture drawn from its train split.
EnvData training_data(const TrainConfig& config);

/// Full pipeline. Deterministic in the config. `final_policy`, when given,
/// receives the trained policy.
RunReport run_training(const TrainConfig& config, Policy* final_policy = nullptr);

struct TTestResult {
  double t = 0.0;
  double p_one_tailed = 0.0;  // P(T >= t) under the null
  std::size_t df = 0;
  double mean_difference = 0.0;
};

/// Paired t-test on d = a - b with sample standard deviation. Throws
/// LengthMismatch, InvalidConfig (n < 2), DegenerateVariance.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

/// One run per group size with the base config otherwise unchanged.
std::vector<RunReport> sweep_group_size(const TrainConfig& base,
                                        std::span<const std::size_t> group_sizes);

}  // namespace disco
