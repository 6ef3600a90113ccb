#include "disco/trainer.hpp"

#include <chrono>
#include <cmath>

#include <boost/math/distributions/students_t.hpp>

#include "disco/errors.hpp"

namespace disco {

void TrainConfig::validate() const {
  scaling.validate();
  objective.validate();
  if (group_size < 2) throw InvalidConfig("group_size must be >= 2");
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  if (epochs < 1) throw InvalidConfig("epochs must be >= 1");
  if (inner_steps < 1) throw InvalidConfig("inner_steps must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw InvalidConfig("learning_rate must be finite and non-negative");
  }
  if (init.kind == PolicyInit::Kind::seeded_gaussian && !(init.sigma >= 0.0)) {
    throw InvalidConfig("init sigma must be non-negative");
  }
}

TrainConfig& TrainConfig::with_method(Method method) {
  scaling.method = method;
  objective.aggregation = default_aggregation(method);
  return *this;
}

MixtureSpec TrainConfig::resolved_mixture() const {
  if (!mixture.proportions.empty()) return mixture;
  return MixtureSpec::balanced(env.domain_names(), mixture.total ? mixture.total : 4000);
}

std::map<std::string, double> evaluate(const Policy& policy, std::span<const PromptRecord> eval_records) {
  if (eval_records.empty()) throw EmptyEvalSet();
  std::map<std::string, TokenSeq> greedy;
  std::map<std::string, std::pair<std::size_t, std::size_t>> tally;  // correct, total
  for (const PromptRecord& r : eval_records) {
    auto it = greedy.find(r.key());
    if (it == greedy.end()) it = greedy.emplace(r.key(), greedy_decode(policy, r.key())).first;
    auto& [correct, total] = tally[r.domain];
    correct += static_cast<std::size_t>(em_reward(it->second, r.target));
    ++total;
  }
  std::map<std::string, double> accuracy;
  for (const auto& [domain, ct] : tally) {
    accuracy[domain] = 100.0 * static_cast<double>(ct.first) / static_cast<double>(ct.second);
  }
  return accuracy;
}

Checkpoint make_checkpoint(std::size_t batch, std::map<std::string, double> accuracy) {
  Checkpoint cp;
  cp.batch = batch;
  cp.accuracy = std::move(accuracy);
  double sum = 0.0;
  for (const auto& [domain, acc] : cp.accuracy) sum += acc;
  cp.average = cp.accuracy.empty() ? 0.0 : sum / static_cast<double>(cp.accuracy.size());
  return cp;
}

Trainer::Trainer(TrainConfig config, std::vector<PromptRecord> train, std::vector<PromptRecord> eval,
                 Policy initial)
    : config_(std::move(config)),
      train_(std::move(train)),
      eval_(std::move(eval)),
      catalog_(domain_proportions(validate_dataset(train_))),
      policy_(std::move(initial)),
      reference_(snapshot(policy_)) {
  config_.validate();
}

BatchStats Trainer::train_batch(std::span<const PromptRecord> batch, std::size_t epoch,
                                std::size_t batch_index) {
  BatchStats stats;
  if (batch.empty()) return stats;
  const FrozenPolicy old = snapshot(policy_);
  const std::size_t g = config_.group_size;

  std::vector<RolloutGroup> groups(batch.size());
  std::vector<GroupAdvantages> advantages(batch.size());
  double reward_sum = 0.0;
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const PromptRecord& prompt = batch[j];
    RngStream rng = RngStream::derive(config_.seed, epoch, batch_index, j);
    RolloutGroup& group = groups[j];
    group.prompt_id = prompt.id;
    group.key = prompt.key();
    group.domain = prompt.domain;
    group.outputs = sample_outputs(old.get(), prompt, g, rng);
    for (const TokenSeq& out : group.outputs) {
      const double r = em_reward(out, prompt.target);
      group.rewards.push_back(r);
      group.logp_old.push_back(log_prob(old.get(), prompt, out));
      group.logp_ref.push_back(log_prob(reference_.get(), prompt, out));
      reward_sum += r;
    }
    advantages[j] = compute_group_advantages(group, catalog_, config_.scaling);
    bool all_zero = true;
    for (double a : advantages[j].advantages) all_zero = all_zero && a == 0.0;
    stats.zero_signal_groups += all_zero ? 1 : 0;
  }
  stats.mean_reward = reward_sum / static_cast<double>(batch.size() * g);

  for (std::size_t step = 0; step < config_.inner_steps; ++step) {
    ObjectiveResult res = group_objective(policy_, groups, advantages, config_.objective);
    if (step == 0) stats.loss = res.loss;
    apply_gradient(policy_, res.gradient, config_.learning_rate);
  }
  return stats;
}

RunReport Trainer::run() {
  const auto start = std::chrono::steady_clock::now();
  RunReport report;
  report.summary.method = to_string(config_.scaling.method);
  report.summary.variant = to_string(config_.scaling.variant);
  report.summary.mixture = config_.resolved_mixture().label;
  report.summary.seed = config_.seed;
  report.summary.group_size = config_.group_size;

  std::size_t steps = 0;
  report.eval_table.push_back(make_checkpoint(steps, evaluate(policy_, eval_)));
  for (std::size_t epoch = 0; epoch < config_.epochs; ++epoch) {
    const std::uint64_t order_seed = RngStream::derive(config_.seed, 0x65706f6368, epoch).engine()();
    const auto batches = shuffle_batches(train_, config_.batch_size, order_seed);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const BatchStats stats = train_batch(batches[b], epoch, b);
      report.reward_curve.push_back(stats.mean_reward);
      ++steps;
      if (config_.eval_every != 0 && steps % config_.eval_every == 0) {
        report.eval_table.push_back(make_checkpoint(steps, evaluate(policy_, eval_)));
      }
    }
  }
  if (report.eval_table.back().batch != steps) {
    report.eval_table.push_back(make_checkpoint(steps, evaluate(policy_, eval_)));
  }
  report.wall_clock_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

EnvData training_data(const TrainConfig& config) {
  EnvData env = make_env(config.env);
  const MixtureSpec mixture = config.resolved_mixture();
  const std::uint64_t mix_seed = RngStream::derive(config.seed, 0x6d6978).engine()();
  return {build_mixture(env.train_pool(), mixture, mix_seed), std::move(env.eval)};
}

RunReport run_training(const TrainConfig& config, Policy* final_policy) {
  config.validate();
  EnvData data = training_data(config);
  // The policy covers every problem the eval split can ask about.
  std::vector<PromptRecord> all = data.train;
  all.insert(all.end(), data.eval.begin(), data.eval.end());
  Policy initial = init_policy(validate_dataset(all), config.init, config.seed);
  Trainer trainer(config, std::move(data.train), std::move(data.eval), std::move(initial));
  RunReport report = trainer.run();
  if (final_policy != nullptr) *final_policy = trainer.policy();
  return report;
}

TTestResult paired_t_test(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw LengthMismatch(a.size(), b.size());
  const std::size_t n = a.size();
  if (n < 2) throw InvalidConfig("paired t-test needs at least two pairs");
  std::vector<double> d(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    d[i] = a[i] - b[i];
    sum += d[i];
  }
  const double mean = sum / static_cast<double>(n);
  double ss = 0.0;
  for (double x : d) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) throw DegenerateVariance();

  TTestResult result;
  result.df = n - 1;
  result.mean_difference = mean;
  result.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  boost::math::students_t dist(static_cast<double>(result.df));
  result.p_one_tailed = boost::math::cdf(boost::math::complement(dist, result.t));
  return result;
}

std::vector<RunReport> sweep_group_size(const TrainConfig& base, std::span<const std::size_t> group_sizes) {
  std::vector<RunReport> reports;
  for (std::size_t g : group_sizes) {
    TrainConfig config = base;
    config.group_size = g;
    reports.push_back(run_training(config));
  }
  return reports;
}

}  // namespace disco
