#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "disco/core.hpp"

namespace disco {

/// Row-major (answer position x vocabulary) matrix of logits or gradients.
class LogitTable {
 public:
  LogitTable() = default;
  explicit LogitTable(TableShape shape, double fill = 0.0)
      : shape_(shape), data_(shape.length * shape.vocab, fill) {}

  const TableShape& shape() const { return shape_; }
  std::size_t rows() const { return shape_.length; }
  std::size_t cols() const { return shape_.vocab; }

  double& operator()(std::size_t row, std::size_t col) { return data_[row * cols() + col]; }
  double operator()(std::size_t row, std::size_t col) const { return data_[row * cols() + col]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols(), cols()}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols(), cols()}; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const LogitTable&) const = default;

 private:
  TableShape shape_;
  std::vector<double> data_;
};

/// Sparse gradient: one table per touched context key.
using PolicyGradient = std::map<std::string, LogitTable>;

/// Counter-based random stream; identical keys give identical draws.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  /// Stream keyed by (seed, k1, k2, k3), e.g. (seed, epoch, batch, group).
  static RngStream derive(std::uint64_t seed, std::uint64_t k1 = 0, std::uint64_t k2 = 0,
                          std::uint64_t k3 = 0);

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// Log-softmax over one row of logits, with max subtraction.
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

/// Tabular categorical policy: one (length x vocab) logit table per context key.
class Policy {
 public:
  Policy() = default;

  void add_table(const std::string& key, LogitTable table);
  bool contains(const std::string& key) const { return tables_.count(key) != 0; }
  /// Throws UnknownPrompt.
  const LogitTable& table(const std::string& key) const;
  LogitTable& table(const std::string& key);
  const std::map<std::string, LogitTable>& tables() const { return tables_; }

  std::uint64_t version() const { return version_; }
  void set_version(std::uint64_t v) { version_ = v; }
  void bump_version() { ++version_; }

  bool operator==(const Policy&) const = default;

 private:
  std::map<std::string, LogitTable> tables_;
  std::uint64_t version_ = 0;
};

/// Immutable deep copy of a policy (pi_old, pi_ref).
class FrozenPolicy {
 public:
  explicit FrozenPolicy(const Policy& source) : policy_(std::make_shared<const Policy>(source)) {}

  const Policy& get() const { return *policy_; }
  std::uint64_t version() const { return policy_->version(); }

 private:
  std::shared_ptr<const Policy> policy_;
};

struct PolicyInit {
  enum class Kind { uniform, seeded_gaussian };
  Kind kind = Kind::uniform;
  double sigma = 0.0;

  static PolicyInit uniform() { return {}; }
  static PolicyInit seeded_gaussian(double sigma) { return {Kind::seeded_gaussian, sigma}; }
};

/// One table per context key in the summary. Uniform init gives all-zero logits;
/// seeded_gaussian draws i.i.d. N(0, sigma^2) logits in key order.
Policy init_policy(const DatasetSummary& summary, PolicyInit init, std::uint64_t seed);

/// Draws G answers position-independently from the prompt's categoricals.
/// Throws UnknownPrompt.
std::vector<TokenSeq> sample_outputs(const Policy& policy, const PromptRecord& prompt,
                                     std::size_t group_size, RngStream& rng);

/// Per-token log-probabilities of `output`. Throws UnknownPrompt,
/// LengthMismatch, TokenOutOfRange.
std::vector<double> log_prob(const Policy& policy, const PromptRecord& prompt,
                             std::span<const Token> output);
std::vector<double> log_prob(const Policy& policy, const std::string& key,
                             std::span<const Token> output);

FrozenPolicy snapshot(const Policy& policy);
FrozenPolicy snapshot(const FrozenPolicy& frozen);

/// logits <- logits - lr * gradient for every key in the gradient; bumps the
/// version. Throws ShapeMismatch (also for keys the policy does not hold).
void apply_gradient(Policy& policy, const PolicyGradient& gradient, double learning_rate);

/// Greedy answer: argmax per position, ties to the lowest token index.
TokenSeq greedy_decode(const Policy& policy, const std::string& key);

/// Checkpoint JSON: {"version": n, "tables": {key: {"length", "vocab", "logits": [...]}}}.
void write_policy(std::ostream& out, const Policy& policy);
Policy read_policy(std::istream& in);

}  // namespace disco
