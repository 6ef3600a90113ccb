#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "disco/core.hpp"

namespace disco {

/// One synthetic task domain. Every prompt is an instance of one of `contexts`
/// problems, each with a fixed uniformly random answer of `length` tokens over
/// `vocab` symbols. `contexts == 0` gives every prompt its own problem.
struct DomainSpec {
  std::string name;
  std::size_t prompt_count = 0;
  std::uint32_t vocab = 2;
  std::size_t length = 1;
  std::size_t contexts = 0;
};

struct EnvSpec {
  std::vector<DomainSpec> domains;
  std::uint64_t seed = 17;

  /// Throws InvalidSpec.
  void validate() const;
  std::vector<std::string> domain_names() const;

  /// Four domains standing in for math / NQ / ARC / IMDB; imdb is the easy one.
  static EnvSpec default_four_domain(std::uint64_t seed = 17);
};

struct EnvData {
  std::vector<PromptRecord> train;
  std::vector<PromptRecord> eval;

  /// Training records grouped by domain, in generation order.
  std::map<std::string, std::vector<PromptRecord>> train_pool() const;
};

/// Deterministic in the spec. Per domain, the first 80% of generated prompts
/// (by index) go to train and the rest to eval.
EnvData make_env(const EnvSpec& spec);

/// 1 iff the sequences are identical. Throws LengthMismatch.
int em_reward(std::span<const Token> output, std::span<const Token> target);

/// Chance exact-match rate of a uniform policy: vocab^-length.
double uniform_em_rate(std::uint32_t vocab, std::size_t length);

}  // namespace disco
