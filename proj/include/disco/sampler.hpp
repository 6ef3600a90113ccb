#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "disco/core.hpp"

namespace disco {

/// Target domain fractions for a training mixture. Domain order is canonical:
/// it decides who receives rounding residue.
struct MixtureSpec {
  std::size_t total = 0;
  std::vector<std::pair<std::string, double>> proportions;
  std::string label;

  /// Throws InvalidSpec unless fractions are non-negative and sum to 1 within 1e-9.
  void validate() const;

  /// Largest-remainder allocation of `total`; ties go to the later domain.
  std::vector<std::pair<std::string, std::size_t>> counts() const;

  static MixtureSpec balanced(const std::vector<std::string>& domains, std::size_t total);
  /// `fraction` to `heavy_domain`, the rest split equally among the others.
  static MixtureSpec heavy(const std::vector<std::string>& domains, const std::string& heavy_domain,
                           std::size_t total, double fraction = 0.75);
  /// "balanced" or "heavy:<domain>".
  static MixtureSpec preset(const std::string& name, const std::vector<std::string>& domains,
                            std::size_t total);
};

/// Samples the allocated count from each domain pool without replacement and
/// shuffles the result. Throws InsufficientPool.
std::vector<PromptRecord> build_mixture(const std::map<std::string, std::vector<PromptRecord>>& pool,
                                        const MixtureSpec& spec, std::uint64_t seed);

/// Seeded permutation cut into contiguous batches; the last one may be short.
std::vector<std::vector<PromptRecord>> shuffle_batches(std::span<const PromptRecord> dataset,
                                                       std::size_t batch_size, std::uint64_t seed);

}  // namespace disco
