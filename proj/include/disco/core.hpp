#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace disco {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

/// One training or evaluation prompt.
///
/// `context` names the problem the prompt is an instance of; the policy keeps
/// one logit table per context. When empty, the prompt is its own context.
struct PromptRecord {
  std::string id;
  std::string domain;
  TokenSeq target;
  std::uint32_t vocab = 0;
  std::string context;

  const std::string& key() const { return context.empty() ? id : context; }

  bool operator==(const PromptRecord&) const = default;
};

/// Shape of one logit table: answer length x vocabulary size.
struct TableShape {
  std::size_t length = 0;
  std::uint32_t vocab = 0;

  bool operator==(const TableShape&) const = default;
};

struct DatasetSummary {
  std::map<std::string, std::size_t> counts;
  std::size_t total = 0;
  std::map<std::string, TableShape> shapes;  // context key -> table shape
};

/// Per-domain prompt counts N_d and proportions p_d = N_d / sum N.
class DomainCatalog {
 public:
  DomainCatalog() = default;
  explicit DomainCatalog(std::map<std::string, std::size_t> counts);

  const std::map<std::string, std::size_t>& counts() const { return counts_; }
  const std::map<std::string, double>& proportions() const { return proportions_; }

  /// Throws UnknownDomain.
  double proportion(const std::string& domain) const;
  bool contains(const std::string& domain) const { return proportions_.count(domain) != 0; }

 private:
  std::map<std::string, std::size_t> counts_;
  std::map<std::string, double> proportions_;
};

/// G sampled outputs for one prompt together with their raw EM rewards and the
/// per-token log-probabilities under the rollout and reference policies.
/// Log-probabilities under the live policy are recomputed by the objective.
struct RolloutGroup {
  std::string prompt_id;
  std::string key;
  std::string domain;
  std::vector<TokenSeq> outputs;
  std::vector<double> rewards;
  std::vector<std::vector<double>> logp_old;
  std::vector<std::vector<double>> logp_ref;

  std::size_t size() const { return outputs.size(); }
  /// Throws MismatchedGroupSizes / MissingLogProbs / InvalidSpec on a broken group.
  void validate() const;
};

enum class Method { naive, dr_grpo, disco, domain_only, diff_only };
enum class WeightVariant { v1_log, v2_log_squared, v3_inverse };

struct ScalingConfig {
  Method method = Method::disco;
  WeightVariant variant = WeightVariant::v1_log;
  double eps_prime = 1e-6;

  void validate() const;
};

std::string to_string(Method m);
std::string to_string(WeightVariant v);
Method parse_method(const std::string& name);
WeightVariant parse_variant(const std::string& name);

/// Throws EmptyDataset or MalformedRecord(index, reason).
DatasetSummary validate_dataset(std::span<const PromptRecord> records);

/// Throws EmptyDataset.
DomainCatalog domain_proportions(const DatasetSummary& summary);

/// Line-delimited JSON dataset: {"id", "domain", "target", "vocab"[, "context"]}.
std::vector<PromptRecord> read_dataset(std::istream& in);
void write_dataset(std::ostream& out, std::span<const PromptRecord> records);

}  // namespace disco
