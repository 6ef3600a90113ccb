#include "disco/core.hpp"

#include <istream>
#include <ostream>

#include <json.hpp>

#include "disco/errors.hpp"

namespace disco {

DomainCatalog::DomainCatalog(std::map<std::string, std::size_t> counts) : counts_(std::move(counts)) {
  std::size_t total = 0;
  for (const auto& [domain, n] : counts_) total += n;
  if (total == 0) throw EmptyDataset();
  for (const auto& [domain, n] : counts_) {
    if (n == 0) continue;
    proportions_[domain] = static_cast<double>(n) / static_cast<double>(total);
  }
}

double DomainCatalog::proportion(const std::string& domain) const {
  auto it = proportions_.find(domain);
  if (it == proportions_.end()) throw UnknownDomain(domain);
  return it->second;
}

void RolloutGroup::validate() const {
  const std::size_t g = outputs.size();
  if (rewards.size() != g) {
    throw MismatchedGroupSizes("rewards " + std::to_string(rewards.size()) + " vs outputs " +
                               std::to_string(g));
  }
  if (logp_old.size() != g || logp_ref.size() != g) throw MissingLogProbs("group " + prompt_id);
  for (std::size_t i = 0; i < g; ++i) {
    if (logp_old[i].size() != outputs[i].size() || logp_ref[i].size() != outputs[i].size()) {
      throw MissingLogProbs("output " + std::to_string(i) + " of group " + prompt_id);
    }
    if (rewards[i] != 0.0 && rewards[i] != 1.0) {
      throw InvalidSpec("reward must be 0 or 1 in group " + prompt_id);
    }
  }
}

void ScalingConfig::validate() const {
  if (!(eps_prime > 0.0)) throw InvalidConfig("eps_prime must be positive");
}

std::string to_string(Method m) {
  switch (m) {
    case Method::naive: return "naive";
    case Method::dr_grpo: return "dr_grpo";
    case Method::disco: return "disco";
    case Method::domain_only: return "domain_only";
    case Method::diff_only: return "diff_only";
  }
  return "unknown";
}

std::string to_string(WeightVariant v) {
  switch (v) {
    case WeightVariant::v1_log: return "v1";
    case WeightVariant::v2_log_squared: return "v2";
    case WeightVariant::v3_inverse: return "v3";
  }
  return "unknown";
}

Method parse_method(const std::string& name) {
  if (name == "naive") return Method::naive;
  if (name == "dr_grpo") return Method::dr_grpo;
  if (name == "disco") return Method::disco;
  if (name == "domain_only") return Method::domain_only;
  if (name == "diff_only") return Method::diff_only;
  throw InvalidConfig("unknown method '" + name + "'");
}

WeightVariant parse_variant(const std::string& name) {
  if (name == "v1" || name == "log") return WeightVariant::v1_log;
  if (name == "v2" || name == "log_squared") return WeightVariant::v2_log_squared;
  if (name == "v3" || name == "inverse") return WeightVariant::v3_inverse;
  throw InvalidConfig("unknown weight variant '" + name + "'");
}

DatasetSummary validate_dataset(std::span<const PromptRecord> records) {
  if (records.empty()) throw EmptyDataset();
  DatasetSummary summary;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PromptRecord& r = records[i];
    if (r.id.empty()) throw MalformedRecord(i, "empty id");
    if (r.domain.empty()) throw MalformedRecord(i, "empty domain label");
    if (r.target.empty()) throw MalformedRecord(i, "empty target");
    if (r.vocab < 2) throw MalformedRecord(i, "vocabulary size must be at least 2");
    for (Token t : r.target) {
      if (t >= r.vocab) {
        throw MalformedRecord(i, "target token " + std::to_string(t) + " >= vocab " +
                                     std::to_string(r.vocab));
      }
    }
    const TableShape shape{r.target.size(), r.vocab};
    auto [it, inserted] = summary.shapes.emplace(r.key(), shape);
    if (!inserted && it->second != shape) {
      throw MalformedRecord(i, "context '" + r.key() + "' used with two different shapes");
    }
    ++summary.counts[r.domain];
    ++summary.total;
  }
  return summary;
}

DomainCatalog domain_proportions(const DatasetSummary& summary) {
  if (summary.total == 0) throw EmptyDataset();
  return DomainCatalog(summary.counts);
}

std::vector<PromptRecord> read_dataset(std::istream& in) {
  std::vector<PromptRecord> records;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::size_t index = records.size();
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw MalformedRecord(index, e.what());
    }
    try {
      PromptRecord r;
      r.id = j.at("id").get<std::string>();
      r.domain = j.at("domain").get<std::string>();
      r.target = j.at("target").get<TokenSeq>();
      r.vocab = j.at("vocab").get<std::uint32_t>();
      if (j.contains("context")) r.context = j.at("context").get<std::string>();
      records.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      throw MalformedRecord(index, e.what());
    }
  }
  return records;
}

void write_dataset(std::ostream& out, std::span<const PromptRecord> records) {
  for (const PromptRecord& r : records) {
    nlohmann::json j = {{"id", r.id}, {"domain", r.domain}, {"target", r.target}, {"vocab", r.vocab}};
    if (!r.context.empty()) j["context"] = r.context;
    out << j.dump() << '\n';
  }
}

}  // namespace disco
