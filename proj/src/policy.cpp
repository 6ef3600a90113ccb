#include "disco/policy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>

#include <json.hpp>

#include "disco/errors.hpp"

namespace disco {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RngStream RngStream::derive(std::uint64_t seed, std::uint64_t k1, std::uint64_t k2, std::uint64_t k3) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ k1);
  h = splitmix64(h ^ k2);
  h = splitmix64(h ^ k3);
  return RngStream(h);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(logits.size());
  for (std::size_t v = 0; v < logits.size(); ++v) out[v] = logits[v] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out = log_softmax(logits);
  for (double& x : out) x = std::exp(x);
  return out;
}

void Policy::add_table(const std::string& key, LogitTable table) {
  for (double x : table.data()) {
    if (!std::isfinite(x)) throw InvalidSpec("non-finite logit for '" + key + "'");
  }
  tables_.insert_or_assign(key, std::move(table));
}

const LogitTable& Policy::table(const std::string& key) const {
  auto it = tables_.find(key);
  if (it == tables_.end()) throw UnknownPrompt(key);
  return it->second;
}

LogitTable& Policy::table(const std::string& key) {
  auto it = tables_.find(key);
  if (it == tables_.end()) throw UnknownPrompt(key);
  return it->second;
}

Policy init_policy(const DatasetSummary& summary, PolicyInit init, std::uint64_t seed) {
  Policy policy;
  RngStream rng = RngStream::derive(seed, 0x696e6974 /* "init" */);
  std::normal_distribution<double> normal(0.0, init.sigma);
  for (const auto& [key, shape] : summary.shapes) {
    LogitTable table(shape);
    if (init.kind == PolicyInit::Kind::seeded_gaussian && init.sigma > 0.0) {
      for (double& x : table.data()) x = normal(rng.engine());
    }
    policy.add_table(key, std::move(table));
  }
  return policy;
}

std::vector<TokenSeq> sample_outputs(const Policy& policy, const PromptRecord& prompt,
                                     std::size_t group_size, RngStream& rng) {
  const LogitTable& table = policy.table(prompt.key());
  std::vector<std::vector<double>> probs(table.rows());
  for (std::size_t t = 0; t < table.rows(); ++t) probs[t] = softmax(table.row(t));

  std::vector<TokenSeq> outputs(group_size, TokenSeq(table.rows()));
  for (auto& out : outputs) {
    for (std::size_t t = 0; t < table.rows(); ++t) {
      const double u = rng.uniform();
      const auto& p = probs[t];
      double cum = 0.0;
      std::size_t chosen = p.size();
      std::size_t last_nonzero = 0;
      for (std::size_t v = 0; v < p.size(); ++v) {
        if (p[v] > 0.0) last_nonzero = v;
        cum += p[v];
        if (u < cum) {
          chosen = v;
          break;
        }
      }
      // Rounding can leave the cumulative sum a hair below one.
      out[t] = static_cast<Token>(chosen < p.size() ? chosen : last_nonzero);
    }
  }
  return outputs;
}

std::vector<double> log_prob(const Policy& policy, const std::string& key,
                             std::span<const Token> output) {
  const LogitTable& table = policy.table(key);
  if (output.size() != table.rows()) throw LengthMismatch(output.size(), table.rows());
  std::vector<double> out(output.size());
  for (std::size_t t = 0; t < output.size(); ++t) {
    if (output[t] >= table.cols()) throw TokenOutOfRange(output[t], table.cols());
    out[t] = log_softmax(table.row(t))[output[t]];
  }
  return out;
}

std::vector<double> log_prob(const Policy& policy, const PromptRecord& prompt,
                             std::span<const Token> output) {
  return log_prob(policy, prompt.key(), output);
}

FrozenPolicy snapshot(const Policy& policy) { return FrozenPolicy(policy); }

FrozenPolicy snapshot(const FrozenPolicy& frozen) { return frozen; }

void apply_gradient(Policy& policy, const PolicyGradient& gradient, double learning_rate) {
  for (const auto& [key, grad] : gradient) {
    if (!policy.contains(key)) throw ShapeMismatch("gradient for unknown key '" + key + "'");
    if (policy.table(key).shape() != grad.shape()) throw ShapeMismatch("table '" + key + "'");
  }
  for (const auto& [key, grad] : gradient) {
    auto& logits = policy.table(key).data();
    const auto& g = grad.data();
    for (std::size_t i = 0; i < logits.size(); ++i) logits[i] -= learning_rate * g[i];
  }
  policy.bump_version();
}

TokenSeq greedy_decode(const Policy& policy, const std::string& key) {
  const LogitTable& table = policy.table(key);
  TokenSeq out(table.rows());
  for (std::size_t t = 0; t < table.rows(); ++t) {
    auto row = table.row(t);
    // max_element returns the first maximum: lowest index wins ties.
    out[t] = static_cast<Token>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

void write_policy(std::ostream& out, const Policy& policy) {
  nlohmann::json tables = nlohmann::json::object();
  for (const auto& [key, table] : policy.tables()) {
    tables[key] = {{"length", table.rows()}, {"vocab", table.cols()}, {"logits", table.data()}};
  }
  nlohmann::json j = {{"version", policy.version()}, {"tables", std::move(tables)}};
  out << j.dump() << '\n';
}

Policy read_policy(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in);
  Policy policy;
  for (const auto& [key, t] : j.at("tables").items()) {
    TableShape shape{t.at("length").get<std::size_t>(), t.at("vocab").get<std::uint32_t>()};
    LogitTable table(shape);
    auto logits = t.at("logits").get<std::vector<double>>();
    if (logits.size() != table.data().size()) throw ShapeMismatch("checkpoint table '" + key + "'");
    table.data() = std::move(logits);
    policy.add_table(key, std::move(table));
  }
  policy.set_version(j.at("version").get<std::uint64_t>());
  return policy;
}

}  // namespace disco
