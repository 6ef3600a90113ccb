#include "disco/env.hpp"

#include <cmath>
#include <cstdio>
#include <set>

#include "disco/errors.hpp"
#include "disco/policy.hpp"

namespace disco {

namespace {

std::string padded(std::size_t i, int width) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%0*zu", width, i);
  return buf;
}

TokenSeq random_answer(RngStream& rng, std::uint32_t vocab, std::size_t length) {
  TokenSeq out(length);
  for (auto& t : out) t = static_cast<Token>(rng.engine()() % vocab);
  return out;
}

}  // namespace

void EnvSpec::validate() const {
  if (domains.empty()) throw InvalidSpec("no domains");
  std::set<std::string> names;
  for (const auto& d : domains) {
    if (d.name.empty()) throw InvalidSpec("empty domain name");
    if (!names.insert(d.name).second) throw InvalidSpec("duplicate domain '" + d.name + "'");
    if (d.vocab < 2) throw InvalidSpec("domain '" + d.name + "': vocab must be >= 2");
    if (d.length < 1) throw InvalidSpec("domain '" + d.name + "': length must be >= 1");
    if (d.prompt_count < 1) throw InvalidSpec("domain '" + d.name + "': prompt_count must be >= 1");
  }
}

std::vector<std::string> EnvSpec::domain_names() const {
  std::vector<std::string> names;
  for (const auto& d : domains) names.push_back(d.name);
  return names;
}

EnvSpec EnvSpec::default_four_domain(std::uint64_t seed) {
  EnvSpec spec;
  spec.seed = seed;
  spec.domains = {
      {"math", 5000, 4, 2, 200},
      {"nq", 5000, 8, 1, 200},
      {"arc", 5000, 4, 1, 200},
      {"imdb", 5000, 2, 1, 200},
  };
  return spec;
}

std::map<std::string, std::vector<PromptRecord>> EnvData::train_pool() const {
  std::map<std::string, std::vector<PromptRecord>> pool;
  for (const auto& r : train) pool[r.domain].push_back(r);
  return pool;
}

EnvData make_env(const EnvSpec& spec) {
  spec.validate();
  EnvData data;
  for (std::size_t di = 0; di < spec.domains.size(); ++di) {
    const DomainSpec& d = spec.domains[di];
    RngStream rng = RngStream::derive(spec.seed, 0x656e76 /* "env" */, di);

    std::vector<TokenSeq> answers;
    for (std::size_t c = 0; c < d.contexts; ++c) answers.push_back(random_answer(rng, d.vocab, d.length));

    const std::size_t n_train = d.prompt_count * 4 / 5;
    for (std::size_t i = 0; i < d.prompt_count; ++i) {
      PromptRecord r;
      r.id = d.name + "-" + padded(i, 5);
      r.domain = d.name;
      r.vocab = d.vocab;
      if (d.contexts == 0) {
        r.target = random_answer(rng, d.vocab, d.length);
      } else {
        const std::size_t c = static_cast<std::size_t>(rng.engine()() % d.contexts);
        r.context = d.name + "/c" + padded(c, 4);
        r.target = answers[c];
      }
      (i < n_train ? data.train : data.eval).push_back(std::move(r));
    }
  }
  return data;
}

int em_reward(std::span<const Token> output, std::span<const Token> target) {
  if (output.size() != target.size()) throw LengthMismatch(output.size(), target.size());
  for (std::size_t i = 0; i < output.size(); ++i) {
    if (output[i] != target[i]) return 0;
  }
  return 1;
}

double uniform_em_rate(std::uint32_t vocab, std::size_t length) {
  return std::pow(static_cast<double>(vocab), -static_cast<double>(length));
}

}  // namespace disco
