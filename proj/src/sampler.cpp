#include "disco/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "disco/errors.hpp"
#include "disco/policy.hpp"

namespace disco {

void MixtureSpec::validate() const {
  if (proportions.empty()) throw InvalidSpec("mixture has no domains");
  double sum = 0.0;
  for (const auto& [domain, f] : proportions) {
    if (!(f >= 0.0)) throw InvalidSpec("negative fraction for '" + domain + "'");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidSpec("mixture fractions sum to " + std::to_string(sum));
}

std::vector<std::pair<std::string, std::size_t>> MixtureSpec::counts() const {
  validate();
  const std::size_t n = proportions.size();
  std::vector<std::pair<std::string, std::size_t>> out(n);
  std::vector<double> remainder(n);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double exact = proportions[i].second * static_cast<double>(total);
    // Guard against 2999.9999999 style representation error.
    const double floor = std::floor(exact + 1e-9);
    out[i] = {proportions[i].first, static_cast<std::size_t>(floor)};
    remainder[i] = std::max(0.0, exact - floor);
    assigned += out[i].second;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (std::abs(remainder[a] - remainder[b]) > 1e-9) return remainder[a] > remainder[b];
    return a > b;
  });
  for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++out[order[k % n]].second;
  return out;
}

MixtureSpec MixtureSpec::balanced(const std::vector<std::string>& domains, std::size_t total) {
  MixtureSpec spec;
  spec.total = total;
  spec.label = "balanced";
  for (const auto& d : domains) spec.proportions.emplace_back(d, 1.0 / static_cast<double>(domains.size()));
  return spec;
}

MixtureSpec MixtureSpec::heavy(const std::vector<std::string>& domains, const std::string& heavy_domain,
                               std::size_t total, double fraction) {
  if (std::find(domains.begin(), domains.end(), heavy_domain) == domains.end()) {
    throw InvalidSpec("heavy domain '" + heavy_domain + "' is not a known domain");
  }
  if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidSpec("heavy fraction must lie in (0, 1]");
  MixtureSpec spec;
  spec.total = total;
  spec.label = "heavy_" + heavy_domain;
  const double rest = domains.size() > 1 ? (1.0 - fraction) / static_cast<double>(domains.size() - 1) : 0.0;
  for (const auto& d : domains) spec.proportions.emplace_back(d, d == heavy_domain ? fraction : rest);
  return spec;
}

MixtureSpec MixtureSpec::preset(const std::string& name, const std::vector<std::string>& domains,
                                std::size_t total) {
  if (name == "balanced") return balanced(domains, total);
  const std::string prefix = "heavy:";
  if (name.rfind(prefix, 0) == 0) return heavy(domains, name.substr(prefix.size()), total);
  throw InvalidSpec("unknown mixture preset '" + name + "'");
}

namespace {

template <typename T>
void seeded_shuffle(std::vector<T>& items, RngStream& rng) {
  // Fisher-Yates with our own uniform draw so the order is library-independent.
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.uniform() * static_cast<double>(i));
    std::swap(items[i - 1], items[std::min(j, i - 1)]);
  }
}

}  // namespace

std::vector<PromptRecord> build_mixture(const std::map<std::string, std::vector<PromptRecord>>& pool,
                                        const MixtureSpec& spec, std::uint64_t seed) {
  std::vector<PromptRecord> out;
  const auto counts = spec.counts();
  for (std::size_t di = 0; di < counts.size(); ++di) {
    const auto& [domain, need] = counts[di];
    if (need == 0) continue;
    auto it = pool.find(domain);
    const std::size_t have = it == pool.end() ? 0 : it->second.size();
    if (have < need) throw InsufficientPool(domain, have, need);
    std::vector<std::size_t> idx(have);
    std::iota(idx.begin(), idx.end(), 0);
    RngStream rng = RngStream::derive(seed, 0x6d6978 /* "mix" */, di);
    seeded_shuffle(idx, rng);
    for (std::size_t k = 0; k < need; ++k) out.push_back(it->second[idx[k]]);
  }
  RngStream rng = RngStream::derive(seed, 0x6d6978, 0xffff);
  seeded_shuffle(out, rng);
  return out;
}

std::vector<std::vector<PromptRecord>> shuffle_batches(std::span<const PromptRecord> dataset,
                                                       std::size_t batch_size, std::uint64_t seed) {
  if (batch_size < 1) throw InvalidConfig("batch_size must be >= 1");
  std::vector<std::size_t> idx(dataset.size());
  std::iota(idx.begin(), idx.end(), 0);
  RngStream rng = RngStream::derive(seed, 0x626174 /* "bat" */);
  seeded_shuffle(idx, rng);
  std::vector<std::vector<PromptRecord>> batches;
  for (std::size_t start = 0; start < idx.size(); start += batch_size) {
    const std::size_t end = std::min(idx.size(), start + batch_size);
    auto& batch = batches.emplace_back();
    batch.reserve(end - start);
    for (std::size_t k = start; k < end; ++k) batch.push_back(dataset[idx[k]]);
  }
  return batches;
}

}  // namespace disco
