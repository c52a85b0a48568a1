#include <fkws/errors.hpp>
#include <fkws/train.hpp>

#include <algorithm>
#include <numeric>
#include <random>

namespace fkws {
namespace {

void shuffle(std::vector<std::size_t>& v, std::mt19937_64& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(v[i - 1], v[pick(rng)]);
  }
}

}  // namespace

std::vector<std::vector<std::size_t>> make_batches(std::span<const DomainTag> domains, std::size_t batch,
                                                   std::span<const DomainTag> needs, std::uint64_t seed) {
  if (batch == 0) throw ConfigError("batch size must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> out;
  const std::size_t n = domains.size();

  if (needs.empty()) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order, rng);
    for (std::size_t at = 0; at < n; at += batch)
      out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(at),
                       order.begin() + static_cast<std::ptrdiff_t>(std::min(n, at + batch)));
    return out;
  }

  std::array<std::vector<std::size_t>, kNumDomains> by_domain;
  for (std::size_t i = 0; i < n; ++i) by_domain[index_of(domains[i])].push_back(i);
  std::size_t count = (n + batch - 1) / batch;
  for (DomainTag d : needs) {
    const std::size_t have = by_domain[index_of(d)].size();
    if (have < 2)
      throw ConfigError("stratified batching needs >= 2 windows of domain " + std::string(to_string(d)) + ", have " +
                        std::to_string(have));
    count = std::min(count, have / 2);
  }

  out.assign(count, {});
  std::size_t slot = 0;
  for (auto& list : by_domain) {
    shuffle(list, rng);
    for (std::size_t i : list) {
      out[slot].push_back(i);
      slot = (slot + 1) % count;
    }
  }
  for (auto& b : out) shuffle(b, rng);
  return out;
}

std::vector<std::vector<std::size_t>> make_batches(std::span<const TrainingWindow> windows, std::size_t batch,
                                                   std::span<const DomainTag> needs, std::uint64_t seed) {
  std::vector<DomainTag> domains;
  domains.reserve(windows.size());
  for (const TrainingWindow& w : windows) domains.push_back(w.domain);
  return make_batches(domains, batch, needs, seed);
}

}  // namespace fkws
