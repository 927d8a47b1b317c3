#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <iomanip>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairdvrp/types.hpp"

namespace fairdvrp {

using Rng = std::mt19937_64;

enum class ElementKind : std::uint8_t { provider = 0, request = 1 };

struct Element {
  ElementKind kind{ElementKind::provider};
  std::int64_t id{0};

  auto operator<=>(const Element&) const = default;

  static Element of(ProviderId p) { return {ElementKind::provider, p.value}; }
  static Element of(RequestId r) { return {ElementKind::request, r.value}; }
  [[nodiscard]] bool is_provider() const { return kind == ElementKind::provider; }
};

struct Gene {
  Element element;
  double key{0.0};
};

/// Scores cached on a chromosome; utility is maximized, both fairness
/// values are variances and minimized.
struct Fitness {
  double utility{0.0};
  double provider_fairness{0.0};
  double customer_fairness{0.0};
};

/// Random-keys genome. Genes are kept in canonical element order (providers
/// by id, then requests by id); only the keys carry the solution.
struct Chromosome {
  std::vector<Gene> genes;
  std::optional<Fitness> fitness;

  [[nodiscard]] std::size_t size() const { return genes.size(); }
};

struct AllocationPlan {
  std::map<ProviderId, std::vector<RequestId>> routes;
  std::vector<RequestId> unassigned;

  bool operator==(const AllocationPlan&) const = default;
};

/// Gene positions ordered by ascending key; equal keys keep position order.
inline std::vector<std::size_t> key_order(const Chromosome& c) {
  std::vector<std::size_t> order(c.genes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return c.genes[a].key < c.genes[b].key;
  });
  return order;
}

/// If a request holds the smallest key, trade keys with the provider that
/// holds the smallest provider key. Idempotent.
inline void enforce_leader(Chromosome& c) {
  if (c.genes.empty()) return;
  std::optional<std::size_t> min_any;
  std::optional<std::size_t> min_provider;
  for (std::size_t i = 0; i < c.genes.size(); ++i) {
    const auto& g = c.genes[i];
    if (!min_any || g.key < c.genes[*min_any].key) min_any = i;
    if (g.element.is_provider() && (!min_provider || g.key < c.genes[*min_provider].key)) {
      min_provider = i;
    }
  }
  if (!min_provider) throw std::invalid_argument("enforce_leader: chromosome has no provider gene");
  const auto& leader = c.genes[*min_any];
  if (leader.element.is_provider()) return;
  if (c.genes[*min_provider].key == leader.key) {
    // equal keys sort by position, so the provider needs a strictly smaller key
    c.genes[*min_provider].key = std::nextafter(leader.key, -1.0);
  } else {
    std::swap(c.genes[*min_any].key, c.genes[*min_provider].key);
  }
  c.fitness.reset();
}

inline Chromosome enforce_leader(Chromosome&& c) {
  enforce_leader(c);
  return std::move(c);
}

/// Canonically ordered genome with i.i.d. uniform [0,1) keys.
inline Chromosome encode_random(std::span<const ProviderId> idle_providers,
                                std::span<const RequestId> pending_requests, Rng& rng) {
  if (idle_providers.empty()) throw std::invalid_argument("encode_random: no idle provider to lead");
  std::vector<ProviderId> providers(idle_providers.begin(), idle_providers.end());
  std::vector<RequestId> requests(pending_requests.begin(), pending_requests.end());
  std::sort(providers.begin(), providers.end());
  std::sort(requests.begin(), requests.end());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Chromosome c;
  c.genes.reserve(providers.size() + requests.size());
  for (auto p : providers) c.genes.push_back({Element::of(p), unit(rng)});
  for (auto r : requests) c.genes.push_back({Element::of(r), unit(rng)});
  enforce_leader(c);
  return c;
}

/// Requests following a provider in key order, up to the next provider, are
/// that provider's targets in order.
inline AllocationPlan decode(const Chromosome& c) {
  AllocationPlan plan;
  std::vector<RequestId>* current = nullptr;
  for (std::size_t pos : key_order(c)) {
    const auto& e = c.genes[pos].element;
    if (e.is_provider()) {
      current = &plan.routes[ProviderId{e.id}];
    } else if (current) {
      current->push_back(RequestId{e.id});
    } else {
      plan.unassigned.push_back(RequestId{e.id});
    }
  }
  return plan;
}

/// Decode by gene position for canonical genomes whose first
/// `provider_count` genes are the providers: segments[i] lists the
/// positions of provider i's targets in visiting order.
inline void decode_positions(const Chromosome& c, std::size_t provider_count,
                             std::vector<std::vector<std::size_t>>& segments) {
  segments.resize(provider_count);
  for (auto& s : segments) s.clear();
  std::optional<std::size_t> current;
  for (std::size_t pos : key_order(c)) {
    if (pos < provider_count) {
      current = pos;
    } else if (current) {
      segments[*current].push_back(pos);
    }
  }
}

/// One line per gene, "element_id key", ascending by key.
inline std::string debug_dump(const Chromosome& c) {
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t pos : key_order(c)) {
    const auto& g = c.genes[pos];
    os << (g.element.is_provider() ? 'P' : 'R') << g.element.id << ' ' << g.key << '\n';
  }
  return os.str();
}

/// Every element appears once and the smallest key belongs to a provider.
inline bool satisfies_invariants(const Chromosome& c) {
  if (c.genes.empty()) return false;
  std::vector<Element> elems;
  elems.reserve(c.genes.size());
  for (const auto& g : c.genes) elems.push_back(g.element);
  std::sort(elems.begin(), elems.end());
  if (std::adjacent_find(elems.begin(), elems.end()) != elems.end()) return false;
  return c.genes[key_order(c).front()].element.is_provider();
}

}  // namespace fairdvrp
