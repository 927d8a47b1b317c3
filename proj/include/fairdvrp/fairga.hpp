#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "fairdvrp/encoding.hpp"
#include "fairdvrp/planning.hpp"

namespace fairdvrp {

struct GAConfig {
  double elitist_rate{0.2};
  double cross_rate{0.3};
  double mutate_rate{0.2};
  double local_rate{0.5};
  int population_size{100};
  int max_gen{300};
  int local_window{5};
  std::uint64_t seed{1};

  // stage switches used by the ablation variants and the plain GA
  bool provider_stage{true};
  bool customer_stage{true};
  bool weighted_sum{false};  // single fitness U - F_customer - F_provider

  bool local_rate_raw_comparison{false};  // apply local search when uniform > local_rate
  bool immigration{false};                // replace the worst instead of swap-mutating them
  bool warm_start{true};

  void validate() const {
    for (double r : {elitist_rate, cross_rate, mutate_rate, local_rate}) {
      if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument("GA rates must lie in [0,1]");
    }
    if (population_size < 2) throw std::invalid_argument("population_size must be >= 2");
    if (max_gen < 1) throw std::invalid_argument("max_gen must be >= 1");
    if (local_window < 1) throw std::invalid_argument("local_window must be >= 1");
  }
};

inline void to_json(nlohmann::json& j, const GAConfig& c) {
  j = nlohmann::json{{"elitist_rate", c.elitist_rate},
                     {"cross_rate", c.cross_rate},
                     {"mutate_rate", c.mutate_rate},
                     {"local_rate", c.local_rate},
                     {"population_size", c.population_size},
                     {"max_gen", c.max_gen},
                     {"local_window", c.local_window},
                     {"seed", c.seed},
                     {"provider_stage", c.provider_stage},
                     {"customer_stage", c.customer_stage},
                     {"weighted_sum", c.weighted_sum},
                     {"local_rate_raw_comparison", c.local_rate_raw_comparison},
                     {"immigration", c.immigration},
                     {"warm_start", c.warm_start}};
}

/// Missing keys keep their defaults.
inline void from_json(const nlohmann::json& j, GAConfig& c) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("elitist_rate", c.elitist_rate);
  get("cross_rate", c.cross_rate);
  get("mutate_rate", c.mutate_rate);
  get("local_rate", c.local_rate);
  get("population_size", c.population_size);
  get("max_gen", c.max_gen);
  get("local_window", c.local_window);
  get("seed", c.seed);
  get("provider_stage", c.provider_stage);
  get("customer_stage", c.customer_stage);
  get("weighted_sum", c.weighted_sum);
  get("local_rate_raw_comparison", c.local_rate_raw_comparison);
  get("immigration", c.immigration);
  get("warm_start", c.warm_start);
  c.validate();
}

inline GAConfig load_ga_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open GA config " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  if (j.contains("ga")) j = j.at("ga");
  return j.get<GAConfig>();
}

enum class Criterion { utility, provider_fairness, customer_fairness, weighted };

/// Higher is better for every criterion.
inline double criterion_score(const Fitness& f, Criterion c) {
  switch (c) {
    case Criterion::utility: return f.utility;
    case Criterion::provider_fairness: return -f.provider_fairness;
    case Criterion::customer_fairness: return -f.customer_fairness;
    case Criterion::weighted: return f.utility - f.customer_fairness - f.provider_fairness;
  }
  return 0.0;
}

inline void ensure_fitness(Chromosome& c, const FitnessModel& model) {
  if (!c.fitness) c.fitness = model.evaluate(c);
}

/// Stable descending sort by criterion score (variances ascend).
inline void rank(std::vector<Chromosome>& population, Criterion criterion,
                 const FitnessModel& model) {
  for (auto& c : population) ensure_fitness(c, model);
  std::stable_sort(population.begin(), population.end(),
                   [criterion](const Chromosome& a, const Chromosome& b) {
                     return criterion_score(*a.fitness, criterion) >
                            criterion_score(*b.fitness, criterion);
                   });
}

enum class FairnessType { provider, customer };

namespace detail {

/// Population variance maintained through running sums so one entry can be
/// perturbed hypothetically in O(1).
class RunningVariance {
 public:
  explicit RunningVariance(std::vector<double> values) : values_(std::move(values)) {
    for (double v : values_) {
      sum_ += v;
      sum_sq_ += v * v;
    }
  }

  [[nodiscard]] bool empty() const { return values_.empty(); }

  [[nodiscard]] double variance() const { return with(0, 0.0); }

  [[nodiscard]] double with(std::size_t i, double delta) const {
    if (values_.empty()) return 0.0;
    const double n = static_cast<double>(values_.size());
    const double x = values_[i];
    const double s = sum_ + delta;
    const double q = sum_sq_ - x * x + (x + delta) * (x + delta);
    return std::max(0.0, q / n - (s / n) * (s / n));
  }

  void add(std::size_t i, double delta) {
    const double x = values_[i];
    sum_ += delta;
    sum_sq_ += (x + delta) * (x + delta) - x * x;
    values_[i] = x + delta;
  }

 private:
  std::vector<double> values_;
  double sum_{0.0};
  double sum_sq_{0.0};
};

inline void move_to_front(Chromosome& c, std::size_t provider_pos, std::size_t first_pos,
                          std::size_t candidate_pos) {
  if (candidate_pos == first_pos) return;
  const double lo = c.genes[provider_pos].key;
  const double hi = c.genes[first_pos].key;
  const double mid = lo + (hi - lo) / 2.0;
  if (lo < mid && mid < hi) {
    c.genes[candidate_pos].key = mid;
  } else {
    std::swap(c.genes[candidate_pos].key, c.genes[first_pos].key);
  }
  c.fitness.reset();
}

}  // namespace detail

/// For each idle provider in genome order, hypothetically hands it one of
/// its candidate requests as the next completed target and keeps the
/// candidate that lowers the chosen fairness variance the most, keyed to the
/// front of the provider's segment. Hypotheses accumulate across providers.
/// A provider whose every candidate would raise the variance is left alone.
inline void assign_provider(Chromosome& c, FairnessType type, const FitnessModel& model) {
  const auto& ctx = model.context();
  const std::size_t p = model.provider_count();
  if (model.request_count() == 0) return;
  std::vector<std::vector<std::size_t>> segments;
  decode_positions(c, p, segments);

  // value vector whose variance is the fairness measure, and where a
  // request's hypothetical completion lands in it
  std::vector<double> values;
  std::vector<std::ptrdiff_t> area_slot(ctx.areas.size(), -1);
  std::vector<double> area_scale(ctx.areas.size(), 0.0);
  if (type == FairnessType::provider) {
    for (const auto& ps : ctx.providers) values.push_back(ps.ledger);
  } else {
    std::vector<double> pending(ctx.areas.size(), 0.0);
    std::vector<double> pending_wait(ctx.areas.size(), 0.0);
    for (const auto& r : ctx.pending) {
      const auto a = static_cast<std::size_t>(r.area);
      pending[a] += 1.0;
      pending_wait[a] += static_cast<double>(ctx.now) - r.window_start + ctx.unassigned_wait_penalty;
    }
    for (std::size_t a = 0; a < ctx.areas.size(); ++a) {
      const auto& ledger = ctx.areas[a];
      const double den = model.ride() ? ledger.wait_count + pending[a] : ledger.raised;
      if (den <= 0.0) continue;
      area_slot[a] = static_cast<std::ptrdiff_t>(values.size());
      area_scale[a] = 1.0 / den;
      values.push_back(model.ride() ? (ledger.wait_sum + pending_wait[a]) / den
                                    : ledger.captured / den);
    }
  }
  detail::RunningVariance var(std::move(values));
  if (var.empty()) return;

  for (std::size_t i = 0; i < p; ++i) {
    const auto& seg = segments[i];
    if (seg.empty()) continue;
    double best = var.variance();
    std::optional<std::size_t> chosen;
    std::size_t slot = 0;
    double chosen_delta = 0.0;
    for (std::size_t pos : seg) {
      const std::size_t j = pos - p;
      const double first_leg = model.travel(i, j);
      double delta = 0.0;
      std::size_t target = 0;
      if (type == FairnessType::provider) {
        delta = model.award(i, j, first_leg);
        target = model.all_index(i);
      } else {
        const auto a = static_cast<std::size_t>(ctx.pending[j].area);
        if (area_slot[a] < 0) continue;
        target = static_cast<std::size_t>(area_slot[a]);
        delta = model.ride() ? (first_leg - ctx.unassigned_wait_penalty) * area_scale[a]
                             : model.award(i, j, first_leg) * area_scale[a];
      }
      const double v = var.with(target, delta);
      if (v < best) {
        best = v;
        chosen = pos;
        slot = target;
        chosen_delta = delta;
      }
    }
    if (!chosen) continue;
    var.add(slot, chosen_delta);
    detail::move_to_front(c, i, seg.front(), *chosen);
  }
}

/// Top ceil(rate * n) chromosomes, never fewer than one.
inline std::vector<Chromosome> select_cross_rate(const std::vector<Chromosome>& ranked,
                                                 double cross_rate) {
  if (ranked.empty()) return {};
  auto n = static_cast<std::size_t>(std::ceil(cross_rate * static_cast<double>(ranked.size()) - 1e-9));
  n = std::clamp<std::size_t>(n, 1, ranked.size());
  return {ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(n)};
}

/// Mother's keys before `cut`, father's from `cut` on, then leader repair.
inline Chromosome crossover_at(const Chromosome& mother, const Chromosome& father,
                               std::size_t cut) {
  if (mother.size() != father.size()) throw std::invalid_argument("crossover: parents differ in length");
  Chromosome child = mother;
  child.fitness.reset();
  cut = std::min(cut, child.size());
  for (std::size_t i = cut; i < child.size(); ++i) child.genes[i].key = father.genes[i].key;
  enforce_leader(child);
  return child;
}

/// Single-point crossover with a uniform cut in [0, length].
inline Chromosome crossover(const Chromosome& mother, const Chromosome& father, Rng& rng) {
  std::uniform_int_distribution<std::size_t> cut(0, mother.size());
  return crossover_at(mother, father, cut(rng));
}

/// Reorders the first `window` targets of every provider best-first by
/// immediate utility (capture probability or ride utility) along the
/// reordered path. The window's keys are redistributed so segment
/// boundaries stay where they were.
inline void local_optimization(Chromosome& c, int window, const FitnessModel& model) {
  if (window < 2) return;
  const std::size_t p = model.provider_count();
  std::vector<std::vector<std::size_t>> segments;
  decode_positions(c, p, segments);
  bool changed = false;
  for (std::size_t i = 0; i < p; ++i) {
    const auto& seg = segments[i];
    const std::size_t w = std::min(static_cast<std::size_t>(window), seg.size());
    if (w < 2) continue;
    std::vector<std::size_t> remaining(seg.begin(), seg.begin() + static_cast<std::ptrdiff_t>(w));
    std::vector<std::size_t> order;
    std::size_t origin = i;
    double t = 0.0;
    while (!remaining.empty()) {
      std::size_t best_k = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (std::size_t k = 0; k < remaining.size(); ++k) {
        const std::size_t j = remaining[k] - p;
        const double s = model.award(origin, j, t + model.travel(origin, j));
        if (s > best_score) {
          best_score = s;
          best_k = k;
        }
      }
      const std::size_t j = remaining[best_k] - p;
      t += model.travel(origin, j) + model.trip_time(j);
      origin = p + j;
      order.push_back(remaining[best_k]);
      remaining.erase(remaining.begin() + static_cast<std::ptrdiff_t>(best_k));
    }
    if (std::equal(order.begin(), order.end(), seg.begin())) continue;
    std::vector<double> keys;
    for (std::size_t k = 0; k < w; ++k) keys.push_back(c.genes[seg[k]].key);
    for (std::size_t k = 0; k < w; ++k) c.genes[order[k]].key = keys[k];
    changed = true;
  }
  if (changed) c.fitness.reset();
}

/// Swap-mutates the worst floor(rate * n) chromosomes of a ranked population
/// (or replaces them with fresh random genomes when `immigration` is set).
/// Chromosomes inside the protected head are never touched.
inline void mutate(std::vector<Chromosome>& ranked, double mutate_rate, Rng& rng,
                   std::size_t protected_head = 0, bool immigration = false) {
  const std::size_t n = ranked.size();
  auto count = static_cast<std::size_t>(std::floor(mutate_rate * static_cast<double>(n) + 1e-9));
  count = std::min(count, n > protected_head ? n - protected_head : 0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < count; ++k) {
    auto& c = ranked[n - 1 - k];
    if (c.size() < 2) continue;
    if (immigration) {
      for (auto& g : c.genes) g.key = unit(rng);
    } else {
      std::uniform_int_distribution<std::size_t> pick(0, c.size() - 1);
      const std::size_t a = pick(rng);
      std::size_t b = pick(rng);
      while (b == a) b = pick(rng);
      std::swap(c.genes[a].key, c.genes[b].key);
    }
    c.fitness.reset();
    enforce_leader(c);
  }
}

struct GenerationStats {
  int generation{0};
  Fitness best;
  double best_score{0.0};
};

struct GAResult {
  AllocationPlan plan;
  Chromosome best;
  std::vector<Chromosome> population;  // final population, for warm starts
  std::vector<GenerationStats> trace;
};

namespace detail {

inline Chromosome rekey(const Chromosome& previous, const std::vector<Element>& layout, Rng& rng) {
  std::map<Element, double> keys;
  for (const auto& g : previous.genes) keys.emplace(g.element, g.key);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Chromosome c;
  c.genes.reserve(layout.size());
  for (const auto& e : layout) {
    auto it = keys.find(e);
    c.genes.push_back({e, it != keys.end() ? it->second : unit(rng)});
  }
  enforce_leader(c);
  return c;
}

}  // namespace detail

/// The fairness-aware GA over one planning epoch. Each generation ranks by
/// utility and keeps elites; one copy of the population is pushed toward
/// provider fairness and ranked by it, a second toward customer fairness
/// and ranked by it; mothers and fathers come from the top of each, their
/// children (optionally locally optimized) refill the non-elite slots, and
/// the worst are mutated. Disabling both stages gives the plain GA.
inline GAResult run_fairga_detailed(const PlanningContext& ctx, const GAConfig& config,
                                    const std::vector<Chromosome>* warm = nullptr) {
  config.validate();
  GAResult result;
  const auto idle = ctx.idle_providers();
  if (idle.empty()) return result;

  const FitnessModel model(ctx);
  Rng rng(config.seed);
  const Criterion primary = config.weighted_sum ? Criterion::weighted : Criterion::utility;
  const auto pop_size = static_cast<std::size_t>(config.population_size);

  const auto pending = ctx.pending_ids();
  std::vector<Chromosome> population;
  population.reserve(pop_size);
  std::vector<Element> layout;
  {
    auto first = encode_random(idle, pending, rng);
    for (const auto& g : first.genes) layout.push_back(g.element);
    if (warm != nullptr && !warm->empty()) {
      for (std::size_t i = 0; i < pop_size; ++i) {
        population.push_back(detail::rekey((*warm)[i % warm->size()], layout, rng));
      }
    } else {
      population.push_back(std::move(first));
      while (population.size() < pop_size) population.push_back(encode_random(idle, pending, rng));
    }
  }

  const auto elites = std::min(
      pop_size - 1,
      static_cast<std::size_t>(std::llround(config.elitist_rate * static_cast<double>(pop_size))));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  rank(population, primary, model);
  Chromosome best = population.front();

  for (int gen = 0; gen < config.max_gen; ++gen) {
    rank(population, primary, model);

    std::vector<Chromosome> s1 = population;
    if (config.provider_stage) {
      for (auto& c : s1) assign_provider(c, FairnessType::provider, model);
      rank(s1, Criterion::provider_fairness, model);
    }
    std::vector<Chromosome> s2 = population;
    if (config.customer_stage) {
      for (auto& c : s2) assign_provider(c, FairnessType::customer, model);
      rank(s2, Criterion::customer_fairness, model);
    }
    const auto mothers = select_cross_rate(s1, config.cross_rate);
    const auto fathers = select_cross_rate(s2, config.cross_rate);
    std::uniform_int_distribution<std::size_t> pick_m(0, mothers.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_f(0, fathers.size() - 1);

    for (std::size_t slot = elites; slot < pop_size; ++slot) {
      const auto& m = mothers[pick_m(rng)];
      const auto& f = fathers[pick_f(rng)];
      Chromosome child = crossover(m, f, rng);
      const double u = unit(rng);
      const bool local = config.local_rate_raw_comparison ? u > config.local_rate
                                                          : u < config.local_rate;
      if (local) local_optimization(child, config.local_window, model);
      population[slot] = std::move(child);
    }

    rank(population, primary, model);
    mutate(population, config.mutate_rate, rng, elites, config.immigration);
    rank(population, primary, model);

    if (criterion_score(*population.front().fitness, primary) >
        criterion_score(*best.fitness, primary)) {
      best = population.front();
    }
    result.trace.push_back({gen, *best.fitness, criterion_score(*best.fitness, primary)});
  }

  result.plan = decode(best);
  result.best = std::move(best);
  result.population = std::move(population);
  return result;
}

inline AllocationPlan run_fairga(const PlanningContext& ctx, const GAConfig& config) {
  return run_fairga_detailed(ctx, config).plan;
}

/// GA config with both fairness stages off: ranks by utility only.
inline GAConfig plain_ga_config(GAConfig config) {
  config.provider_stage = false;
  config.customer_stage = false;
  config.weighted_sum = false;
  return config;
}

/// GA ranked by the single combined fitness U - F_customer - F_provider.
inline GAConfig ga3_config(GAConfig config) {
  config.provider_stage = false;
  config.customer_stage = false;
  config.weighted_sum = true;
  return config;
}

/// GA dispatcher that carries its population from one epoch to the next.
class GeneticDispatch : public DispatchAlgorithm {
 public:
  GeneticDispatch(std::string name, GAConfig config) : name_(std::move(name)), config_(config) {
    config_.validate();
  }

  [[nodiscard]] std::string name() const override { return name_; }
  [[nodiscard]] const GAConfig& config() const { return config_; }

  /// Called with the best score after every generation, when set.
  std::function<void(Minute, const GenerationStats&)> on_generation;

  AllocationPlan plan(const PlanningContext& ctx, std::uint64_t seed) override {
    GAConfig cfg = config_;
    cfg.seed = seed;
    const bool warm = cfg.warm_start && !memory_.empty();
    auto result = run_fairga_detailed(ctx, cfg, warm ? &memory_ : nullptr);
    if (on_generation) {
      for (const auto& s : result.trace) on_generation(ctx.now, s);
    }
    if (!result.population.empty()) memory_ = std::move(result.population);
    return result.plan;
  }

  void reset() override { memory_.clear(); }

 private:
  std::string name_;
  GAConfig config_;
  std::vector<Chromosome> memory_;
};

}  // namespace fairdvrp
