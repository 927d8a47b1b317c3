#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "fairdvrp/fairga.hpp"
#include "fairdvrp/planning.hpp"

namespace fairdvrp {

namespace detail {

// One target per idle provider, providers served in id order, each taking
// the unclaimed request with the highest score; ties keep the lower id.
template <class Score>
AllocationPlan myopic_plan(const PlanningContext& ctx, Score score) {
  AllocationPlan plan;
  std::vector<char> claimed(ctx.pending.size(), 0);
  for (const auto& p : ctx.providers) {
    if (!p.idle) continue;
    auto& route = plan.routes[p.id];
    std::optional<std::size_t> best;
    double best_score = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < ctx.pending.size(); ++j) {
      if (claimed[j]) continue;
      const double s = score(p, ctx.pending[j]);
      if (s > best_score) {
        best_score = s;
        best = j;
      }
    }
    if (best) {
      claimed[*best] = 1;
      route.push_back(ctx.pending[*best].id);
    }
  }
  for (std::size_t j = 0; j < ctx.pending.size(); ++j) {
    if (!claimed[j]) plan.unassigned.push_back(ctx.pending[j].id);
  }
  return plan;
}

}  // namespace detail

/// Greedy-Probability: highest capture probability (parking) or ride
/// utility (rides) first.
inline AllocationPlan greedy_probability_plan(const PlanningContext& ctx) {
  const auto& graph = *ctx.graph;
  return detail::myopic_plan(ctx, [&](const ProviderSnapshot& p, const RequestSnapshot& r) {
    if (ctx.scenario == Scenario::ride_hailing) {
      return haversine(graph.position(r.destination), graph.position(*r.start)) -
             haversine(graph.position(*r.start), graph.position(p.location));
    }
    return capture_probability(graph, p.location, r, ctx.now, 0.0, ctx.mean_stay);
  });
}

/// Greedy-Distance: shortest travel time to the service node first.
inline AllocationPlan nearest_plan(const PlanningContext& ctx) {
  const auto& graph = *ctx.graph;
  return detail::myopic_plan(ctx, [&](const ProviderSnapshot& p, const RequestSnapshot& r) {
    return -graph.shortest_travel_time(p.location, r.service_node());
  });
}

inline AllocationPlan plain_ga_plan(const PlanningContext& ctx, const GAConfig& config) {
  return run_fairga(ctx, plain_ga_config(config));
}

inline AllocationPlan ga3_plan(const PlanningContext& ctx, const GAConfig& config) {
  return run_fairga(ctx, ga3_config(config));
}

class GreedyProbabilityDispatch : public DispatchAlgorithm {
 public:
  [[nodiscard]] std::string name() const override { return "greedy"; }
  AllocationPlan plan(const PlanningContext& ctx, std::uint64_t) override {
    return greedy_probability_plan(ctx);
  }  [[nodiscard]] bool replans_committed() const override { return false; }
};

class NearestDispatch : public DispatchAlgorithm {
 public:
  [[nodiscard]] std::string name() const override { return "nearest"; }
  AllocationPlan plan(const PlanningContext& ctx, std::uint64_t) override {
    return nearest_plan(ctx);
  }  [[nodiscard]] bool replans_committed() const override { return false; }
};

}  // namespace fairdvrp
