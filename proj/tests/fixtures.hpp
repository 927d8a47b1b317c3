#pragma once
// Small hand-built planning worlds shared by the GA and baseline tests.

#include <cmath>
#include <vector>

#include "fairdvrp/planning.hpp"
#include "oracles.hpp"

namespace fixture {

using namespace fairdvrp;

struct World {
  RoadGraph graph;
  PlanningContext ctx;

  World(RoadGraph g) : graph(std::move(g)) { ctx.graph = &graph; }
  World(const World& o) : graph(o.graph), ctx(o.ctx) { ctx.graph = &graph; }
  World& operator=(const World&) = delete;
};

/// Line graph of `n` nodes 70 m apart (one minute per hop), idle providers
/// at `provider_nodes`, parking requests at `request_nodes`, all in area 0.
inline World line_world(int n, const std::vector<int>& provider_nodes,
                        const std::vector<int>& request_nodes, double mean_stay = 20.0) {
  World w(oracle::line_graph(n, 70.0));
  w.ctx.mean_stay = mean_stay;
  for (std::size_t i = 0; i < provider_nodes.size(); ++i) {
    w.ctx.providers.push_back({ProviderId{static_cast<std::int64_t>(i + 1)}, NodeId{provider_nodes[i]}, 0.0, true});
  }
  for (std::size_t j = 0; j < request_nodes.size(); ++j) {
    RequestSnapshot r;
    r.id = RequestId{static_cast<std::int64_t>(j + 1)};
    r.destination = NodeId{request_nodes[j]};
    r.window_end = 1000.0;
    w.ctx.pending.push_back(r);
  }
  w.ctx.areas.assign(1, AreaLedger{static_cast<double>(request_nodes.size()), 0.0, 0.0, 0.0});
  return w;
}

/// Utility of a plan computed from first principles: sequential hop minutes
/// along each route, survival exp(-t / mean_stay), averaged over pending.
inline double plan_utility(const World& w, const AllocationPlan& plan) {
  const auto d = oracle::floyd_warshall(w.graph);
  double total = 0.0;
  for (const auto& [pid, route] : plan.routes) {
    NodeId at;
    for (const auto& p : w.ctx.providers) {
      if (p.id == pid) at = p.location;
    }
    double t = 0.0;
    for (RequestId rid : route) {
      NodeId to;
      for (const auto& r : w.ctx.pending) {
        if (r.id == rid) to = r.destination;
      }
      t += d[w.graph.index_of(at)][w.graph.index_of(to)] / 70.0;
      total += std::exp(-t / w.ctx.mean_stay);
      at = to;
    }
  }
  return total / static_cast<double>(w.ctx.pending.size());
}

}  // namespace fixture
