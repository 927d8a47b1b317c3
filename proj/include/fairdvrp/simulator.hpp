#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairdvrp/metrics.hpp"
#include "fairdvrp/planning.hpp"
#include "fairdvrp/sampling.hpp"
#include "fairdvrp/world.hpp"

namespace fairdvrp {

enum class PlacementMode { clustered, random, fixed };

inline std::string to_string(PlacementMode m) {
  switch (m) {
    case PlacementMode::clustered: return "clustered";
    case PlacementMode::random: return "random";
    case PlacementMode::fixed: return "fixed";
  }
  return "?";
}

inline PlacementMode placement_from_string(const std::string& s) {
  if (s == "clustered") return PlacementMode::clustered;
  if (s == "random") return PlacementMode::random;
  if (s == "fixed") return PlacementMode::fixed;
  throw std::invalid_argument("unknown placement mode: " + s);
}

struct ScenarioConfig {
  Scenario scenario{Scenario::non_compliance};
  Minute horizon{480};
  Minute epoch{1};
  int providers{20};
  PlacementMode placement{PlacementMode::random};
  int grid_rows{4};
  int grid_cols{4};
  std::uint64_t seed{1};
  double mean_stay{20.0};               // believed mean parking stay, minutes
  double unassigned_wait_penalty{15.0};  // minutes added to an unplanned ride's projected wait
  std::vector<NodeId> fixed_nodes;       // used by PlacementMode::fixed

  void validate() const {
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (epoch <= 0) throw std::invalid_argument("epoch must be positive");
    if (providers < 1) throw std::invalid_argument("need at least one provider");
    if (grid_rows < 1 || grid_cols < 1) throw std::invalid_argument("area grid dims must be positive");
    if (!(mean_stay > 0.0)) throw std::invalid_argument("mean stay must be positive");
  }
};

/// Stable 64-bit mix used to derive per-epoch seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (salt + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Checks the event stream before a run: sorted by window start, unique ids,
/// known nodes, well-formed windows, and a pickup node exactly for rides.
inline void validate_events(const RoadGraph& graph, std::span<const CustomerRequest> events,
                            Scenario scenario) {
  std::set<RequestId> ids;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const auto& e = events[i];
    const std::string where = "event " + std::to_string(i) + " (id " + std::to_string(e.id.value) + "): ";
    if (!ids.insert(e.id).second) throw std::invalid_argument(where + "duplicate request id");
    if (i > 0 && events[i - 1].window_start > e.window_start) {
      throw std::invalid_argument(where + "stream not sorted by window start");
    }
    if (static_cast<double>(e.window_start) > e.window_end) {
      throw std::invalid_argument(where + "window ends before it starts");
    }
    if (!graph.contains(e.destination)) throw std::invalid_argument(where + "unknown destination node");
    if (scenario == Scenario::ride_hailing) {
      if (!e.start) throw std::invalid_argument(where + "ride request without pickup");
      if (!graph.contains(*e.start)) throw std::invalid_argument(where + "unknown pickup node");
    } else if (e.start) {
      throw std::invalid_argument(where + "parking violation with a start node");
    }
    if (e.area < 0) throw std::invalid_argument(where + "negative area id");
    if (e.status != RequestStatus::pending) throw std::invalid_argument(where + "event not pending");
  }
}

/// Provider start nodes for a placement mode. Clustered placement runs the
/// size-constrained k-means over `history` service locations.
inline std::vector<NodeId> initial_placement(const ScenarioConfig& config, const RoadGraph& graph,
                                             std::span<const CustomerRequest> history) {
  std::vector<NodeId> starts;
  const auto n = static_cast<std::size_t>(config.providers);
  switch (config.placement) {
    case PlacementMode::random: {
      Rng rng(mix_seed(config.seed, 0xA11CE));
      std::uniform_int_distribution<std::size_t> pick(0, graph.size() - 1);
      for (std::size_t i = 0; i < n; ++i) starts.push_back(graph.nodes()[pick(rng)].id);
      break;
    }
    case PlacementMode::fixed: {
      for (std::size_t i = 0; i < n; ++i) {
        if (!config.fixed_nodes.empty()) {
          starts.push_back(config.fixed_nodes[i % config.fixed_nodes.size()]);
        } else {
          starts.push_back(graph.nodes()[(i * graph.size()) / n].id);
        }
      }
      break;
    }
    case PlacementMode::clustered: {
      std::vector<LatLon> points;
      points.reserve(history.size());
      for (const auto& r : history) points.push_back(graph.position(r.service_node()));
      if (points.empty()) throw std::invalid_argument("clustered placement needs demand history");
      auto [k, tau] = default_cluster_shape(config.providers, config.grid_rows * config.grid_cols,
                                            static_cast<int>(points.size()));
      const auto model = constrained_kmeans(points, k, tau, mix_seed(config.seed, 0xC1057));
      for (const auto& [node, count] : distribute_providers(model, graph, config.providers)) {
        for (int c = 0; c < count; ++c) starts.push_back(node);
      }
      break;
    }
  }
  return starts;
}

/// Applies a provider's arrival at a request. Parking: a capture inside the
/// window awards 1, a late arrival is a miss that consumes the request.
/// Rides: the pickup awards the utility fixed at assignment and records the
/// wait. Returns the award, or nothing for a miss.
inline std::optional<AwardEvent> serve_request(ServiceProvider& provider, CustomerRequest& request,
                                               Minute t, double ride_award = 0.0) {
  if (request.status == RequestStatus::served) {
    throw std::logic_error("request " + std::to_string(request.id.value) + " already served");
  }
  if (request.status == RequestStatus::expired) return std::nullopt;
  if (provider.location != request.service_node()) {
    throw std::logic_error("provider " + std::to_string(provider.id.value) +
                           " is not at the service node of request " +
                           std::to_string(request.id.value));
  }
  if (request.status == RequestStatus::pending) transition(request, RequestStatus::assigned);
  const bool ride = request.start.has_value();
  if (!ride && capture_utility(provider.location, request, t) == 0) {
    transition(request, RequestStatus::expired);
    return std::nullopt;
  }
  transition(request, RequestStatus::served);
  request.served_by = provider.id;
  const double value = ride ? ride_award : 1.0;
  provider.accumulated_utility += value;
  if (ride) {
    provider.carrying = Waypoint{request.id, request.destination, WaypointKind::dropoff, 0.0};
  }
  return AwardEvent{provider.id, request.id, t, value};
}

struct SimulationResult {
  MetricsReport report;
  std::vector<AwardEvent> awards;
  std::vector<CustomerRequest> requests;  // final state of every released request
  std::vector<ServiceProvider> providers;
};

inline void write_trace_header(std::ostream& os) {
  os << "minute,provider,node,cumulative_utility\n";
}

/// Minute-stepped rolling-horizon run: release, expire, re-plan idle
/// providers, move, award. `history` feeds clustered placement and defaults
/// to the event stream itself.
inline SimulationResult run_simulation(const ScenarioConfig& config, DispatchAlgorithm& algo,
                                       const RoadGraph& graph, std::vector<CustomerRequest> events,
                                       std::span<const CustomerRequest> history = {},
                                       std::ostream* trace = nullptr) {
  config.validate();
  validate_events(graph, events, config.scenario);
  const bool ride = config.scenario == Scenario::ride_hailing;

  std::vector<ServiceProvider> providers;
  {
    const auto starts = initial_placement(config, graph, history.empty()
                                                             ? std::span<const CustomerRequest>(events)
                                                             : history);
    for (std::size_t i = 0; i < starts.size(); ++i) {
      ServiceProvider p;
      p.id = ProviderId{static_cast<std::int64_t>(i)};
      p.location = starts[i];
      providers.push_back(std::move(p));
    }
    std::vector<NodeId> targets;
    for (const auto& e : events) {
      targets.push_back(e.destination);
      if (e.start) targets.push_back(*e.start);
    }
    std::sort(targets.begin(), targets.end());
    targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    std::vector<NodeId> origins;
    for (const auto& p : providers) origins.push_back(p.location);
    std::sort(origins.begin(), origins.end());
    origins.erase(std::unique(origins.begin(), origins.end()), origins.end());
    graph.validate_reachability(origins, targets);
  }

  int area_count = config.grid_rows * config.grid_cols;
  for (const auto& e : events) area_count = std::max(area_count, e.area + 1);

  std::vector<AreaLedger> areas(static_cast<std::size_t>(area_count));
  std::unordered_map<RequestId, std::size_t> index;
  for (std::size_t i = 0; i < events.size(); ++i) index[events[i].id] = i;
  std::vector<std::size_t> open;  // released, neither served nor expired
  std::vector<AwardEvent> awards;
  std::size_t next_release = 0;
  int expired = 0;

  algo.reset();
  if (trace) write_trace_header(*trace);

  auto strip_from_routes = [&](RequestId id) {
    for (auto& p : providers) {
      std::erase_if(p.route, [&](const Waypoint& w) { return w.request == id; });
      if (p.deferred_route) {
        std::erase_if(*p.deferred_route, [&](const Waypoint& w) { return w.request == id; });
      }
    }
  };

  for (Minute now = 0; now < config.horizon; ++now) {
    while (next_release < events.size() && events[next_release].window_start <= now) {
      auto& r = events[next_release];
      if (r.window_start >= 0) {
        open.push_back(next_release);
        areas[static_cast<std::size_t>(r.area)].raised += 1.0;
      }
      ++next_release;
    }

    if (!ride) {
      std::erase_if(open, [&](std::size_t i) {
        auto& r = events[i];
        if (r.window_end < static_cast<double>(now)) {
          transition(r, RequestStatus::expired);
          strip_from_routes(r.id);
          ++expired;
          return true;
        }
        return false;
      });
    }

    if (now % config.epoch == 0) {
      std::vector<char> plannable(providers.size(), 0);
      std::set<RequestId> held;
      for (std::size_t k = 0; k < providers.size(); ++k) {
        auto& p = providers[k];
        plannable[k] = (ride || !algo.replans_committed()) ? (p.at_node() && p.idle()) : p.at_node();
        if (!plannable[k]) {
          for (const auto& w : p.route) held.insert(w.request);
        }
      }
      PlanningContext ctx;
      ctx.scenario = config.scenario;
      ctx.now = now;
      ctx.graph = &graph;
      ctx.mean_stay = config.mean_stay;
      ctx.unassigned_wait_penalty = config.unassigned_wait_penalty;
      ctx.areas = areas;
      for (std::size_t k = 0; k < providers.size(); ++k) {
        const auto& p = providers[k];
        ctx.providers.push_back({p.id, p.location, p.accumulated_utility, plannable[k] != 0});
      }
      for (std::size_t i : open) {
        auto& r = events[i];
        if (held.count(r.id)) {
          if (ride) {
            auto& a = ctx.areas[static_cast<std::size_t>(r.area)];
            a.wait_sum += static_cast<double>(now - r.window_start);
            a.wait_count += 1.0;
          }
          continue;
        }
        ctx.pending.push_back({r.id, r.start, r.destination, r.window_start, r.window_end, r.area});
      }
      std::sort(ctx.pending.begin(), ctx.pending.end(),
                [](const RequestSnapshot& a, const RequestSnapshot& b) { return a.id < b.id; });

      const bool any_plannable = std::any_of(plannable.begin(), plannable.end(), [](char c) { return c; });
      if (any_plannable) {
        for (std::size_t k = 0; k < providers.size(); ++k) {
          if (!plannable[k]) continue;
          for (const auto& w : providers[k].route) {
            auto& r = events[index.at(w.request)];
            if (r.status == RequestStatus::assigned) transition(r, RequestStatus::pending);
          }
          providers[k].route.clear();
        }
      }
      if (any_plannable && !ctx.pending.empty()) {
        const AllocationPlan plan = algo.plan(ctx, mix_seed(config.seed, static_cast<std::uint64_t>(now)));
        std::set<RequestId> allowed;
        for (const auto& r : ctx.pending) allowed.insert(r.id);
        std::set<RequestId> used;
        for (std::size_t k = 0; k < providers.size(); ++k) {
          if (!plannable[k]) continue;
          auto it = plan.routes.find(providers[k].id);
          if (it == plan.routes.end()) continue;
          std::vector<Waypoint> route;
          for (RequestId rid : it->second) {
            if (!allowed.count(rid)) {
              throw std::logic_error(algo.name() + " planned request " + std::to_string(rid.value) +
                                     " that is not open to planning");
            }
            if (!used.insert(rid).second) {
              throw std::logic_error(algo.name() + " assigned request " + std::to_string(rid.value) +
                                     " twice");
            }
            auto& r = events[index.at(rid)];
            transition(r, RequestStatus::assigned);
            if (ride) {
              const double award = ride_utility(graph, providers[k].location, r);
              route.push_back({rid, *r.start, WaypointKind::pickup, award});
              providers[k].busy_until =
                  now + static_cast<Minute>(std::ceil(
                            graph.shortest_travel_time(providers[k].location, *r.start) +
                            graph.shortest_travel_time(*r.start, r.destination)));
              break;  // rides commit to the head only
            }
            route.push_back({rid, r.destination, WaypointKind::capture, 0.0});
          }
          set_route(providers[k], std::move(route));
        }
      }
    }

    for (auto& p : providers) {
      const StepOutcome step = advance_provider(p, graph);
      if (step.reached && step.reached->kind != WaypointKind::dropoff) {
        auto& r = events[index.at(step.reached->request)];
        const Minute t = step.moved > 0.0 ? now + 1 : now;
        const auto award = serve_request(p, r, t, step.reached->award);
        if (award) {
          awards.push_back(*award);
          auto& a = areas[static_cast<std::size_t>(r.area)];
          a.captured += 1.0;
          if (ride) {
            a.wait_sum += static_cast<double>(t - r.window_start);
            a.wait_count += 1.0;
          }
        } else {
          ++expired;
        }
        std::erase(open, index.at(r.id));
        strip_from_routes(r.id);
      }
      if (trace) {
        *trace << (now + 1) << ',' << p.id.value << ',' << p.location.value << ','
               << p.accumulated_utility << '\n';
      }
    }
  }

  SimulationResult result;
  MetricsReport& report = result.report;
  report.scenario = config.scenario;
  for (const auto& p : providers) {
    report.per_provider[p.id] = p.accumulated_utility;
    report.total_distance_m += p.total_distance;
  }
  for (auto& e : events) {
    if (e.window_start < config.horizon && e.window_start >= 0) result.requests.push_back(e);
  }
  report.total_utility = total_utility(awards);
  report.provider_fairness = provider_fairness(report.per_provider);
  const auto cf = customer_fairness(config.scenario, result.requests, awards, config.horizon);
  report.customer_fairness = cf.variance;
  report.customer_fairness_raw = cf.raw_count_variance;
  report.per_area = cf.per_area;
  report.served = static_cast<int>(awards.size());
  report.expired = expired;
  result.awards = std::move(awards);
  result.providers = std::move(providers);
  return result;
}

}  // namespace fairdvrp
