#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fairdvrp/geo.hpp"
#include "fairdvrp/types.hpp"

namespace fairdvrp {

struct BoundingBox {
  double min_lat{0.0};
  double min_lon{0.0};
  double max_lat{0.0};
  double max_lon{0.0};

  [[nodiscard]] bool contains(double lat, double lon, double tol = 1e-9) const {
    return lat >= min_lat - tol && lat <= max_lat + tol && lon >= min_lon - tol &&
           lon <= max_lon + tol;
  }
};

/// Directed road graph with edge lengths in meters. Shortest paths are
/// computed on demand with Dijkstra and memoized per origin; the memo is an
/// implementation detail and is not safe to populate from several threads.
class RoadGraph {
 public:
  struct Node {
    NodeId id;
    double lat{0.0};
    double lon{0.0};
  };

  struct Edge {
    NodeId from;
    NodeId to;
    double length_m{0.0};
  };

  RoadGraph() = default;

  RoadGraph(std::vector<Node> nodes, std::vector<Edge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    index_.reserve(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
      if (!index_.emplace(nodes_[i].id, i).second) {
        throw std::invalid_argument("duplicate node id " + std::to_string(nodes_[i].id.value));
      }
    }
    adjacency_.resize(nodes_.size());
    for (const auto& e : edges_) {
      auto from = index_.find(e.from);
      auto to = index_.find(e.to);
      if (from == index_.end() || to == index_.end()) {
        throw std::invalid_argument("edge " + std::to_string(e.from.value) + "->" +
                                    std::to_string(e.to.value) + " references an undeclared node");
      }
      if (!(e.length_m > 0.0) || !std::isfinite(e.length_m)) {
        throw std::invalid_argument("edge " + std::to_string(e.from.value) + "->" +
                                    std::to_string(e.to.value) + " has non-positive length");
      }
      auto& out = adjacency_[from->second];
      auto existing = std::find_if(out.begin(), out.end(),
                                   [&](const Arc& a) { return a.to == to->second; });
      if (existing == out.end()) {
        out.push_back({to->second, e.length_m});
      } else {
        existing->length = std::min(existing->length, e.length_m);
      }
    }
    trees_.resize(nodes_.size());
  }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const std::vector<Node>& nodes() const { return nodes_; }
  [[nodiscard]] const std::vector<Edge>& edges() const { return edges_; }
  [[nodiscard]] bool contains(NodeId id) const { return index_.count(id) != 0; }

  [[nodiscard]] const Node& node(NodeId id) const { return nodes_[index_of(id)]; }
  [[nodiscard]] LatLon position(NodeId id) const {
    const auto& n = node(id);
    return {n.lat, n.lon};
  }

  [[nodiscard]] std::size_t index_of(NodeId id) const {
    auto it = index_.find(id);
    if (it == index_.end()) {
      throw std::out_of_range("unknown node id " + std::to_string(id.value));
    }
    return it->second;
  }

  [[nodiscard]] double edge_length(NodeId from, NodeId to) const {
    for (const auto& a : adjacency_[index_of(from)]) {
      if (a.to == index_of(to)) return a.length;
    }
    throw std::out_of_range("no edge " + std::to_string(from.value) + "->" +
                            std::to_string(to.value));
  }

  [[nodiscard]] bool reachable(NodeId from, NodeId to) const {
    return std::isfinite(tree_from(index_of(from)).dist[index_of(to)]);
  }

  /// Shortest directed path length in meters.
  [[nodiscard]] double shortest_path_length(NodeId from, NodeId to) const {
    const double d = tree_from(index_of(from)).dist[index_of(to)];
    if (!std::isfinite(d)) throw UnreachableError(from, to);
    return d;
  }

  /// Minutes at the constant provider speed.
  [[nodiscard]] double shortest_travel_time(NodeId from, NodeId to) const {
    return shortest_path_length(from, to) / kProviderSpeed;
  }

  /// First node after `from` on a shortest path to `to`.
  [[nodiscard]] NodeId next_hop(NodeId from, NodeId to) const {
    if (from == to) return to;
    const std::size_t origin = index_of(from);
    const auto& tree = tree_from(origin);
    std::size_t cur = index_of(to);
    if (!std::isfinite(tree.dist[cur])) throw UnreachableError(from, to);
    while (tree.pred[cur] != static_cast<std::int32_t>(origin)) {
      cur = static_cast<std::size_t>(tree.pred[cur]);
    }
    return nodes_[cur].id;
  }

  [[nodiscard]] std::vector<NodeId> shortest_path(NodeId from, NodeId to) const {
    const std::size_t origin = index_of(from);
    const auto& tree = tree_from(origin);
    std::size_t cur = index_of(to);
    if (!std::isfinite(tree.dist[cur])) throw UnreachableError(from, to);
    std::vector<NodeId> path{nodes_[cur].id};
    while (cur != origin) {
      cur = static_cast<std::size_t>(tree.pred[cur]);
      path.push_back(nodes_[cur].id);
    }
    std::reverse(path.begin(), path.end());
    return path;
  }

  /// Nearest node by great-circle distance; ties go to the lowest node id.
  [[nodiscard]] NodeId nearest_node(double lat, double lon) const {
    if (nodes_.empty()) throw std::logic_error("nearest_node on empty graph");
    const Node* best = nullptr;
    double best_d = std::numeric_limits<double>::infinity();
    for (const auto& n : nodes_) {
      const double d = haversine(lat, lon, n.lat, n.lon);
      if (d < best_d || (d == best_d && n.id < best->id)) {
        best_d = d;
        best = &n;
      }
    }
    return best->id;
  }

  [[nodiscard]] BoundingBox bounds() const {
    BoundingBox b{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity(),
                  -std::numeric_limits<double>::infinity()};
    for (const auto& n : nodes_) {
      b.min_lat = std::min(b.min_lat, n.lat);
      b.min_lon = std::min(b.min_lon, n.lon);
      b.max_lat = std::max(b.max_lat, n.lat);
      b.max_lon = std::max(b.max_lon, n.lon);
    }
    return b;
  }

  /// Throws UnreachableError for the first target that some start cannot reach.
  void validate_reachability(std::span<const NodeId> starts, std::span<const NodeId> targets) const {
    for (NodeId s : starts) {
      const auto& tree = tree_from(index_of(s));
      for (NodeId t : targets) {
        if (!std::isfinite(tree.dist[index_of(t)])) throw UnreachableError(s, t);
      }
    }
  }

 private:
  struct Arc {
    std::size_t to;
    double length;
  };

  struct Tree {
    std::vector<double> dist;
    std::vector<std::int32_t> pred;
  };

  const Tree& tree_from(std::size_t origin) const {
    auto& slot = trees_[origin];
    if (slot) return *slot;
    Tree tree;
    tree.dist.assign(nodes_.size(), std::numeric_limits<double>::infinity());
    tree.pred.assign(nodes_.size(), -1);
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
    tree.dist[origin] = 0.0;
    heap.push({0.0, origin});
    while (!heap.empty()) {
      auto [d, u] = heap.top();
      heap.pop();
      if (d > tree.dist[u]) continue;
      for (const auto& a : adjacency_[u]) {
        const double nd = d + a.length;
        // equal-length ties keep the lower-index predecessor for determinism
        if (nd < tree.dist[a.to] ||
            (nd == tree.dist[a.to] && static_cast<std::int32_t>(u) < tree.pred[a.to])) {
          const bool improved = nd < tree.dist[a.to];
          tree.dist[a.to] = nd;
          tree.pred[a.to] = static_cast<std::int32_t>(u);
          if (improved) heap.push({nd, a.to});
        }
      }
    }
    slot = std::move(tree);
    return *slot;
  }

  std::vector<Node> nodes_;
  std::vector<Edge> edges_;
  std::unordered_map<NodeId, std::size_t> index_;
  std::vector<std::vector<Arc>> adjacency_;
  mutable std::vector<std::optional<Tree>> trees_;
};

inline double shortest_travel_time(const RoadGraph& graph, NodeId from, NodeId to) {
  return graph.shortest_travel_time(from, to);
}

enum class RequestStatus { pending, assigned, served, expired };

inline const char* to_string(RequestStatus s) {
  switch (s) {
    case RequestStatus::pending: return "pending";
    case RequestStatus::assigned: return "assigned";
    case RequestStatus::served: return "served";
    case RequestStatus::expired: return "expired";
  }
  return "?";
}

struct CustomerRequest {
  RequestId id;
  std::optional<NodeId> start;  // absent for parking violations
  NodeId destination;
  Minute window_start{0};
  double window_end{kInfiniteTime};
  AreaId area{0};
  RequestStatus status{RequestStatus::pending};
  std::optional<ProviderId> served_by;

  /// Node a provider must reach to serve: pickup for rides, the bay otherwise.
  [[nodiscard]] NodeId service_node() const { return start ? *start : destination; }
};

/// Status lifecycle. `assigned -> pending` is the release that happens when a
/// provider is re-planned and the request is left out of its new route.
inline void transition(CustomerRequest& r, RequestStatus to) {
  using S = RequestStatus;
  const S from = r.status;
  const bool ok = (from == S::pending && (to == S::assigned || to == S::expired)) ||
                  (from == S::assigned &&
                   (to == S::served || to == S::expired || to == S::pending || to == S::assigned));
  if (!ok) {
    throw std::logic_error("request " + std::to_string(r.id.value) + ": illegal transition " +
                           to_string(from) + " -> " + to_string(to));
  }
  r.status = to;
}

enum class WaypointKind { capture, pickup, dropoff };

struct Waypoint {
  RequestId request;
  NodeId node;
  WaypointKind kind{WaypointKind::capture};
  double award{0.0};  // ride utility fixed at assignment time

  bool operator==(const Waypoint&) const = default;
};

struct ServiceProvider {
  ProviderId id;
  NodeId location;                   // last node reached
  double accumulated_utility{0.0};
  std::vector<Waypoint> route;
  std::optional<Waypoint> carrying;  // drop-off leg of an active ride
  std::optional<std::vector<Waypoint>> deferred_route;
  std::optional<NodeId> heading;     // set while travelling along an edge
  double position_progress{0.0};     // meters along location -> heading
  Minute busy_until{0};
  double total_distance{0.0};

  [[nodiscard]] bool at_node() const { return !heading.has_value(); }
  [[nodiscard]] bool idle() const { return route.empty() && !carrying; }

  [[nodiscard]] std::optional<Waypoint> current_target() const {
    if (carrying) return carrying;
    if (!route.empty()) return route.front();
    return std::nullopt;
  }
};

/// Hands a new route to a provider. Instructions are only accepted at a node;
/// otherwise the route is held until the next node arrival and false is returned.
inline bool set_route(ServiceProvider& p, std::vector<Waypoint> route) {
  if (p.at_node()) {
    p.route = std::move(route);
    p.deferred_route.reset();
    return true;
  }
  p.deferred_route = std::move(route);
  return false;
}

struct StepOutcome {
  double moved{0.0};
  std::optional<Waypoint> reached;
};

/// Moves a provider up to `budget_m` meters along shortest paths toward its
/// current target. Reaching the target pops it from the route and ends the
/// step; intermediate nodes are passed through.
inline StepOutcome advance_provider(ServiceProvider& p, const RoadGraph& graph,
                                    double budget_m = kProviderSpeed) {
  constexpr double eps = 1e-9;
  StepOutcome out;
  double budget = budget_m;
  for (;;) {
    if (p.heading) {
      const double len = graph.edge_length(p.location, *p.heading);
      const double rem = len - p.position_progress;
      if (budget + eps < rem) {
        p.position_progress += budget;
        out.moved += budget;
        break;
      }
      out.moved += rem;
      budget -= rem;
      p.location = *p.heading;
      p.heading.reset();
      p.position_progress = 0.0;
      if (p.deferred_route) {
        p.route = std::move(*p.deferred_route);
        p.deferred_route.reset();
      }
    }
    auto target = p.current_target();
    if (!target) break;
    if (target->node == p.location) {
      out.reached = target;
      if (p.carrying) {
        p.carrying.reset();
      } else {
        p.route.erase(p.route.begin());
      }
      break;
    }
    if (budget <= eps) break;
    p.heading = graph.next_hop(p.location, target->node);
    p.position_progress = 0.0;
  }
  p.total_distance += out.moved;
  return out;
}

class SimulationClock {
 public:
  explicit SimulationClock(Minute horizon) : horizon_(horizon) {
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
  }

  [[nodiscard]] Minute now() const { return now_; }
  [[nodiscard]] Minute horizon() const { return horizon_; }
  [[nodiscard]] bool done() const { return now_ >= horizon_; }

  void advance() {
    if (done()) throw std::logic_error("clock advanced past horizon");
    ++now_;
  }

 private:
  Minute now_{0};
  Minute horizon_;
};

}  // namespace fairdvrp
