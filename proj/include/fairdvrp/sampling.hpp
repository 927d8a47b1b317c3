#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <queue>
#include <random>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "fairdvrp/geo.hpp"
#include "fairdvrp/world.hpp"

namespace fairdvrp {

namespace detail {

// Successive shortest paths with Dijkstra on reduced costs. All arc costs
// must be non-negative.
class MinCostFlow {
 public:
  explicit MinCostFlow(int n) : graph_(static_cast<std::size_t>(n)) {}

  int add_arc(int from, int to, std::int64_t cap, std::int64_t cost) {
    const int id = static_cast<int>(arcs_.size());
    arcs_.push_back({to, cap, cost});
    arcs_.push_back({from, 0, -cost});
    graph_[static_cast<std::size_t>(from)].push_back(id);
    graph_[static_cast<std::size_t>(to)].push_back(id + 1);
    return id;
  }

  [[nodiscard]] std::int64_t flow_on(int arc) const {
    return arcs_[static_cast<std::size_t>(arc) ^ 1U].cap;
  }

  std::pair<std::int64_t, std::int64_t> solve(int source, int sink, std::int64_t want) {
    constexpr std::int64_t inf = std::numeric_limits<std::int64_t>::max() / 4;
    const std::size_t n = graph_.size();
    std::vector<std::int64_t> potential(n, 0);
    std::vector<std::int64_t> dist(n);
    std::vector<int> via(n);
    std::int64_t flow = 0;
    std::int64_t cost = 0;
    while (flow < want) {
      std::fill(dist.begin(), dist.end(), inf);
      std::fill(via.begin(), via.end(), -1);
      using Item = std::pair<std::int64_t, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> heap;
      dist[static_cast<std::size_t>(source)] = 0;
      heap.push({0, source});
      while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[static_cast<std::size_t>(u)]) continue;
        for (int id : graph_[static_cast<std::size_t>(u)]) {
          const auto& a = arcs_[static_cast<std::size_t>(id)];
          if (a.cap <= 0) continue;
          const std::int64_t nd = d + a.cost + potential[static_cast<std::size_t>(u)] -
                                  potential[static_cast<std::size_t>(a.to)];
          if (nd < dist[static_cast<std::size_t>(a.to)]) {
            dist[static_cast<std::size_t>(a.to)] = nd;
            via[static_cast<std::size_t>(a.to)] = id;
            heap.push({nd, a.to});
          }
        }
      }
      if (dist[static_cast<std::size_t>(sink)] == inf) break;
      for (std::size_t v = 0; v < n; ++v) {
        if (dist[v] < inf) potential[v] += dist[v];
      }
      std::int64_t push = want - flow;
      for (int v = sink; v != source;) {
        const int id = via[static_cast<std::size_t>(v)];
        push = std::min(push, arcs_[static_cast<std::size_t>(id)].cap);
        v = arcs_[static_cast<std::size_t>(id) ^ 1U].to;
      }
      for (int v = sink; v != source;) {
        const int id = via[static_cast<std::size_t>(v)];
        arcs_[static_cast<std::size_t>(id)].cap -= push;
        arcs_[static_cast<std::size_t>(id) ^ 1U].cap += push;
        cost += push * arcs_[static_cast<std::size_t>(id)].cost;
        v = arcs_[static_cast<std::size_t>(id) ^ 1U].to;
      }
      flow += push;
    }
    return {flow, cost};
  }

 private:
  struct Arc {
    int to;
    std::int64_t cap;
    std::int64_t cost;
  };
  std::vector<Arc> arcs_;
  std::vector<std::vector<int>> graph_;
};

inline double half_sq_dist(LatLon a, LatLon b) {
  const double dy = a.lat - b.lat;
  const double dx = a.lon - b.lon;
  return 0.5 * (dx * dx + dy * dy);
}

}  // namespace detail

/// Sum over points of half the squared euclidean distance (in degree space)
/// to the assigned centroid.
inline double kmeans_objective(std::span<const LatLon> points, std::span<const LatLon> centroids,
                               std::span<const int> assignment) {
  double obj = 0.0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    obj += detail::half_sq_dist(points[i], centroids[static_cast<std::size_t>(assignment[i])]);
  }
  return obj;
}

/// Optimal assignment of points to fixed centroids such that every cluster
/// receives at least `tau` points. Solved as a transportation problem; costs
/// are quantized to 1e-9 of the largest point-centroid cost.
inline std::vector<int> constrained_assignment(std::span<const LatLon> points,
                                               std::span<const LatLon> centroids, int tau) {
  const int k = static_cast<int>(centroids.size());
  const auto m = static_cast<std::int64_t>(points.size());
  if (k < 1) throw std::invalid_argument("constrained assignment needs k >= 1");
  if (tau < 0 || static_cast<std::int64_t>(k) * tau > m) {
    throw std::invalid_argument("infeasible size constraint: k * tau exceeds the number of points");
  }

  // points at identical coordinates are interchangeable; group them
  std::map<std::pair<double, double>, std::vector<int>> groups;
  for (std::size_t i = 0; i < points.size(); ++i) {
    groups[{points[i].lat, points[i].lon}].push_back(static_cast<int>(i));
  }
  std::vector<std::pair<LatLon, std::vector<int>>> locs;
  locs.reserve(groups.size());
  for (auto& [key, members] : groups) locs.push_back({{key.first, key.second}, std::move(members)});

  double max_cost = 0.0;
  for (const auto& [pos, members] : locs) {
    for (const auto& c : centroids) max_cost = std::max(max_cost, detail::half_sq_dist(pos, c));
  }
  constexpr double resolution = 1e9;
  const double scale = max_cost > 0.0 ? resolution / max_cost : 0.0;
  // a unit routed past a minimum quota costs more than any assignment total
  const auto overflow_cost = static_cast<std::int64_t>(resolution) * (m + 1) + 1;

  const int u = static_cast<int>(locs.size());
  const int source = 0;
  const int sink = u + k + 1;
  detail::MinCostFlow flow(u + k + 2);
  std::vector<std::vector<int>> arc_of(static_cast<std::size_t>(u), std::vector<int>(static_cast<std::size_t>(k)));
  for (int i = 0; i < u; ++i) {
    const auto count = static_cast<std::int64_t>(locs[static_cast<std::size_t>(i)].second.size());
    flow.add_arc(source, 1 + i, count, 0);
    for (int h = 0; h < k; ++h) {
      const double c = detail::half_sq_dist(locs[static_cast<std::size_t>(i)].first,
                                            centroids[static_cast<std::size_t>(h)]);
      arc_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)] =
          flow.add_arc(1 + i, 1 + u + h, count, std::llround(c * scale));
    }
  }
  for (int h = 0; h < k; ++h) {
    flow.add_arc(1 + u + h, sink, tau, 0);
    flow.add_arc(1 + u + h, sink, m, overflow_cost);
  }
  flow.solve(source, sink, m);

  std::vector<int> assignment(points.size(), -1);
  for (int i = 0; i < u; ++i) {
    const auto& members = locs[static_cast<std::size_t>(i)].second;
    std::size_t next = 0;
    for (int h = 0; h < k; ++h) {
      auto f = flow.flow_on(arc_of[static_cast<std::size_t>(i)][static_cast<std::size_t>(h)]);
      for (; f > 0; --f) assignment[static_cast<std::size_t>(members[next++])] = h;
    }
  }
  return assignment;
}

struct ClusterModel {
  int k{0};
  int tau{0};
  std::vector<LatLon> centroids;
  std::vector<int> assignment;
  std::vector<double> demand_weight;   // members per cluster
  double objective{0.0};
  std::vector<double> objective_trace;  // after every assignment and update step
  int iterations{0};
};

struct KMeansOptions {
  int max_iterations{100};
  int restarts{4};
};

namespace detail {

inline std::vector<LatLon> kmeans_plus_plus(std::span<const LatLon> points, int k,
                                            std::mt19937_64& rng) {
  std::vector<LatLon> centers;
  std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
  centers.push_back(points[pick(rng)]);
  std::vector<double> d2(points.size());
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (std::size_t i = 0; i < points.size(); ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& c : centers) best = std::min(best, half_sq_dist(points[i], c));
      d2[i] = best;
      total += best;
    }
    if (total <= 0.0) {
      centers.push_back(points[pick(rng)]);
      continue;
    }
    std::uniform_real_distribution<double> u(0.0, total);
    double r = u(rng);
    std::size_t chosen = points.size() - 1;
    for (std::size_t i = 0; i < points.size(); ++i) {
      r -= d2[i];
      if (r < 0.0) {
        chosen = i;
        break;
      }
    }
    centers.push_back(points[chosen]);
  }
  return centers;
}

inline std::vector<LatLon> cluster_means(std::span<const LatLon> points,
                                         std::span<const int> assignment,
                                         std::span<const LatLon> previous) {
  std::vector<LatLon> sums(previous.size(), LatLon{0.0, 0.0});
  std::vector<int> counts(previous.size(), 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto h = static_cast<std::size_t>(assignment[i]);
    sums[h].lat += points[i].lat;
    sums[h].lon += points[i].lon;
    ++counts[h];
  }
  std::vector<LatLon> out(previous.begin(), previous.end());
  for (std::size_t h = 0; h < out.size(); ++h) {
    if (counts[h] > 0) out[h] = {sums[h].lat / counts[h], sums[h].lon / counts[h]};
  }
  return out;
}

}  // namespace detail

/// Lloyd iterations with an exact size-constrained assignment step; the best
/// of `options.restarts` k-means++ starts is returned.
inline ClusterModel constrained_kmeans(std::span<const LatLon> points, int k, int tau,
                                       std::uint64_t seed, KMeansOptions options = {}) {
  if (k < 1) throw std::invalid_argument("constrained_kmeans: k must be >= 1");
  if (points.empty() || static_cast<std::int64_t>(k) * tau > static_cast<std::int64_t>(points.size())) {
    throw std::invalid_argument("constrained_kmeans: infeasible, k * tau exceeds the number of points");
  }
  std::mt19937_64 rng(seed);
  ClusterModel best;
  bool have_best = false;
  for (int run = 0; run < std::max(1, options.restarts); ++run) {
    ClusterModel model;
    model.k = k;
    model.tau = tau;
    model.centroids = detail::kmeans_plus_plus(points, k, rng);
    model.assignment = constrained_assignment(points, model.centroids, tau);
    model.objective = kmeans_objective(points, model.centroids, model.assignment);
    model.objective_trace.push_back(model.objective);
    for (int it = 0; it < options.max_iterations; ++it) {
      model.iterations = it + 1;
      model.centroids = detail::cluster_means(points, model.assignment, model.centroids);
      const double updated = kmeans_objective(points, model.centroids, model.assignment);
      model.objective_trace.push_back(updated);
      auto next = constrained_assignment(points, model.centroids, tau);
      const double reassigned = kmeans_objective(points, model.centroids, next);
      // the solver's quantization may return a marginally worse tie; keep the old one then
      if (reassigned > updated) {
        model.objective = updated;
        model.objective_trace.push_back(updated);
        break;
      }
      model.objective_trace.push_back(reassigned);
      model.objective = reassigned;
      const bool stable = next == model.assignment;
      model.assignment = std::move(next);
      if (stable || !(reassigned < updated)) break;
    }
    if (!have_best || model.objective < best.objective) {
      best = std::move(model);
      have_best = true;
    }
  }
  best.demand_weight.assign(static_cast<std::size_t>(k), 0.0);
  for (int h : best.assignment) best.demand_weight[static_cast<std::size_t>(h)] += 1.0;
  return best;
}

/// Largest-remainder apportionment of `total` seats by `weights`; remainder
/// ties go to the lowest index. Zero total weight is treated as uniform.
inline std::vector<int> largest_remainder(std::span<const double> weights, int total) {
  const std::size_t k = weights.size();
  std::vector<int> counts(k, 0);
  if (k == 0 || total <= 0) return counts;
  double sum = 0.0;
  for (double w : weights) sum += w;
  std::vector<double> quota(k);
  for (std::size_t h = 0; h < k; ++h) {
    quota[h] = sum > 0.0 ? total * weights[h] / sum : static_cast<double>(total) / k;
  }
  int assigned = 0;
  std::vector<std::pair<double, std::size_t>> frac;
  for (std::size_t h = 0; h < k; ++h) {
    counts[h] = static_cast<int>(std::floor(quota[h] + 1e-12));
    assigned += counts[h];
    frac.push_back({quota[h] - counts[h], h});
  }
  std::stable_sort(frac.begin(), frac.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first + 1e-12; });
  for (std::size_t i = 0; assigned < total; i = (i + 1) % k) {
    ++counts[frac[i].second];
    ++assigned;
  }
  return counts;
}

/// Providers per centroid in proportion to cluster demand, each centroid
/// snapped to its nearest graph node.
inline std::vector<std::pair<NodeId, int>> distribute_providers(const ClusterModel& model,
                                                                const RoadGraph& graph,
                                                                int num_providers) {
  if (num_providers < 1) throw std::invalid_argument("distribute_providers: need >= 1 provider");
  const auto counts = largest_remainder(model.demand_weight, num_providers);
  std::vector<std::pair<NodeId, int>> out;
  out.reserve(counts.size());
  for (std::size_t h = 0; h < counts.size(); ++h) {
    out.push_back({graph.nearest_node(model.centroids[h].lat, model.centroids[h].lon), counts[h]});
  }
  return out;
}

/// k = min(providers, areas), tau = ceil(m / 2k).
inline std::pair<int, int> default_cluster_shape(int num_providers, int num_areas, int num_points) {
  const int k = std::max(1, std::min({num_providers, num_areas, num_points}));
  const int tau = (num_points + 2 * k - 1) / (2 * k);
  return {k, tau};
}

}  // namespace fairdvrp
