#pragma once
// Independent reference computations used only by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <vector>

#include "fairdvrp/world.hpp"

namespace oracle {

using fairdvrp::NodeId;
using fairdvrp::RoadGraph;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// All-pairs shortest path lengths (meters) by Floyd-Warshall, indexed by
/// position in graph.nodes().
inline std::vector<std::vector<double>> floyd_warshall(const RoadGraph& g) {
  const std::size_t n = g.size();
  std::vector<std::vector<double>> d(n, std::vector<double>(n, kInf));
  for (std::size_t i = 0; i < n; ++i) d[i][i] = 0.0;
  for (const auto& e : g.edges()) {
    auto a = g.index_of(e.from), b = g.index_of(e.to);
    d[a][b] = std::min(d[a][b], e.length_m);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] + d[k][j] < d[i][j]) d[i][j] = d[i][k] + d[k][j];
  return d;
}

/// Shortest length over every simple path, by depth-first enumeration.
inline double simple_path_minimum(const RoadGraph& g, NodeId from, NodeId to) {
  std::map<std::int64_t, std::vector<std::pair<std::int64_t, double>>> adj;
  for (const auto& e : g.edges()) adj[e.from.value].push_back({e.to.value, e.length_m});
  double best = kInf;
  std::vector<std::int64_t> stack{from.value};
  auto dfs = [&](auto&& self, std::int64_t at, double len) -> void {
    if (at == to.value) {
      best = std::min(best, len);
      return;
    }
    for (auto [nxt, w] : adj[at]) {
      if (std::find(stack.begin(), stack.end(), nxt) != stack.end()) continue;
      stack.push_back(nxt);
      self(self, nxt, len + w);
      stack.pop_back();
    }
  };
  dfs(dfs, from.value, 0.0);
  return best;
}

/// Great-circle distance through the chord between unit vectors.
inline double chord_distance(double lat1, double lon1, double lat2, double lon2,
                             double radius = 6371000.0) {
  auto vec = [](double lat, double lon) {
    const double la = lat * std::numbers::pi / 180.0, lo = lon * std::numbers::pi / 180.0;
    return std::array<double, 3>{std::cos(la) * std::cos(lo), std::cos(la) * std::sin(lo), std::sin(la)};
  };
  const auto a = vec(lat1, lon1), b = vec(lat2, lon2);
  const double c = std::sqrt((a[0] - b[0]) * (a[0] - b[0]) + (a[1] - b[1]) * (a[1] - b[1]) +
                             (a[2] - b[2]) * (a[2] - b[2]));
  return 2.0 * radius * std::asin(std::min(1.0, c / 2.0));
}

/// Mean of squared deviations, written out long-hand.
inline double variance(const std::vector<double>& xs) {
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double s = 0.0;
  for (double x : xs) s += (x - mean) * (x - mean);
  return s / static_cast<double>(xs.size());
}

/// Bidirectional path graph 0 - 1 - ... - (n-1), nodes `spacing` meters apart
/// along a meridian.
inline RoadGraph line_graph(int n, double spacing) {
  std::vector<RoadGraph::Node> nodes;
  std::vector<RoadGraph::Edge> edges;
  for (int i = 0; i < n; ++i) nodes.push_back({NodeId{i}, -37.8 + i * spacing / 111320.0, 144.96});
  for (int i = 0; i + 1 < n; ++i) {
    edges.push_back({NodeId{i}, NodeId{i + 1}, spacing});
    edges.push_back({NodeId{i + 1}, NodeId{i}, spacing});
  }
  return RoadGraph(std::move(nodes), std::move(edges));
}

/// Directed 4-node diamond with asymmetric lengths: 0->1->3 vs 0->2->3, plus a
/// 1->2 shortcut and a long direct 0->3 edge.
inline RoadGraph diamond_graph() {
  std::vector<RoadGraph::Node> nodes{{NodeId{0}, 0.0, 0.0},
                                     {NodeId{1}, 0.001, 0.001},
                                     {NodeId{2}, -0.001, 0.001},
                                     {NodeId{3}, 0.0, 0.002}};
  std::vector<RoadGraph::Edge> edges{{NodeId{0}, NodeId{1}, 140.0}, {NodeId{1}, NodeId{3}, 350.0},
                                     {NodeId{0}, NodeId{2}, 280.0}, {NodeId{2}, NodeId{3}, 70.0},
                                     {NodeId{1}, NodeId{2}, 105.0}, {NodeId{0}, NodeId{3}, 700.0},
                                     {NodeId{3}, NodeId{0}, 210.0}, {NodeId{2}, NodeId{1}, 35.0}};
  return RoadGraph(std::move(nodes), std::move(edges));
}

}  // namespace oracle
