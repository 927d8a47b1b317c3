#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "fairdvrp/geo.hpp"
#include "fairdvrp/types.hpp"
#include "fairdvrp/world.hpp"

namespace fairdvrp {

/// Uniform lat/lon grid over a bounding box. Points on or beyond the box edge
/// clamp into the border cells.
class AreaPartition {
 public:
  AreaPartition() = default;

  AreaPartition(BoundingBox box, int rows, int cols) : box_(box), rows_(rows), cols_(cols) {
    if (rows <= 0 || cols <= 0) throw std::invalid_argument("area grid dims must be positive");
  }

  AreaPartition(const RoadGraph& graph, int rows, int cols)
      : AreaPartition(graph.bounds(), rows, cols) {}

  [[nodiscard]] int rows() const { return rows_; }
  [[nodiscard]] int cols() const { return cols_; }
  [[nodiscard]] int area_count() const { return rows_ * cols_; }
  [[nodiscard]] const BoundingBox& box() const { return box_; }

  [[nodiscard]] AreaId area_of(double lat, double lon) const {
    return cell(lat, box_.min_lat, box_.max_lat, rows_) * cols_ +
           cell(lon, box_.min_lon, box_.max_lon, cols_);
  }

  [[nodiscard]] AreaId area_of(const RoadGraph& graph, NodeId node) const {
    const auto& n = graph.node(node);
    return area_of(n.lat, n.lon);
  }

 private:
  static int cell(double v, double lo, double hi, int n) {
    if (!(hi > lo)) return 0;
    const int c = static_cast<int>(std::floor((v - lo) / (hi - lo) * n));
    return std::clamp(c, 0, n - 1);
  }

  BoundingBox box_{};
  int rows_{1};
  int cols_{1};
};

/// Population variance (divides by the count); 0 for a singleton.
inline double population_variance(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("variance of an empty set");
  const double n = static_cast<double>(xs.size());
  const double mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  double acc = 0.0;
  for (double x : xs) acc += (x - mean) * (x - mean);
  return acc / n;
}

/// 1 when the provider stands on the violation's bay inside its window.
inline int capture_utility(NodeId provider_location, const CustomerRequest& c, Minute t) {
  const bool in_window = static_cast<double>(c.window_start) <= t &&
                         static_cast<double>(t) <= c.window_end;
  return in_window && provider_location == c.destination ? 1 : 0;
}

inline int capture_utility(const ServiceProvider& n, const CustomerRequest& c, Minute t) {
  return capture_utility(n.location, c, t);
}

/// Trip length minus the provider's approach distance, both great-circle.
inline double ride_utility(LatLon provider, LatLon start, LatLon destination) {
  return haversine(destination, start) - haversine(start, provider);
}

inline double ride_utility(const RoadGraph& graph, NodeId provider_location,
                           const CustomerRequest& c) {
  if (!c.start) throw std::invalid_argument("ride utility needs a pickup node");
  return ride_utility(graph.position(provider_location), graph.position(*c.start),
                      graph.position(c.destination));
}

struct AwardEvent {
  ProviderId provider;
  RequestId request;
  Minute time{0};
  double value{0.0};
};

inline double total_utility(std::span<const AwardEvent> events) {
  double sum = 0.0;
  for (const auto& e : events) sum += e.value;
  return sum;
}

inline double provider_fairness(const std::map<ProviderId, double>& per_provider_utility) {
  if (per_provider_utility.empty()) throw std::invalid_argument("provider fairness of no providers");
  std::vector<double> xs;
  xs.reserve(per_provider_utility.size());
  for (const auto& [id, u] : per_provider_utility) xs.push_back(u);
  return population_variance(xs);
}

struct AreaStat {
  int raised{0};
  int served{0};
  double capture_rate{0.0};
  double mean_wait{0.0};
};

struct CustomerFairness {
  double variance{0.0};            // rate variance or mean-wait variance
  double raw_count_variance{0.0};  // variance of raw per-area capture counts
  std::map<AreaId, AreaStat> per_area;
};

/// Area-level fairness over the requests released during the run. Areas
/// that raised nothing are left out. Ride requests still waiting at the
/// horizon count as having waited `horizon - window_start`.
inline CustomerFairness customer_fairness(Scenario scenario,
                                          std::span<const CustomerRequest> requests,
                                          std::span<const AwardEvent> awards, Minute horizon) {
  std::unordered_map<RequestId, const AwardEvent*> by_request;
  for (const auto& a : awards) by_request[a.request] = &a;

  std::map<AreaId, double> wait_sum;
  CustomerFairness out;
  for (const auto& r : requests) {
    auto& stat = out.per_area[r.area];
    ++stat.raised;
    auto it = by_request.find(r.id);
    if (it != by_request.end()) ++stat.served;
    if (scenario == Scenario::ride_hailing) {
      const Minute t = it != by_request.end() ? it->second->time : horizon;
      wait_sum[r.area] += static_cast<double>(t - r.window_start);
    }
  }
  if (out.per_area.empty()) return out;

  std::vector<double> primary;
  std::vector<double> raw;
  for (auto& [area, stat] : out.per_area) {
    stat.capture_rate = static_cast<double>(stat.served) / stat.raised;
    if (scenario == Scenario::ride_hailing) {
      stat.mean_wait = wait_sum[area] / stat.raised;
      primary.push_back(stat.mean_wait);
    } else {
      primary.push_back(stat.capture_rate);
    }
    raw.push_back(static_cast<double>(stat.served));
  }
  out.variance = population_variance(primary);
  out.raw_count_variance = population_variance(raw);
  return out;
}

struct MetricsReport {
  Scenario scenario{Scenario::non_compliance};
  double total_utility{0.0};
  double provider_fairness{0.0};
  double customer_fairness{0.0};
  double customer_fairness_raw{0.0};
  double total_distance_m{0.0};
  std::map<ProviderId, double> per_provider;
  std::map<AreaId, AreaStat> per_area;
  int served{0};
  int expired{0};
};

inline nlohmann::ordered_json to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["scenario"] = to_string(r.scenario);
  j["total_utility"] = r.total_utility;
  j["provider_fairness"] = r.provider_fairness;
  j["customer_fairness"] = r.customer_fairness;
  j["customer_fairness_raw"] = r.customer_fairness_raw;
  j["total_distance_m"] = r.total_distance_m;
  nlohmann::ordered_json providers = nlohmann::ordered_json::object();
  for (const auto& [id, u] : r.per_provider) providers[std::to_string(id.value)] = u;
  j["per_provider"] = providers;
  nlohmann::ordered_json areas = nlohmann::ordered_json::object();
  for (const auto& [id, s] : r.per_area) {
    nlohmann::ordered_json a;
    a["raised"] = s.raised;
    a["served"] = s.served;
    if (r.scenario == Scenario::ride_hailing) {
      a["mean_wait"] = s.mean_wait;
    } else {
      a["capture_rate"] = s.capture_rate;
    }
    areas[std::to_string(id)] = a;
  }
  j["per_area"] = areas;
  j["served"] = r.served;
  j["expired"] = r.expired;
  return j;
}

}  // namespace fairdvrp
