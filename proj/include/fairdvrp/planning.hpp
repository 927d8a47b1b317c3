#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fairdvrp/encoding.hpp"
#include "fairdvrp/geo.hpp"
#include "fairdvrp/metrics.hpp"
#include "fairdvrp/types.hpp"
#include "fairdvrp/world.hpp"

namespace fairdvrp {

struct ProviderSnapshot {
  ProviderId id;
  NodeId location;
  double ledger{0.0};  // accumulated utility so far
  bool idle{false};    // open to new instructions this epoch
};

struct RequestSnapshot {
  RequestId id;
  std::optional<NodeId> start;
  NodeId destination;
  Minute window_start{0};
  double window_end{kInfiniteTime};
  AreaId area{0};

  [[nodiscard]] NodeId service_node() const { return start ? *start : destination; }
};

/// Running per-area outcome totals used to project customer fairness.
struct AreaLedger {
  double raised{0.0};
  double captured{0.0};
  double wait_sum{0.0};    // waits already fixed (pickups, or lower bounds)
  double wait_count{0.0};
};

/// Read-only view of the world handed to a dispatch algorithm at an epoch.
struct PlanningContext {
  Scenario scenario{Scenario::non_compliance};
  Minute now{0};
  const RoadGraph* graph{nullptr};
  std::vector<ProviderSnapshot> providers;  // every provider, ascending id
  std::vector<RequestSnapshot> pending;     // requests open to planning, ascending id
  std::vector<AreaLedger> areas;
  double mean_stay{20.0};
  double unassigned_wait_penalty{15.0};

  [[nodiscard]] std::vector<ProviderId> idle_providers() const {
    std::vector<ProviderId> out;
    for (const auto& p : providers) {
      if (p.idle) out.push_back(p.id);
    }
    return out;
  }

  [[nodiscard]] std::vector<RequestId> pending_ids() const {
    std::vector<RequestId> out;
    out.reserve(pending.size());
    for (const auto& r : pending) out.push_back(r.id);
    return out;
  }
};

/// Chance a vehicle with exponentially distributed stay is still present
/// after `delay` minutes.
inline double capture_probability(double delay_minutes, double mean_stay) {
  if (!(mean_stay > 0.0)) throw std::invalid_argument("mean stay must be positive");
  return std::exp(-std::max(0.0, delay_minutes) / mean_stay);
}

/// Probability that a provider at `from`, reaching this request after
/// `queue_delay` minutes spent on earlier targets plus the travel time,
/// finds the vehicle still parked. Only meaningful for parking violations.
inline double capture_probability(const RoadGraph& graph, NodeId from, const RequestSnapshot& r,
                                  Minute now, double queue_delay, double mean_stay,
                                  Scenario scenario = Scenario::non_compliance) {
  if (scenario != Scenario::non_compliance) {
    throw std::invalid_argument("capture probability applies to parking violations only");
  }
  if (static_cast<double>(now) > r.window_end) return 0.0;
  return capture_probability(queue_delay + graph.shortest_travel_time(from, r.destination),
                             mean_stay);
}

/// Per-epoch compiled evaluator: travel times and geodesics between the
/// idle providers and pending requests are tabulated once so that a decoded
/// plan scores in time linear in its length. Scratch buffers make a model
/// single-threaded; build one per thread.
class FitnessModel {
 public:
  explicit FitnessModel(const PlanningContext& ctx) : ctx_(&ctx) {
    if (ctx.graph == nullptr) throw std::invalid_argument("planning context without graph");
    const auto& graph = *ctx.graph;
    for (std::size_t a = 0; a < ctx.providers.size(); ++a) {
      if (ctx.providers[a].idle) idle_to_all_.push_back(a);
    }
    p_ = idle_to_all_.size();
    r_ = ctx.pending.size();
    const bool ride = ctx.scenario == Scenario::ride_hailing;
    travel_.assign((p_ + r_) * r_, 0.0);
    if (ride) {
      approach_.assign((p_ + r_) * r_, 0.0);
      trip_tt_.assign(r_, 0.0);
      trip_len_.assign(r_, 0.0);
    }
    auto origin_node = [&](std::size_t o) {
      return o < p_ ? ctx.providers[idle_to_all_[o]].location : ctx.pending[o - p_].destination;
    };
    for (std::size_t o = 0; o < p_ + r_; ++o) {
      const NodeId from = origin_node(o);
      const LatLon from_pos = graph.position(from);
      for (std::size_t j = 0; j < r_; ++j) {
        const NodeId target = ctx.pending[j].service_node();
        travel_[o * r_ + j] = graph.shortest_travel_time(from, target);
        if (ride) approach_[o * r_ + j] = haversine(graph.position(target), from_pos);
      }
    }
    if (ride) {
      for (std::size_t j = 0; j < r_; ++j) {
        const auto& req = ctx.pending[j];
        if (!req.start) throw std::invalid_argument("ride request without pickup node");
        trip_tt_[j] = graph.shortest_travel_time(*req.start, req.destination);
        trip_len_[j] = haversine(graph.position(req.destination), graph.position(*req.start));
      }
    }
    for (const auto& p : ctx.providers) base_ledger_.push_back(p.ledger);
    pending_in_area_.assign(ctx.areas.size(), 0.0);
    for (const auto& req : ctx.pending) {
      if (req.area < 0 || static_cast<std::size_t>(req.area) >= ctx.areas.size()) {
        throw std::out_of_range("request area outside the area ledger");
      }
      pending_in_area_[static_cast<std::size_t>(req.area)] += 1.0;
    }
    ledger_scratch_.resize(base_ledger_.size());
    area_num_.resize(ctx.areas.size());
    area_den_.resize(ctx.areas.size());
  }

  [[nodiscard]] const PlanningContext& context() const { return *ctx_; }
  [[nodiscard]] std::size_t provider_count() const { return p_; }
  [[nodiscard]] std::size_t request_count() const { return r_; }
  [[nodiscard]] std::size_t all_index(std::size_t idle) const { return idle_to_all_[idle]; }
  [[nodiscard]] bool ride() const { return ctx_->scenario == Scenario::ride_hailing; }

  /// Minutes from origin `o` (idle provider o < P, else the end node of
  /// request o - P) to the service node of request j.
  [[nodiscard]] double travel(std::size_t o, std::size_t j) const { return travel_[o * r_ + j]; }

  /// Utility a request earns when reached `arrival` minutes from now
  /// coming from origin `o`: capture probability, or the ride utility.
  [[nodiscard]] double award(std::size_t o, std::size_t j, double arrival) const {
    if (ride()) return trip_len_[j] - approach_[o * r_ + j];
    return capture_probability(arrival, ctx_->mean_stay);
  }

  [[nodiscard]] double trip_time(std::size_t j) const { return ride() ? trip_tt_[j] : 0.0; }

  /// Scores a plan given as per-idle-provider lists of request indices.
  template <class Segments>
  Fitness evaluate(const Segments& segments) const {
    const auto& ctx = *ctx_;
    std::copy(base_ledger_.begin(), base_ledger_.end(), ledger_scratch_.begin());
    for (std::size_t a = 0; a < ctx.areas.size(); ++a) {
      if (ride()) {
        area_num_[a] = ctx.areas[a].wait_sum;
        area_den_[a] = ctx.areas[a].wait_count + pending_in_area_[a];
      } else {
        area_num_[a] = ctx.areas[a].captured;
        area_den_[a] = ctx.areas[a].raised;
      }
    }
    std::vector<char>& seen = seen_scratch_;
    seen.assign(r_, 0);
    double total = 0.0;
    for (std::size_t i = 0; i < segments.size(); ++i) {
      double t = 0.0;
      std::size_t o = i;
      for (auto jj : segments[i]) {
        const auto j = static_cast<std::size_t>(jj);
        t += travel(o, j);
        const double a = award(o, j, t);
        const auto area = static_cast<std::size_t>(ctx.pending[j].area);
        if (ride()) {
          area_num_[area] += static_cast<double>(ctx.now) + t - ctx.pending[j].window_start;
          t += trip_tt_[j];
        } else {
          area_num_[area] += a;
        }
        ledger_scratch_[idle_to_all_[i]] += a;
        total += a;
        seen[j] = 1;
        o = p_ + j;
      }
    }
    if (ride()) {
      for (std::size_t j = 0; j < r_; ++j) {
        if (!seen[j]) {
          area_num_[static_cast<std::size_t>(ctx.pending[j].area)] +=
              static_cast<double>(ctx.now) - ctx.pending[j].window_start +
              ctx.unassigned_wait_penalty;
        }
      }
    }
    Fitness f;
    f.utility = r_ > 0 ? total / static_cast<double>(r_) : 0.0;
    f.provider_fairness = ledger_scratch_.empty() ? 0.0 : population_variance(ledger_scratch_);
    std::vector<double>& vals = value_scratch_;
    vals.clear();
    for (std::size_t a = 0; a < area_den_.size(); ++a) {
      if (area_den_[a] > 0.0) vals.push_back(area_num_[a] / area_den_[a]);
    }
    f.customer_fairness = vals.empty() ? 0.0 : population_variance(vals);
    return f;
  }

  /// Evaluates a canonical chromosome (providers occupy the first P genes).
  Fitness evaluate(const Chromosome& c) const {
    decode_positions(c, p_, position_scratch_);
    for (auto& seg : position_scratch_) {
      for (auto& pos : seg) pos -= p_;
    }
    return evaluate(position_scratch_);
  }

 private:
  const PlanningContext* ctx_;
  std::size_t p_{0};
  std::size_t r_{0};
  std::vector<std::size_t> idle_to_all_;
  std::vector<double> travel_;
  std::vector<double> approach_;
  std::vector<double> trip_tt_;
  std::vector<double> trip_len_;
  std::vector<double> base_ledger_;
  std::vector<double> pending_in_area_;

  mutable std::vector<double> ledger_scratch_;
  mutable std::vector<double> area_num_;
  mutable std::vector<double> area_den_;
  mutable std::vector<char> seen_scratch_;
  mutable std::vector<double> value_scratch_;
  mutable std::vector<std::vector<std::size_t>> position_scratch_;
};

/// Common interface of every dispatch policy run by the simulator.
class DispatchAlgorithm {
 public:
  virtual ~DispatchAlgorithm() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  virtual AllocationPlan plan(const PlanningContext& ctx, std::uint64_t seed) = 0;
  /// Forget state carried between epochs.
  virtual void reset() {}
  /// False keeps a provider with an unfinished route out of re-planning.
  [[nodiscard]] virtual bool replans_committed() const { return true; }
};

}  // namespace fairdvrp
