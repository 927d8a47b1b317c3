#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

namespace fairdvrp {

/// Integer identifier tagged with the entity it names, so a provider id can
/// never be passed where a node id is expected.
template <class Tag>
struct Id {
  std::int64_t value{0};

  constexpr Id() = default;
  constexpr explicit Id(std::int64_t v) : value(v) {}

  constexpr auto operator<=>(const Id&) const = default;

  friend std::ostream& operator<<(std::ostream& os, Id id) { return os << id.value; }
};

struct NodeTag {};
struct ProviderTag {};
struct RequestTag {};

using NodeId = Id<NodeTag>;
using ProviderId = Id<ProviderTag>;
using RequestId = Id<RequestTag>;
using AreaId = int;

/// Simulation time in whole minutes.
using Minute = int;

inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// meters per minute
inline constexpr double kProviderSpeed = 70.0;

enum class Scenario { non_compliance, ride_hailing };

inline std::string to_string(Scenario s) {
  return s == Scenario::non_compliance ? "non_compliance" : "ride_hailing";
}

inline Scenario scenario_from_string(const std::string& s) {
  if (s == "non_compliance" || s == "parking") return Scenario::non_compliance;
  if (s == "ride_hailing" || s == "taxi") return Scenario::ride_hailing;
  throw std::invalid_argument("unknown scenario: " + s);
}

class UnreachableError : public std::runtime_error {
 public:
  UnreachableError(NodeId from, NodeId to)
      : std::runtime_error("node " + std::to_string(to.value) + " unreachable from node " +
                           std::to_string(from.value)),
        from_(from),
        to_(to) {}

  [[nodiscard]] NodeId from() const { return from_; }
  [[nodiscard]] NodeId to() const { return to_; }

 private:
  NodeId from_;
  NodeId to_;
};

}  // namespace fairdvrp

template <class Tag>
struct std::hash<fairdvrp::Id<Tag>> {
  std::size_t operator()(fairdvrp::Id<Tag> id) const noexcept {
    return std::hash<std::int64_t>{}(id.value);
  }
};
