#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fairdvrp/encoding.hpp"
#include "fairdvrp/metrics.hpp"
#include "fairdvrp/world.hpp"

namespace fairdvrp {

struct SyntheticParams {
  int bays{400};
  double extent_m{1900.0};   // side of the square lattice
  double spacing_m{100.0};
  double poisson_rate{0.5};  // violations per bay per hour
  double exp_mean_stay{20.0};  // minutes
  Minute horizon{480};
  std::uint64_t seed{1};
  double origin_lat{-37.8136};
  double origin_lon{144.9631};
  int grid_rows{4};
  int grid_cols{4};
  // bay rates scale with exp(-demand_skew * distance from the lattice centre
  // / half the extent), renormalized so the mean rate stays poisson_rate
  double demand_skew{0.0};

  void validate() const {
    if (bays < 1) throw std::invalid_argument("bays must be positive");
    if (!(extent_m >= 0.0) || !(spacing_m > 0.0)) throw std::invalid_argument("bad lattice extent");
    if (!(poisson_rate > 0.0)) throw std::invalid_argument("poisson_rate must be positive");
    if (!(exp_mean_stay > 0.0)) throw std::invalid_argument("exp_mean_stay must be positive");
    if (horizon <= 0) throw std::invalid_argument("horizon must be positive");
    if (!(demand_skew >= 0.0)) throw std::invalid_argument("demand_skew must be >= 0");
  }
};

struct SyntheticDataset {
  RoadGraph graph;
  AreaPartition partition;
  std::vector<NodeId> bays;
  std::vector<CustomerRequest> events;
};

/// Square lattice with bidirectional edges of `spacing_m`.
inline RoadGraph make_lattice(double extent_m, double spacing_m, double lat0, double lon0) {
  const int side = static_cast<int>(std::floor(extent_m / spacing_m + 1e-9)) + 1;
  constexpr double meters_per_degree = 111320.0;
  const double lon_scale = meters_per_degree * std::cos(lat0 * std::numbers::pi / 180.0);
  std::vector<RoadGraph::Node> nodes;
  std::vector<RoadGraph::Edge> edges;
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      nodes.push_back({NodeId{r * side + c}, lat0 + r * spacing_m / meters_per_degree,
                       lon0 + c * spacing_m / lon_scale});
    }
  }
  auto link = [&](int a, int b) {
    edges.push_back({NodeId{a}, NodeId{b}, spacing_m});
    edges.push_back({NodeId{b}, NodeId{a}, spacing_m});
  };
  for (int r = 0; r < side; ++r) {
    for (int c = 0; c < side; ++c) {
      if (c + 1 < side) link(r * side + c, r * side + c + 1);
      if (r + 1 < side) link(r * side + c, (r + 1) * side + c);
    }
  }
  return RoadGraph(std::move(nodes), std::move(edges));
}

namespace detail {

inline std::vector<NodeId> choose_bays(const RoadGraph& graph, int bays, Rng& rng) {
  std::vector<NodeId> all;
  for (const auto& n : graph.nodes()) all.push_back(n.id);
  if (static_cast<std::size_t>(bays) >= all.size()) return all;
  std::shuffle(all.begin(), all.end(), rng);
  all.resize(static_cast<std::size_t>(bays));
  std::sort(all.begin(), all.end());
  return all;
}

/// Per-bay rate multipliers with mean 1.
inline std::vector<double> bay_weights(const RoadGraph& graph, const std::vector<NodeId>& bays,
                                       double skew) {
  std::vector<double> w(bays.size(), 1.0);
  if (skew == 0.0 || bays.empty()) return w;
  const auto box = graph.bounds();
  const LatLon centre{(box.min_lat + box.max_lat) / 2.0, (box.min_lon + box.max_lon) / 2.0};
  const double half = std::max(1.0, haversine({box.min_lat, box.min_lon}, {box.max_lat, box.max_lon}) / 2.0);
  double sum = 0.0;
  for (std::size_t b = 0; b < bays.size(); ++b) {
    w[b] = std::exp(-skew * haversine(graph.position(bays[b]), centre) / half);
    sum += w[b];
  }
  for (auto& x : w) x *= static_cast<double>(bays.size()) / sum;
  return w;
}

}  // namespace detail

/// Parking violations: per bay a Poisson arrival process at `poisson_rate`
/// per hour, each violation lasting an exponential number of minutes
/// (rounded to whole minutes) with mean `exp_mean_stay`.
inline SyntheticDataset generate_synthetic(const SyntheticParams& params) {
  params.validate();
  SyntheticDataset ds;
  ds.graph = make_lattice(params.extent_m, params.spacing_m, params.origin_lat, params.origin_lon);
  ds.partition = AreaPartition(ds.graph, params.grid_rows, params.grid_cols);
  Rng rng(params.seed);
  ds.bays = detail::choose_bays(ds.graph, params.bays, rng);

  const auto weight = detail::bay_weights(ds.graph, ds.bays, params.demand_skew);
  std::exponential_distribution<double> stay(1.0 / params.exp_mean_stay);
  struct Raw {
    Minute start;
    std::size_t bay;
    double end;
  };
  std::vector<Raw> raw;
  for (std::size_t b = 0; b < ds.bays.size(); ++b) {
    std::exponential_distribution<double> gap(params.poisson_rate * weight[b] / 60.0);
    double t = 0.0;
    for (;;) {
      t += gap(rng);
      if (t >= params.horizon) break;
      const auto start = static_cast<Minute>(std::floor(t));
      raw.push_back({start, b, static_cast<double>(start) + std::round(stay(rng))});
    }
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    return a.start != b.start ? a.start < b.start : a.bay < b.bay;
  });
  ds.events.reserve(raw.size());
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CustomerRequest r;
    r.id = RequestId{static_cast<std::int64_t>(i)};
    r.destination = ds.bays[raw[i].bay];
    r.window_start = raw[i].start;
    r.window_end = raw[i].end;
    r.area = ds.partition.area_of(ds.graph, r.destination);
    ds.events.push_back(r);
  }
  return ds;
}

/// Ride requests on the same lattice: pickups arrive per bay as a Poisson
/// process, drop-offs are uniform over the other nodes, windows never close.
inline SyntheticDataset generate_synthetic_rides(const SyntheticParams& params) {
  params.validate();
  SyntheticDataset ds;
  ds.graph = make_lattice(params.extent_m, params.spacing_m, params.origin_lat, params.origin_lon);
  ds.partition = AreaPartition(ds.graph, params.grid_rows, params.grid_cols);
  Rng rng(params.seed);
  ds.bays = detail::choose_bays(ds.graph, params.bays, rng);
  const auto weight = detail::bay_weights(ds.graph, ds.bays, params.demand_skew);
  std::uniform_int_distribution<std::size_t> node(0, ds.graph.size() - 1);
  struct Raw {
    Minute start;
    std::size_t bay;
    NodeId dropoff;
  };
  std::vector<Raw> raw;
  for (std::size_t b = 0; b < ds.bays.size(); ++b) {
    std::exponential_distribution<double> gap(params.poisson_rate * weight[b] / 60.0);
    double t = 0.0;
    for (;;) {
      t += gap(rng);
      if (t >= params.horizon) break;
      NodeId drop = ds.graph.nodes()[node(rng)].id;
      if (ds.graph.size() > 1) {
        while (drop == ds.bays[b]) drop = ds.graph.nodes()[node(rng)].id;
      }
      raw.push_back({static_cast<Minute>(std::floor(t)), b, drop});
    }
  }
  std::stable_sort(raw.begin(), raw.end(), [](const Raw& a, const Raw& b) {
    return a.start != b.start ? a.start < b.start : a.bay < b.bay;
  });
  for (std::size_t i = 0; i < raw.size(); ++i) {
    CustomerRequest r;
    r.id = RequestId{static_cast<std::int64_t>(i)};
    r.start = ds.bays[raw[i].bay];
    r.destination = raw[i].dropoff;
    r.window_start = raw[i].start;
    r.window_end = kInfiniteTime;
    r.area = ds.partition.area_of(ds.graph, *r.start);
    ds.events.push_back(r);
  }
  return ds;
}

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& file, std::size_t line, const std::string& what)
      : std::runtime_error(file + ":" + std::to_string(line) + ": " + what), line_(line) {}

  [[nodiscard]] std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline std::string trim(std::string s) {
  auto not_space = [](unsigned char ch) { return !std::isspace(ch); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

struct CsvTable {
  std::string file;
  std::vector<std::string> header;
  std::vector<std::pair<std::size_t, std::vector<std::string>>> rows;  // (line number, fields)

  [[nodiscard]] std::size_t column(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw CsvError(file, 1, "missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  }
};

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable t;
  t.file = path;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (n == 1 && line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw CsvError(path, n, "expected " + std::to_string(t.header.size()) + " fields, got " +
                                  std::to_string(fields.size()));
    }
    t.rows.push_back({n, std::move(fields)});
  }
  if (t.header.empty()) throw CsvError(path, 1, "missing header row");
  return t;
}

inline double parse_double(const CsvTable& t, std::size_t line, const std::string& s,
                           const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size() || !std::isfinite(v)) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw CsvError(t.file, line, std::string("unparsable ") + what + " '" + s + "'");
  }
}

inline std::int64_t parse_int(const CsvTable& t, std::size_t line, const std::string& s,
                              const char* what) {
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) {
    throw CsvError(t.file, line, std::string("unparsable ") + what + " '" + s + "'");
  }
  return v;
}

inline std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const auto yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

struct ParsedTime {
  std::int64_t minutes{0};  // integer minutes, or absolute minutes for ISO stamps
  bool iso{false};
};

/// Integer minutes, or ISO-8601 "YYYY-MM-DD[T| ]HH:MM[:SS]" (seconds truncated).
inline ParsedTime parse_time(const CsvTable& t, std::size_t line, const std::string& s,
                             const char* what) {
  if (!s.empty() && s.find_first_not_of("-0123456789") == std::string::npos) {
    return {parse_int(t, line, s, what), false};
  }
  int y = 0, mo = 0, d = 0, h = 0, mi = 0, sec = 0;
  char sep = 0;
  int consumed = 0;
  const int got = std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d%n", &y, &mo, &d, &sep, &h, &mi, &consumed);
  if (got < 6 || (sep != 'T' && sep != ' ') || mo < 1 || mo > 12 || d < 1 || d > 31 || h > 23 ||
      mi > 59 || h < 0 || mi < 0) {
    throw CsvError(t.file, line, std::string("unparsable ") + what + " '" + s + "'");
  }
  std::string rest = s.substr(static_cast<std::size_t>(consumed));
  if (!rest.empty()) {
    if (rest[0] != ':' || std::sscanf(rest.c_str() + 1, "%2d", &sec) != 1 || sec > 60) {
      throw CsvError(t.file, line, std::string("unparsable ") + what + " '" + s + "'");
    }
  }
  const std::int64_t day = days_from_civil(y, static_cast<unsigned>(mo), static_cast<unsigned>(d));
  return {day * 1440 + h * 60 + mi, true};
}

/// ISO stamps become minutes since midnight of the earliest ISO day seen.
inline void rebase_iso(std::vector<ParsedTime*> stamps) {
  std::optional<std::int64_t> day0;
  for (auto* p : stamps) {
    if (p->iso) {
      const std::int64_t day = p->minutes >= 0 ? p->minutes / 1440 : (p->minutes - 1439) / 1440;
      day0 = day0 ? std::min(*day0, day) : day;
    }
  }
  if (!day0) return;
  for (auto* p : stamps) {
    if (p->iso) p->minutes -= *day0 * 1440;
  }
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(10);
  return out;
}

}  // namespace detail

inline void write_graph_csv(const std::string& dir, const RoadGraph& graph) {
  std::filesystem::create_directories(dir);
  auto nodes = detail::open_out(dir + "/nodes.csv");
  nodes << "node_id,lat,lon\n" << std::fixed << std::setprecision(9);
  for (const auto& n : graph.nodes()) nodes << n.id.value << ',' << n.lat << ',' << n.lon << '\n';
  auto edges = detail::open_out(dir + "/edges.csv");
  edges << "from,to,length_m\n" << std::setprecision(17);
  for (const auto& e : graph.edges()) edges << e.from.value << ',' << e.to.value << ',' << e.length_m << '\n';
  if (!nodes || !edges) throw std::runtime_error("failed writing graph to " + dir);
}

inline RoadGraph load_graph_csv(const std::string& dir) {
  const auto nt = detail::read_csv(dir + "/nodes.csv");
  const auto id_c = nt.column("node_id");
  const auto lat_c = nt.column("lat");
  const auto lon_c = nt.column("lon");
  std::vector<RoadGraph::Node> nodes;
  for (const auto& [line, f] : nt.rows) {
    nodes.push_back({NodeId{detail::parse_int(nt, line, f[id_c], "node_id")},
                     detail::parse_double(nt, line, f[lat_c], "lat"),
                     detail::parse_double(nt, line, f[lon_c], "lon")});
  }
  const auto et = detail::read_csv(dir + "/edges.csv");
  const auto from_c = et.column("from");
  const auto to_c = et.column("to");
  const auto len_c = et.column("length_m");
  std::vector<RoadGraph::Edge> edges;
  for (const auto& [line, f] : et.rows) {
    const double len = detail::parse_double(et, line, f[len_c], "length_m");
    if (!(len > 0.0)) throw CsvError(et.file, line, "edge length must be positive");
    edges.push_back({NodeId{detail::parse_int(et, line, f[from_c], "from")},
                     NodeId{detail::parse_int(et, line, f[to_c], "to")}, len});
  }
  return RoadGraph(std::move(nodes), std::move(edges));
}

/// Parking stream in the area_id,lat,lon,arrive_time,violation_time,
/// departure_time,marker layout. Times are integer minutes.
inline void write_parking_csv(const std::string& path, const std::vector<CustomerRequest>& events,
                              const RoadGraph& graph) {
  auto out = detail::open_out(path);
  out << "area_id,lat,lon,arrive_time,violation_time,departure_time,marker\n";
  out << std::fixed << std::setprecision(9);
  for (const auto& e : events) {
    const auto& n = graph.node(e.destination);
    out << e.area << ',' << n.lat << ',' << n.lon << ',' << e.window_start << ',' << e.window_start
        << ',' << static_cast<std::int64_t>(e.window_end) << ",bay" << e.destination.value << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// One request per row: window = [violation_time, departure_time], the bay is
/// the nearest node to (lat, lon). Area ids that are all integers are kept,
/// otherwise they are numbered in sorted order. The marker is ignored.
/// Rows are stably sorted by window start; ids are data-row indices.
inline std::vector<CustomerRequest> load_parking_csv(const std::string& path, const RoadGraph& graph) {
  const auto t = detail::read_csv(path);
  const auto area_c = t.column("area_id");
  const auto lat_c = t.column("lat");
  const auto lon_c = t.column("lon");
  const auto arrive_c = t.column("arrive_time");
  const auto viol_c = t.column("violation_time");
  const auto dep_c = t.column("departure_time");
  (void)t.column("marker");

  struct Row {
    std::size_t line;
    std::string area;
    NodeId node;
    detail::ParsedTime arrive, violation, departure;
  };
  std::vector<Row> rows;
  for (const auto& [line, f] : t.rows) {
    const double lat = detail::parse_double(t, line, f[lat_c], "lat");
    const double lon = detail::parse_double(t, line, f[lon_c], "lon");
    rows.push_back({line, f[area_c], graph.nearest_node(lat, lon),
                    detail::parse_time(t, line, f[arrive_c], "arrive_time"),
                    detail::parse_time(t, line, f[viol_c], "violation_time"),
                    detail::parse_time(t, line, f[dep_c], "departure_time")});
  }
  std::vector<detail::ParsedTime*> stamps;
  for (auto& r : rows) {
    stamps.push_back(&r.arrive);
    stamps.push_back(&r.violation);
    stamps.push_back(&r.departure);
  }
  detail::rebase_iso(stamps);

  bool numeric_areas = true;
  for (const auto& r : rows) {
    if (r.area.empty() || r.area.find_first_not_of("0123456789") != std::string::npos) numeric_areas = false;
  }
  std::map<std::string, AreaId> dense;
  if (!numeric_areas) {
    for (const auto& r : rows) dense.emplace(r.area, 0);
    AreaId next = 0;
    for (auto& [name, id] : dense) id = next++;
  }

  std::vector<CustomerRequest> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    if (r.departure.minutes < r.violation.minutes) {
      throw CsvError(t.file, r.line, "departure_time before violation_time");
    }
    CustomerRequest c;
    c.id = RequestId{static_cast<std::int64_t>(i)};
    c.destination = r.node;
    c.window_start = static_cast<Minute>(r.violation.minutes);
    c.window_end = static_cast<double>(r.departure.minutes);
    c.area = numeric_areas ? static_cast<AreaId>(std::stoll(r.area)) : dense.at(r.area);
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const CustomerRequest& a, const CustomerRequest& b) {
    return a.window_start < b.window_start;
  });
  return out;
}

inline void write_taxi_csv(const std::string& path, const std::vector<CustomerRequest>& events,
                           const RoadGraph& graph) {
  auto out = detail::open_out(path);
  out << "request_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n";
  out << std::fixed << std::setprecision(9);
  for (const auto& e : events) {
    if (!e.start) throw std::invalid_argument("taxi export needs pickup nodes");
    const auto& s = graph.node(*e.start);
    const auto& d = graph.node(e.destination);
    out << e.window_start << ',' << s.lat << ',' << s.lon << ',' << d.lat << ',' << d.lon << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// Ride requests snapped to the nearest nodes; windows never close. The area
/// is the grid cell of the pickup node. Coordinates outside the graph's
/// bounding box are rejected.
inline std::vector<CustomerRequest> load_taxi_csv(const std::string& path, const RoadGraph& graph,
                                                  const AreaPartition& partition) {
  const auto t = detail::read_csv(path);
  const auto time_c = t.column("request_time");
  const auto plat_c = t.column("pickup_lat");
  const auto plon_c = t.column("pickup_lon");
  const auto dlat_c = t.column("dropoff_lat");
  const auto dlon_c = t.column("dropoff_lon");
  const auto box = graph.bounds();
  struct Row {
    NodeId pickup, dropoff;
    detail::ParsedTime time;
  };
  std::vector<Row> rows;
  for (const auto& [line, f] : t.rows) {
    const double plat = detail::parse_double(t, line, f[plat_c], "pickup_lat");
    const double plon = detail::parse_double(t, line, f[plon_c], "pickup_lon");
    const double dlat = detail::parse_double(t, line, f[dlat_c], "dropoff_lat");
    const double dlon = detail::parse_double(t, line, f[dlon_c], "dropoff_lon");
    if (!box.contains(plat, plon) || !box.contains(dlat, dlon)) {
      throw CsvError(t.file, line, "coordinates outside the graph bounding box");
    }
    rows.push_back({graph.nearest_node(plat, plon), graph.nearest_node(dlat, dlon),
                    detail::parse_time(t, line, f[time_c], "request_time")});
  }
  std::vector<detail::ParsedTime*> stamps;
  for (auto& r : rows) stamps.push_back(&r.time);
  detail::rebase_iso(stamps);
  std::vector<CustomerRequest> out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CustomerRequest c;
    c.id = RequestId{static_cast<std::int64_t>(i)};
    c.start = rows[i].pickup;
    c.destination = rows[i].dropoff;
    c.window_start = static_cast<Minute>(rows[i].time.minutes);
    c.window_end = kInfiniteTime;
    c.area = partition.area_of(graph, rows[i].pickup);
    out.push_back(c);
  }
  std::stable_sort(out.begin(), out.end(), [](const CustomerRequest& a, const CustomerRequest& b) {
    return a.window_start < b.window_start;
  });
  return out;
}

inline void write_report_json(const std::string& path, const MetricsReport& report) {
  auto out = detail::open_out(path);
  out << to_json(report).dump(2) << '\n';
  if (!out) throw std::runtime_error("failed writing " + path);
}

}  // namespace fairdvrp
