#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "fairdvrp/data.hpp"
#include "oracles.hpp"

using namespace fairdvrp;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto p = fs::path(::testing::TempDir()) / ("fairdvrp_data_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string write_file(const fs::path& p, const std::string& body) {
  std::ofstream(p, std::ios::binary) << body;
  return p.string();
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

// 3x3 lattice, 100 m spacing, nodes 0..8 row-major from the origin
RoadGraph small_lattice() { return make_lattice(200.0, 100.0, -37.8, 144.9); }

void expect_line_error(const std::function<void()>& f, std::size_t line) {
  try {
    f();
    FAIL() << "expected CsvError";
  } catch (const CsvError& e) {
    EXPECT_EQ(e.line(), line) << e.what();
  }
}

}  // namespace

TEST(Lattice, GridShapeAndEdges) {
  const auto g = small_lattice();
  EXPECT_EQ(g.size(), 9u);
  EXPECT_EQ(g.edges().size(), 24u);  // 12 undirected neighbours, both ways
  EXPECT_DOUBLE_EQ(g.shortest_path_length(NodeId{0}, NodeId{8}), 400.0);
}

TEST(GenerateSynthetic, PoissonCountMeanWithinFivePercent) {
  SyntheticParams p;
  p.bays = 100;
  p.poisson_rate = 0.5;
  p.horizon = 480;
  p.extent_m = 900;
  double total = 0.0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    p.seed = seed;
    total += static_cast<double>(generate_synthetic(p).events.size());
  }
  const double expected = 100 * 0.5 * 8.0;
  EXPECT_NEAR(total / 20.0, expected, 0.05 * expected);
}

TEST(GenerateSynthetic, StayMeanWithinFivePercent) {
  SyntheticParams p;
  p.bays = 400;
  p.poisson_rate = 4.0;
  p.exp_mean_stay = 20.0;
  const auto ds = generate_synthetic(p);
  ASSERT_GE(ds.events.size(), 10000u);
  double sum = 0.0;
  for (const auto& e : ds.events) sum += e.window_end - static_cast<double>(e.window_start);
  EXPECT_NEAR(sum / static_cast<double>(ds.events.size()), 20.0, 1.0);
}

TEST(GenerateSynthetic, StreamShapeAndDeterminism) {
  SyntheticParams p;
  p.bays = 50;
  p.extent_m = 900;
  p.horizon = 120;
  p.seed = 9;
  const auto a = generate_synthetic(p);
  const auto b = generate_synthetic(p);
  ASSERT_EQ(a.events.size(), b.events.size());
  for (std::size_t i = 0; i < a.events.size(); ++i) {
    const auto& e = a.events[i];
    EXPECT_EQ(e.id, RequestId{static_cast<std::int64_t>(i)});
    EXPECT_EQ(e.destination, b.events[i].destination);
    EXPECT_EQ(e.window_end, b.events[i].window_end);
    EXPECT_FALSE(e.start);
    EXPECT_GE(e.window_end, static_cast<double>(e.window_start));
    EXPECT_LT(e.window_start, 120);
    if (i > 0) EXPECT_LE(a.events[i - 1].window_start, e.window_start);
    EXPECT_EQ(e.area, a.partition.area_of(a.graph, e.destination));
  }
  std::set<NodeId> bays(a.bays.begin(), a.bays.end());
  EXPECT_EQ(bays.size(), 50u);

  const auto d1 = scratch("det1"), d2 = scratch("det2");
  write_parking_csv((d1 / "e.csv").string(), a.events, a.graph);
  write_parking_csv((d2 / "e.csv").string(), b.events, b.graph);
  EXPECT_EQ(slurp(d1 / "e.csv"), slurp(d2 / "e.csv"));
  p.seed = 10;
  write_parking_csv((d2 / "e.csv").string(), generate_synthetic(p).events, a.graph);
  EXPECT_NE(slurp(d1 / "e.csv"), slurp(d2 / "e.csv"));
}

TEST(GenerateSynthetic, DemandSkewConcentratesTowardTheCentreAndKeepsVolume) {
  SyntheticParams p;
  p.bays = 400;
  p.poisson_rate = 1.0;
  double flat = 0.0, skewed = 0.0;
  double flat_centre = 0.0, skewed_centre = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    p.seed = seed;
    for (double skew : {0.0, 2.0}) {
      p.demand_skew = skew;
      const auto ds = generate_synthetic(p);
      const auto box = ds.graph.bounds();
      const LatLon centre{(box.min_lat + box.max_lat) / 2, (box.min_lon + box.max_lon) / 2};
      double near = 0.0;
      for (const auto& e : ds.events) {
        if (haversine(ds.graph.position(e.destination), centre) < 500.0) near += 1.0;
      }
      (skew == 0.0 ? flat : skewed) += static_cast<double>(ds.events.size());
      (skew == 0.0 ? flat_centre : skewed_centre) += near / static_cast<double>(ds.events.size());
    }
  }
  EXPECT_NEAR(skewed / flat, 1.0, 0.05);
  EXPECT_GT(skewed_centre, 1.5 * flat_centre);
}

TEST(GenerateSyntheticRides, PickupsDiffFromDropoffsAndWindowsNeverClose) {
  SyntheticParams p;
  p.bays = 30;
  p.extent_m = 500;
  p.horizon = 120;
  const auto ds = generate_synthetic_rides(p);
  ASSERT_FALSE(ds.events.empty());
  for (const auto& e : ds.events) {
    ASSERT_TRUE(e.start);
    EXPECT_NE(*e.start, e.destination);
    EXPECT_EQ(e.window_end, kInfiniteTime);
    EXPECT_EQ(e.area, ds.partition.area_of(ds.graph, *e.start));
  }
}

TEST(SyntheticParams, Validation) {
  SyntheticParams p;
  p.poisson_rate = 0.0;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
  p = {};
  p.exp_mean_stay = -1.0;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
  p = {};
  p.horizon = 0;
  EXPECT_THROW(generate_synthetic(p), std::invalid_argument);
}

TEST(LoadParkingCsv, FixtureRoundTrip) {
  const auto g = small_lattice();
  const auto n4 = g.node(NodeId{4}), n8 = g.node(NodeId{8}), n0 = g.node(NodeId{0});
  std::ostringstream body;
  body << std::setprecision(12) << "area_id,lat,lon,arrive_time,violation_time,departure_time,marker\n"
       << "2," << n4.lat << ',' << n4.lon << ",10,15,40,bay4\n"
       << "0," << n8.lat + 1e-5 << ',' << n8.lon << ",3,5,5,x\n"
       << "1," << n0.lat << ',' << n0.lon << ",20,22,30,\n";
  const auto path = write_file(scratch("fixture") / "p.csv", body.str());
  const auto events = load_parking_csv(path, g);
  ASSERT_EQ(events.size(), 3u);
  // sorted by window start: row 2 (t_s 5), row 1 (t_s 15), row 3 (t_s 22)
  EXPECT_EQ(events[0].id, RequestId{1});
  EXPECT_EQ(events[0].destination, NodeId{8});
  EXPECT_EQ(events[0].window_start, 5);
  EXPECT_EQ(events[0].window_end, 5.0);  // zero-width window
  EXPECT_EQ(events[0].area, 0);
  EXPECT_EQ(events[1].id, RequestId{0});
  EXPECT_EQ(events[1].destination, NodeId{4});
  EXPECT_EQ(events[1].window_start, 15);
  EXPECT_EQ(events[1].window_end, 40.0);
  EXPECT_EQ(events[1].area, 2);
  EXPECT_EQ(events[2].destination, NodeId{0});
  EXPECT_FALSE(events[2].start);

  // a zero-width window is capturable only at its one minute
  EXPECT_EQ(capture_utility(NodeId{8}, events[0], 5), 1);
  EXPECT_EQ(capture_utility(NodeId{8}, events[0], 4), 0);
  EXPECT_EQ(capture_utility(NodeId{8}, events[0], 6), 0);
}

TEST(LoadParkingCsv, IsoTimestampsAndNamedAreas) {
  const auto g = small_lattice();
  const auto n = g.node(NodeId{3});
  std::ostringstream body;
  body << std::setprecision(12) << "area_id,lat,lon,arrive_time,violation_time,departure_time,marker\n"
       << "north," << n.lat << ',' << n.lon << ",2024-03-05T08:00,2024-03-05T08:10,2024-03-05 09:00:30,m\n"
       << "south," << n.lat << ',' << n.lon << ",2024-03-05T07:00,2024-03-05T07:05,2024-03-06T00:05,m\n";
  const auto events = load_parking_csv(write_file(scratch("iso") / "p.csv", body.str()), g);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].window_start, 7 * 60 + 5);
  EXPECT_EQ(events[0].window_end, 24 * 60 + 5.0);
  EXPECT_EQ(events[0].area, 1);  // "south" after "north"
  EXPECT_EQ(events[1].window_start, 8 * 60 + 10);
  EXPECT_EQ(events[1].window_end, 9 * 60.0);
  EXPECT_EQ(events[1].area, 0);
}

TEST(LoadParkingCsv, RowErrorsCarryLineNumbers) {
  const auto g = small_lattice();
  const auto dir = scratch("errors");
  const std::string header = "area_id,lat,lon,arrive_time,violation_time,departure_time,marker\n";
  const auto ok = "0,-37.8,144.9,1,2,3,m\n";
  expect_line_error([&] { load_parking_csv(write_file(dir / "a.csv", header + ok + "0,-37.8,144.9,1,9,3,m\n"), g); }, 3);
  expect_line_error([&] { load_parking_csv(write_file(dir / "b.csv", header + ok + ok + "0,-37.8,144.9,1,yesterday,3,m\n"), g); }, 4);
  expect_line_error([&] { load_parking_csv(write_file(dir / "c.csv", header + "0,-37.8,144.9,1,2024-13-01T00:00,3,m\n"), g); }, 2);
  expect_line_error([&] { load_parking_csv(write_file(dir / "d.csv", header + "0,-37.8,144.9,1,2\n"), g); }, 2);
  expect_line_error([&] { load_parking_csv(write_file(dir / "e.csv", header + "0,north,144.9,1,2,3,m\n"), g); }, 2);
  // missing column is reported against the header line
  expect_line_error([&] { load_parking_csv(write_file(dir / "f.csv", "area_id,lat,lon,arrive_time,violation_time,marker\n"), g); }, 1);
  EXPECT_THROW(load_parking_csv((dir / "absent.csv").string(), g), std::runtime_error);
}

TEST(LoadParkingCsv, QuotedFieldsAndBom) {
  const auto g = small_lattice();
  const std::string body =
      "\xEF\xBB\xBF" "area_id,lat,lon,arrive_time,violation_time,departure_time,marker\r\n"
      "\"7\",-37.8,144.9,0,1,4,\"bay, quoted\"\r\n";
  const auto events = load_parking_csv(write_file(scratch("bom") / "p.csv", body), g);
  ASSERT_EQ(events.size(), 1u);
  EXPECT_EQ(events[0].area, 7);
  EXPECT_EQ(events[0].window_end, 4.0);
}

TEST(LoadParkingCsv, WriterLoaderRoundTripIsIdempotent) {
  SyntheticParams p;
  p.bays = 40;
  p.extent_m = 700;
  p.horizon = 90;
  const auto ds = generate_synthetic(p);
  const auto dir = scratch("roundtrip");
  write_parking_csv((dir / "a.csv").string(), ds.events, ds.graph);
  const auto once = load_parking_csv((dir / "a.csv").string(), ds.graph);
  ASSERT_EQ(once.size(), ds.events.size());
  for (std::size_t i = 0; i < once.size(); ++i) {
    EXPECT_EQ(once[i].id, ds.events[i].id);
    EXPECT_EQ(once[i].destination, ds.events[i].destination);
    EXPECT_EQ(once[i].window_start, ds.events[i].window_start);
    EXPECT_EQ(once[i].window_end, ds.events[i].window_end);
    EXPECT_EQ(once[i].area, ds.events[i].area);
  }
  write_parking_csv((dir / "b.csv").string(), once, ds.graph);
  EXPECT_EQ(slurp(dir / "a.csv"), slurp(dir / "b.csv"));
}

TEST(LoadTaxiCsv, FixtureRoundTripAndInfiniteWindows) {
  const auto g = small_lattice();
  const AreaPartition part(g, 3, 3);
  const auto a = g.node(NodeId{1}), b = g.node(NodeId{7}), c = g.node(NodeId{5});
  std::ostringstream body;
  body << std::setprecision(12) << "request_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n"
       << "30," << a.lat << ',' << a.lon << ',' << b.lat << ',' << b.lon << '\n'
       << "12," << c.lat << ',' << c.lon << ',' << a.lat << ',' << a.lon << '\n';
  const auto events = load_taxi_csv(write_file(scratch("taxi") / "t.csv", body.str()), g, part);
  ASSERT_EQ(events.size(), 2u);
  EXPECT_EQ(events[0].window_start, 12);
  EXPECT_EQ(*events[0].start, NodeId{5});
  EXPECT_EQ(events[0].destination, NodeId{1});
  EXPECT_EQ(events[1].id, RequestId{0});
  EXPECT_EQ(*events[1].start, NodeId{1});
  EXPECT_EQ(events[1].destination, NodeId{7});
  for (const auto& e : events) {
    EXPECT_EQ(e.window_end, kInfiniteTime);
    EXPECT_EQ(e.area, part.area_of(g, *e.start));
  }
}

TEST(LoadTaxiCsv, OutsideBoundingBoxIsRejected) {
  const auto g = small_lattice();
  const AreaPartition part(g, 2, 2);
  const std::string body =
      "request_time,pickup_lat,pickup_lon,dropoff_lat,dropoff_lon\n"
      "1,-37.8,144.9,-37.8,144.9\n"
      "2,-37.8,144.9,-36.0,144.9\n";
  expect_line_error([&] { load_taxi_csv(write_file(scratch("box") / "t.csv", body), g, part); }, 3);
}

TEST(LoadTaxiCsv, WriterLoaderRoundTrip) {
  SyntheticParams p;
  p.bays = 20;
  p.extent_m = 500;
  p.horizon = 60;
  const auto ds = generate_synthetic_rides(p);
  const auto path = (scratch("taxi_rt") / "t.csv").string();
  write_taxi_csv(path, ds.events, ds.graph);
  const auto back = load_taxi_csv(path, ds.graph, ds.partition);
  ASSERT_EQ(back.size(), ds.events.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    EXPECT_EQ(back[i].start, ds.events[i].start);
    EXPECT_EQ(back[i].destination, ds.events[i].destination);
    EXPECT_EQ(back[i].window_start, ds.events[i].window_start);
    EXPECT_EQ(back[i].area, ds.events[i].area);
  }
}

TEST(GraphCsv, RoundTripPreservesShortestPaths) {
  const auto g = oracle::diamond_graph();
  const auto dir = scratch("graph");
  write_graph_csv(dir.string(), g);
  const auto back = load_graph_csv(dir.string());
  ASSERT_EQ(back.size(), g.size());
  for (const auto& a : g.nodes()) {
    EXPECT_NEAR(back.node(a.id).lat, a.lat, 1e-9);
    for (const auto& b : g.nodes()) {
      EXPECT_NEAR(back.shortest_path_length(a.id, b.id), g.shortest_path_length(a.id, b.id), 1e-9);
    }
  }
  write_file(dir / "edges.csv", "from,to,length_m\n0,1,0\n");
  expect_line_error([&] { load_graph_csv(dir.string()); }, 2);
}

TEST(ReportJson, WritesParsableReport) {
  MetricsReport r;
  r.total_utility = 3.0;
  r.per_provider[ProviderId{0}] = 3.0;
  const auto path = scratch("report") / "r.json";
  write_report_json(path.string(), r);
  const auto j = nlohmann::json::parse(slurp(path));
  EXPECT_EQ(j.at("total_utility").get<double>(), 3.0);
}
