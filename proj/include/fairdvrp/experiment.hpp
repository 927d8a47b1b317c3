#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "fairdvrp/baselines.hpp"
#include "fairdvrp/data.hpp"
#include "fairdvrp/fairga.hpp"
#include "fairdvrp/simulator.hpp"

namespace fairdvrp {

struct AlgorithmInfo {
  std::string name;
  PlacementMode placement;
  std::string description;
};

inline const std::vector<AlgorithmInfo>& algorithm_registry() {
  static const std::vector<AlgorithmInfo> registry{
      {"2fairga", PlacementMode::clustered, "clustered placement, provider and customer fairness"},
      {"ga", PlacementMode::random, "LERK genetic algorithm ranked by utility"},
      {"ga3", PlacementMode::random, "GA ranked by U - F_customer - F_provider"},
      {"greedy", PlacementMode::random, "one target per provider, highest award first"},
      {"nearest", PlacementMode::random, "one target per provider, closest first"},
      {"ga-cluster-provider-fair", PlacementMode::clustered, "clustered placement, provider fairness only"},
      {"ga-fair", PlacementMode::random, "both fairness stages, random placement"},
      {"ga-provider-fair", PlacementMode::random, "provider fairness only, random placement"},
      {"ga-customer-fair", PlacementMode::random, "customer fairness only, random placement"},
  };
  return registry;
}

inline const AlgorithmInfo& algorithm_info(const std::string& name) {
  for (const auto& a : algorithm_registry()) {
    if (a.name == name) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

inline std::unique_ptr<DispatchAlgorithm> make_algorithm(const std::string& name, const GAConfig& ga) {
  (void)algorithm_info(name);
  if (name == "greedy") return std::make_unique<GreedyProbabilityDispatch>();
  if (name == "nearest") return std::make_unique<NearestDispatch>();
  GAConfig cfg = ga;
  if (name == "ga") {
    cfg = plain_ga_config(cfg);
  } else if (name == "ga3") {
    cfg = ga3_config(cfg);
  } else {
    cfg.weighted_sum = false;
    cfg.provider_stage = name != "ga-customer-fair";
    cfg.customer_stage = name != "ga-cluster-provider-fair" && name != "ga-provider-fair";
  }
  return std::make_unique<GeneticDispatch>(name, cfg);
}

inline const std::vector<std::string>& compare_algorithms() {
  static const std::vector<std::string> v{"2fairga", "ga", "ga3", "greedy", "nearest"};
  return v;
}

inline const std::vector<std::string>& ablation_algorithms() {
  static const std::vector<std::string> v{"2fairga",          "ga-cluster-provider-fair",
                                          "ga-fair",          "ga-provider-fair",
                                          "ga-customer-fair", "ga3"};
  return v;
}

inline void to_json(nlohmann::json& j, const SyntheticParams& p) {
  j = nlohmann::json{{"bays", p.bays},
                     {"extent_m", p.extent_m},
                     {"spacing_m", p.spacing_m},
                     {"poisson_rate", p.poisson_rate},
                     {"exp_mean_stay", p.exp_mean_stay},
                     {"horizon", p.horizon},
                     {"seed", p.seed},
                     {"origin_lat", p.origin_lat},
                     {"origin_lon", p.origin_lon},
                     {"grid_rows", p.grid_rows},
                     {"grid_cols", p.grid_cols},
                     {"demand_skew", p.demand_skew}};
}

inline void from_json(const nlohmann::json& j, SyntheticParams& p) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("bays", p.bays);
  get("extent_m", p.extent_m);
  get("spacing_m", p.spacing_m);
  get("poisson_rate", p.poisson_rate);
  get("exp_mean_stay", p.exp_mean_stay);
  get("horizon", p.horizon);
  get("seed", p.seed);
  get("origin_lat", p.origin_lat);
  get("origin_lon", p.origin_lon);
  get("grid_rows", p.grid_rows);
  get("grid_cols", p.grid_cols);
  get("demand_skew", p.demand_skew);
  p.validate();
}

/// A batch of runs: every algorithm x provider count x seed. Without an
/// events file each seed draws its own synthetic dataset, and clustered
/// placement learns from a second, independently seeded draw.
struct ExperimentSpec {
  std::vector<std::string> algorithms{compare_algorithms()};
  Scenario scenario{Scenario::non_compliance};
  std::vector<int> providers{20, 30, 50};
  std::vector<std::uint64_t> seeds{1, 2, 3};
  SyntheticParams synthetic;
  std::optional<std::string> graph_dir;
  std::optional<std::string> events_file;
  std::optional<std::string> history_file;
  std::optional<PlacementMode> placement;  // overrides each algorithm's default
  std::optional<double> mean_stay;         // defaults to synthetic.exp_mean_stay
  Minute epoch{1};
  double unassigned_wait_penalty{15.0};
  GAConfig ga;
  std::string out_dir{"results"};

  void validate() const {
    if (algorithms.empty() || providers.empty() || seeds.empty()) {
      throw std::invalid_argument("experiment needs at least one algorithm, provider count and seed");
    }
    for (const auto& a : algorithms) (void)algorithm_info(a);
    for (int n : providers) {
      if (n < 1) throw std::invalid_argument("provider counts must be positive");
    }
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
      throw std::invalid_argument("seeds must be distinct");
    }
    if (graph_dir.has_value() != events_file.has_value()) {
      throw std::invalid_argument("graph and events must be given together");
    }
    synthetic.validate();
    ga.validate();
  }
};

inline void from_json(const nlohmann::json& j, ExperimentSpec& s) {
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  get("algorithms", s.algorithms);
  if (j.contains("scenario")) s.scenario = scenario_from_string(j.at("scenario").get<std::string>());
  get("providers", s.providers);
  get("seeds", s.seeds);
  if (j.contains("synthetic")) s.synthetic = j.at("synthetic").get<SyntheticParams>();
  if (j.contains("graph")) s.graph_dir = j.at("graph").get<std::string>();
  if (j.contains("events")) s.events_file = j.at("events").get<std::string>();
  if (j.contains("history")) s.history_file = j.at("history").get<std::string>();
  if (j.contains("placement")) s.placement = placement_from_string(j.at("placement").get<std::string>());
  if (j.contains("mean_stay")) s.mean_stay = j.at("mean_stay").get<double>();
  if (j.contains("horizon")) s.synthetic.horizon = j.at("horizon").get<Minute>();
  get("epoch", s.epoch);
  get("unassigned_wait_penalty", s.unassigned_wait_penalty);
  if (j.contains("ga")) s.ga = j.at("ga").get<GAConfig>();
  get("out", s.out_dir);
  s.validate();
}

inline ExperimentSpec load_experiment_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open experiment spec " + path);
  return nlohmann::json::parse(in).get<ExperimentSpec>();
}

struct ResultRow {
  std::string algo;
  Scenario scenario{Scenario::non_compliance};
  int providers{0};
  std::uint64_t seed{0};
  double total_utility{0.0};
  double provider_fairness{0.0};
  double customer_fairness{0.0};
  double total_distance{0.0};

  [[nodiscard]] auto key() const { return std::tie(algo, scenario, providers, seed); }
};

inline ResultRow make_row(const std::string& algo, const ScenarioConfig& cfg, const MetricsReport& r) {
  return {algo,          cfg.scenario,        cfg.providers,       cfg.seed,
          r.total_utility, r.provider_fairness, r.customer_fairness, r.total_distance_m};
}

inline void sort_rows(std::vector<ResultRow>& rows) {
  std::sort(rows.begin(), rows.end(), [](const ResultRow& a, const ResultRow& b) { return a.key() < b.key(); });
}

inline void write_results_header(std::ostream& os) {
  os << "algo,scenario,providers,seed,total_utility,provider_fairness,customer_fairness,total_distance\n";
}

inline void write_result_row(std::ostream& os, const ResultRow& r) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(8);
  s << r.algo << ',' << to_string(r.scenario) << ',' << r.providers << ',' << r.seed << ','
    << r.total_utility << ',' << r.provider_fairness << ',' << r.customer_fairness << ','
    << r.total_distance << '\n';
  os << s.str();
}

/// Rows in canonical (algo, scenario, providers, seed) order.
inline void write_results_csv(const std::string& path, std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_results_header(out);
  for (const auto& r : rows) write_result_row(out, r);
  if (!out) throw std::runtime_error("failed writing " + path);
}

struct SummaryCell {
  std::string algo;
  Scenario scenario{Scenario::non_compliance};
  int providers{0};
  int runs{0};
  double total_utility{0.0};
  double provider_fairness{0.0};
  double customer_fairness{0.0};
  double total_distance{0.0};
};

/// Arithmetic means per (algo, scenario, providers), from the rows alone.
inline std::vector<SummaryCell> summarize(std::vector<ResultRow> rows) {
  sort_rows(rows);
  std::vector<SummaryCell> out;
  for (const auto& r : rows) {
    if (out.empty() || out.back().algo != r.algo || out.back().scenario != r.scenario ||
        out.back().providers != r.providers) {
      out.push_back({r.algo, r.scenario, r.providers});
    }
    auto& c = out.back();
    ++c.runs;
    c.total_utility += r.total_utility;
    c.provider_fairness += r.provider_fairness;
    c.customer_fairness += r.customer_fairness;
    c.total_distance += r.total_distance;
  }
  for (auto& c : out) {
    const double n = c.runs;
    c.total_utility /= n;
    c.provider_fairness /= n;
    c.customer_fairness /= n;
    c.total_distance /= n;
  }
  return out;
}

inline void write_summary_csv(const std::string& path, const std::vector<SummaryCell>& cells) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "algo,scenario,providers,runs,provider_fairness,customer_fairness,total_utility,total_distance\n";
  out << std::fixed << std::setprecision(8);
  for (const auto& c : cells) {
    out << c.algo << ',' << to_string(c.scenario) << ',' << c.providers << ',' << c.runs << ','
        << c.provider_fairness << ',' << c.customer_fairness << ',' << c.total_utility << ','
        << c.total_distance << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path);
}

/// Fixed-width table: one block per metric, algorithms down, provider counts across.
inline void print_summary(std::ostream& os, const std::vector<SummaryCell>& cells) {
  std::vector<int> counts;
  std::vector<std::string> algos;
  for (const auto& c : cells) {
    if (std::find(counts.begin(), counts.end(), c.providers) == counts.end()) counts.push_back(c.providers);
    if (std::find(algos.begin(), algos.end(), c.algo) == algos.end()) algos.push_back(c.algo);
  }
  std::sort(counts.begin(), counts.end());
  const std::pair<const char*, double SummaryCell::*> metrics[] = {
      {"provider fairness (variance)", &SummaryCell::provider_fairness},
      {"customer fairness (variance)", &SummaryCell::customer_fairness},
      {"total utility", &SummaryCell::total_utility},
      {"total distance (m)", &SummaryCell::total_distance}};
  std::ostringstream s;
  for (const auto& [title, field] : metrics) {
    s << title << '\n' << std::left << std::setw(26) << "algo";
    for (int n : counts) s << std::right << std::setw(16) << ("N=" + std::to_string(n));
    s << '\n';
    for (const auto& a : algos) {
      s << std::left << std::setw(26) << a;
      for (int n : counts) {
        auto it = std::find_if(cells.begin(), cells.end(),
                               [&](const SummaryCell& c) { return c.algo == a && c.providers == n; });
        if (it == cells.end()) {
          s << std::right << std::setw(16) << "-";
        } else {
          std::ostringstream v;
          v << std::setprecision(6) << (*it).*field;
          s << std::right << std::setw(16) << v.str();
        }
      }
      s << '\n';
    }
    s << '\n';
  }
  os << s.str();
}

struct Dataset {
  RoadGraph graph;
  std::vector<CustomerRequest> events;
  std::vector<CustomerRequest> history;
};

inline Dataset synthetic_dataset(const SyntheticParams& params, Scenario scenario) {
  auto draw = [&](const SyntheticParams& p) {
    return scenario == Scenario::ride_hailing ? generate_synthetic_rides(p) : generate_synthetic(p);
  };
  auto ds = draw(params);
  SyntheticParams hp = params;
  hp.seed = mix_seed(params.seed, 0x4157);
  auto hist = draw(hp);
  return {std::move(ds.graph), std::move(ds.events), std::move(hist.events)};
}

inline std::vector<CustomerRequest> load_events(const std::string& path, Scenario scenario,
                                                const RoadGraph& graph, int rows, int cols) {
  if (scenario == Scenario::ride_hailing) return load_taxi_csv(path, graph, AreaPartition(graph, rows, cols));
  return load_parking_csv(path, graph);
}

struct ExperimentOutcome {
  std::vector<ResultRow> rows;
  std::vector<std::string> failures;
};

/// Runs every cell; a failing cell is recorded and the rest still run.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr) {
  spec.validate();
  ExperimentOutcome outcome;
  std::optional<Dataset> fixed;
  if (spec.events_file) {
    RoadGraph g = load_graph_csv(*spec.graph_dir);
    auto ev = load_events(*spec.events_file, spec.scenario, g, spec.synthetic.grid_rows, spec.synthetic.grid_cols);
    std::vector<CustomerRequest> hist;
    if (spec.history_file) {
      hist = load_events(*spec.history_file, spec.scenario, g, spec.synthetic.grid_rows, spec.synthetic.grid_cols);
    }
    fixed = Dataset{std::move(g), std::move(ev), std::move(hist)};
  }
  std::map<std::uint64_t, Dataset> drawn;
  for (const auto& algo : spec.algorithms) {
    for (int n : spec.providers) {
      for (auto seed : spec.seeds) {
        const std::string cell =
            algo + " providers=" + std::to_string(n) + " seed=" + std::to_string(seed);
        try {
          const Dataset* ds = nullptr;
          if (fixed) {
            ds = &*fixed;
          } else {
            auto it = drawn.find(seed);
            if (it == drawn.end()) {
              SyntheticParams p = spec.synthetic;
              p.seed = seed;
              it = drawn.emplace(seed, synthetic_dataset(p, spec.scenario)).first;
            }
            ds = &it->second;
          }
          ScenarioConfig cfg;
          cfg.scenario = spec.scenario;
          cfg.horizon = spec.synthetic.horizon;
          cfg.epoch = spec.epoch;
          cfg.providers = n;
          cfg.placement = spec.placement.value_or(algorithm_info(algo).placement);
          cfg.grid_rows = spec.synthetic.grid_rows;
          cfg.grid_cols = spec.synthetic.grid_cols;
          cfg.seed = seed;
          cfg.mean_stay = spec.mean_stay.value_or(spec.synthetic.exp_mean_stay);
          cfg.unassigned_wait_penalty = spec.unassigned_wait_penalty;
          auto dispatcher = make_algorithm(algo, spec.ga);
          const auto result = run_simulation(cfg, *dispatcher, ds->graph, ds->events, ds->history);
          outcome.rows.push_back(make_row(algo, cfg, result.report));
          if (log) *log << "done   " << cell << '\n';
        } catch (const std::exception& e) {
          outcome.failures.push_back(cell + ": " + e.what());
          if (log) *log << "FAILED " << cell << ": " << e.what() << '\n';
        }
      }
    }
  }
  sort_rows(outcome.rows);
  return outcome;
}

/// Writes results.csv and summary.csv under spec.out_dir.
inline void write_experiment(const ExperimentSpec& spec, const ExperimentOutcome& outcome) {
  std::filesystem::create_directories(spec.out_dir);
  write_results_csv(spec.out_dir + "/results.csv", outcome.rows);
  write_summary_csv(spec.out_dir + "/summary.csv", summarize(outcome.rows));
}

}  // namespace fairdvrp
