// Command-line harness: generate datasets, run one simulation, or run a
// comparison / ablation batch.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "fairdvrp/experiment.hpp"

using namespace fairdvrp;

namespace {

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return nlohmann::json::parse(in);
}

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

int cmd_generate(const Globals& g, const std::string& scenario_name, SyntheticParams params) {
  if (!g.config.empty()) {
    auto j = read_json(g.config);
    if (j.contains("synthetic")) params = j.at("synthetic").get<SyntheticParams>();
  }
  if (g.seed) params.seed = *g.seed;
  const auto scenario = scenario_from_string(scenario_name);
  const std::string dir = g.out.empty() ? "data" : g.out;
  auto ds = scenario == Scenario::ride_hailing ? generate_synthetic_rides(params) : generate_synthetic(params);
  write_graph_csv(dir, ds.graph);
  if (scenario == Scenario::ride_hailing) {
    write_taxi_csv(dir + "/events.csv", ds.events, ds.graph);
  } else {
    write_parking_csv(dir + "/events.csv", ds.events, ds.graph);
  }
  std::cout << "wrote " << ds.graph.size() << " nodes, " << ds.events.size() << " events to " << dir << '\n';
  return 0;
}

struct SimulateArgs {
  std::string scenario{"non_compliance"};
  std::string algo{"2fairga"};
  int providers{20};
  std::string graph;
  std::string events;
  std::string history;
  std::string trace;
  std::string placement;
  bool cold_start{false};
  int max_gen{0};
  int population{0};
  int horizon{480};
  int grid_rows{4};
  int grid_cols{4};
  double mean_stay{20.0};
};

int cmd_simulate(const Globals& g, const SimulateArgs& a) {
  GAConfig ga;
  ScenarioConfig cfg;
  if (!g.config.empty()) {
    auto j = read_json(g.config);
    ga = load_ga_config(g.config);
    if (j.contains("scenario") && j.at("scenario").is_object()) {
      const auto& s = j.at("scenario");
      if (s.contains("epoch")) cfg.epoch = s.at("epoch").get<int>();
      if (s.contains("unassigned_wait_penalty")) {
        cfg.unassigned_wait_penalty = s.at("unassigned_wait_penalty").get<double>();
      }
    }
  }
  if (a.cold_start) ga.warm_start = false;
  if (a.max_gen > 0) ga.max_gen = a.max_gen;
  if (a.population > 0) ga.population_size = a.population;

  cfg.scenario = scenario_from_string(a.scenario);
  cfg.providers = a.providers;
  cfg.seed = g.seed.value_or(1);
  cfg.horizon = a.horizon;
  cfg.grid_rows = a.grid_rows;
  cfg.grid_cols = a.grid_cols;
  cfg.mean_stay = a.mean_stay;
  cfg.placement = a.placement.empty() ? algorithm_info(a.algo).placement : placement_from_string(a.placement);

  const RoadGraph graph = load_graph_csv(a.graph);
  auto events = load_events(a.events, cfg.scenario, graph, cfg.grid_rows, cfg.grid_cols);
  std::vector<CustomerRequest> history;
  if (!a.history.empty()) history = load_events(a.history, cfg.scenario, graph, cfg.grid_rows, cfg.grid_cols);

  auto algo = make_algorithm(a.algo, ga);
  std::optional<std::ofstream> trace;
  if (!a.trace.empty()) {
    trace.emplace(a.trace, std::ios::binary);
    if (!*trace) throw std::runtime_error("cannot write " + a.trace);
  }
  const auto result =
      run_simulation(cfg, *algo, graph, std::move(events), history, trace ? &*trace : nullptr);
  const std::string out = g.out.empty() ? "report.json" : g.out;
  write_report_json(out, result.report);
  write_results_header(std::cout);
  write_result_row(std::cout, make_row(a.algo, cfg, result.report));
  return 0;
}

struct BatchArgs {
  std::vector<std::string> algos;
  std::vector<int> providers;
  std::vector<std::uint64_t> seeds;
  std::string scenario;
  int max_gen{0};
  int population{0};
  int horizon{0};
};

int cmd_batch(const Globals& g, const BatchArgs& a, const std::vector<std::string>& default_algos) {
  ExperimentSpec spec;
  spec.algorithms = default_algos;
  if (!g.config.empty()) {
    auto j = read_json(g.config);
    if (!j.contains("algorithms")) j["algorithms"] = default_algos;
    spec = j.get<ExperimentSpec>();
  }
  if (!a.algos.empty()) spec.algorithms = a.algos;
  if (!a.providers.empty()) spec.providers = a.providers;
  if (!a.seeds.empty()) spec.seeds = a.seeds;
  if (g.seed && a.seeds.empty()) spec.seeds = {*g.seed};
  if (!a.scenario.empty()) spec.scenario = scenario_from_string(a.scenario);
  if (a.max_gen > 0) spec.ga.max_gen = a.max_gen;
  if (a.population > 0) spec.ga.population_size = a.population;
  if (a.horizon > 0) spec.synthetic.horizon = a.horizon;
  if (!g.out.empty()) spec.out_dir = g.out;
  spec.validate();

  const auto outcome = run_experiment(spec, &std::cerr);
  write_experiment(spec, outcome);
  print_summary(std::cout, summarize(outcome.rows));
  for (const auto& f : outcome.failures) std::cerr << "failed cell: " << f << '\n';
  return outcome.failures.empty() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-aware dynamic vehicle routing simulator"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 1;
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_option("--config", g.config, "JSON configuration file");
  app.add_option("--out", g.out, "Output file or directory");
  app.fallthrough();

  auto* gen = app.add_subcommand("generate", "Write a synthetic graph and event stream");
  std::string gen_scenario = "non_compliance";
  SyntheticParams params;
  gen->add_option("--scenario", gen_scenario, "non_compliance or ride_hailing");
  gen->add_option("--bays", params.bays, "Number of bays (request locations)");
  gen->add_option("--extent", params.extent_m, "Lattice side in meters");
  gen->add_option("--rate", params.poisson_rate, "Arrivals per bay per hour");
  gen->add_option("--mean-stay", params.exp_mean_stay, "Mean violation length in minutes");
  gen->add_option("--horizon", params.horizon, "Minutes");
  gen->add_option("--demand-skew", params.demand_skew, "Concentrate demand toward the centre");

  auto* sim = app.add_subcommand("simulate", "Run one simulation and write a metrics report");
  SimulateArgs sa;
  sim->add_option("--scenario", sa.scenario, "non_compliance or ride_hailing");
  sim->add_option("--algo", sa.algo, "Dispatch algorithm");
  sim->add_option("--providers", sa.providers, "Provider count");
  sim->add_option("--graph", sa.graph, "Directory with nodes.csv and edges.csv")->required();
  sim->add_option("--events", sa.events, "Event CSV")->required();
  sim->add_option("--history", sa.history, "Demand history CSV for clustered placement");
  sim->add_option("--trace", sa.trace, "Per-minute provider trace CSV");
  sim->add_option("--placement", sa.placement, "clustered, random or fixed");
  sim->add_flag("--cold-start", sa.cold_start, "Restart the GA population every epoch");
  sim->add_option("--max-gen", sa.max_gen, "GA generations per epoch");
  sim->add_option("--population", sa.population, "GA population size");
  sim->add_option("--horizon", sa.horizon, "Minutes");
  sim->add_option("--grid-rows", sa.grid_rows, "Area grid rows");
  sim->add_option("--grid-cols", sa.grid_cols, "Area grid columns");
  sim->add_option("--mean-stay", sa.mean_stay, "Believed mean parking stay, minutes");

  BatchArgs ba;
  auto add_batch = [&](CLI::App* cmd) {
    cmd->add_option("--algos", ba.algos, "Algorithms to run");
    cmd->add_option("--providers", ba.providers, "Provider counts");
    cmd->add_option("--seeds", ba.seeds, "Seeds");
    cmd->add_option("--scenario", ba.scenario, "non_compliance or ride_hailing");
    cmd->add_option("--max-gen", ba.max_gen, "GA generations per epoch");
    cmd->add_option("--population", ba.population, "GA population size");
    cmd->add_option("--horizon", ba.horizon, "Minutes");
  };
  auto* cmp = app.add_subcommand("compare", "Run algorithms x provider counts x seeds");
  add_batch(cmp);
  auto* abl = app.add_subcommand("ablate", "Run the ablation variants");
  add_batch(abl);

  CLI11_PARSE(app, argc, argv);
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*gen) return cmd_generate(g, gen_scenario, params);
    if (*sim) return cmd_simulate(g, sa);
    if (*cmp) return cmd_batch(g, ba, compare_algorithms());
    if (*abl) return cmd_batch(g, ba, ablation_algorithms());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
