#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "fairdvrp/baselines.hpp"
#include "fixtures.hpp"

using namespace fairdvrp;
using fixture::line_world;

namespace {

// one target per provider, providers in id order, best remaining score;
// written independently of the library loop
AllocationPlan reference_myopic(const fixture::World& w, bool by_probability) {
  const auto d = oracle::floyd_warshall(w.graph);
  AllocationPlan plan;
  std::vector<bool> taken(w.ctx.pending.size(), false);
  auto providers = w.ctx.providers;
  std::sort(providers.begin(), providers.end(), [](auto& a, auto& b) { return a.id < b.id; });
  for (const auto& p : providers) {
    if (!p.idle) continue;
    plan.routes[p.id];
    int pick = -1;
    double best_min = oracle::kInf;
    for (std::size_t j = 0; j < w.ctx.pending.size(); ++j) {
      if (taken[j]) continue;
      const double minutes =
          d[w.graph.index_of(p.location)][w.graph.index_of(w.ctx.pending[j].destination)] / 70.0;
      // higher probability is shorter travel; both rules rank by minutes here
      const double key = by_probability ? -std::exp(-minutes / w.ctx.mean_stay) : minutes;
      if (key < best_min) {
        best_min = key;
        pick = static_cast<int>(j);
      }
    }
    if (pick >= 0) {
      taken[static_cast<std::size_t>(pick)] = true;
      plan.routes[p.id].push_back(w.ctx.pending[static_cast<std::size_t>(pick)].id);
    }
  }
  for (std::size_t j = 0; j < taken.size(); ++j) {
    if (!taken[j]) plan.unassigned.push_back(w.ctx.pending[j].id);
  }
  return plan;
}

}  // namespace

TEST(GreedyProbability, SingleOptionIsAssigned) {
  auto w = line_world(4, {0}, {3});
  const auto plan = greedy_probability_plan(w.ctx);
  EXPECT_EQ(plan.routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{1}}));
  EXPECT_TRUE(plan.unassigned.empty());
}

TEST(GreedyProbability, LowerProviderIdWinsContestedRequest) {
  auto w = line_world(5, {2, 2}, {4});
  const auto plan = greedy_probability_plan(w.ctx);
  EXPECT_EQ(plan.routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{1}}));
  EXPECT_TRUE(plan.routes.at(ProviderId{2}).empty());
}

TEST(Nearest, EquidistantTieGoesToLowerRequestId) {
  auto w = line_world(5, {2}, {4, 0});
  const auto plan = nearest_plan(w.ctx);
  EXPECT_EQ(plan.routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{1}}));
  EXPECT_EQ(plan.unassigned, (std::vector<RequestId>{RequestId{2}}));
}

TEST(Greedy, ThreeByThreeMatchesReferenceTrace) {
  auto w = line_world(10, {0, 4, 9}, {5, 3, 8});
  // provider 1 (node 0) takes R2 (node 3), provider 2 (node 4) then R1
  // (node 5), provider 3 (node 9) R3 (node 8)
  for (bool prob : {true, false}) {
    const auto plan = prob ? greedy_probability_plan(w.ctx) : nearest_plan(w.ctx);
    EXPECT_EQ(plan, reference_myopic(w, prob));
    EXPECT_EQ(plan.routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{2}}));
    EXPECT_EQ(plan.routes.at(ProviderId{2}), (std::vector<RequestId>{RequestId{1}}));
    EXPECT_EQ(plan.routes.at(ProviderId{3}), (std::vector<RequestId>{RequestId{3}}));
  }
}

TEST(Greedy, RandomInstancesMatchReferenceAndNeverDoubleAssign) {
  Rng rng(4);
  for (int round = 0; round < 100; ++round) {
    std::uniform_int_distribution<int> node(0, 14);
    std::vector<int> pn, rn;
    for (int i = 0; i < 1 + round % 5; ++i) pn.push_back(node(rng));
    for (int i = 0; i < round % 7; ++i) rn.push_back(node(rng));
    auto w = line_world(15, pn, rn);
    if (round % 3 == 0) w.ctx.providers[0].idle = false;
    for (bool prob : {true, false}) {
      const auto plan = prob ? greedy_probability_plan(w.ctx) : nearest_plan(w.ctx);
      EXPECT_EQ(plan, reference_myopic(w, prob));
      std::vector<RequestId> all = plan.unassigned;
      for (const auto& [p, route] : plan.routes) {
        EXPECT_LE(route.size(), 1u);
        all.insert(all.end(), route.begin(), route.end());
      }
      std::sort(all.begin(), all.end());
      EXPECT_EQ(std::adjacent_find(all.begin(), all.end()), all.end());
      EXPECT_EQ(all.size(), rn.size());
    }
  }
}

TEST(Greedy, RidesRankByRideUtility) {
  // a long trip far away beats a short trip close by when its net utility is higher
  fixture::World w(oracle::line_graph(20, 100.0));
  w.ctx.scenario = Scenario::ride_hailing;
  w.ctx.providers.push_back({ProviderId{1}, NodeId{5}, 0.0, true});
  RequestSnapshot near_short{RequestId{1}, NodeId{5}, NodeId{6}, 0, kInfiniteTime, 0};
  RequestSnapshot far_long{RequestId{2}, NodeId{7}, NodeId{19}, 0, kInfiniteTime, 0};
  w.ctx.pending = {near_short, far_long};
  w.ctx.areas.assign(1, AreaLedger{});
  EXPECT_EQ(greedy_probability_plan(w.ctx).routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{2}}));
  EXPECT_EQ(nearest_plan(w.ctx).routes.at(ProviderId{1}), (std::vector<RequestId>{RequestId{1}}));
}

TEST(PlainGA, DeterministicAndEqualToStagesOff) {
  auto w = line_world(12, {0, 5, 11}, {1, 3, 4, 8, 10});
  GAConfig cfg;
  cfg.max_gen = 30;
  cfg.population_size = 20;
  cfg.seed = 5;
  const auto a = plain_ga_plan(w.ctx, cfg);
  EXPECT_EQ(a, plain_ga_plan(w.ctx, cfg));
  GAConfig off = cfg;
  off.provider_stage = off.customer_stage = false;
  EXPECT_EQ(a, run_fairga(w.ctx, off));
}

TEST(GA3, WeightedScoreMatchesDirectFormula) {
  auto w = line_world(8, {0, 7}, {1, 2, 6});
  w.ctx.providers[0].ledger = 1.5;
  w.ctx.pending[2].area = 1;
  w.ctx.areas = {AreaLedger{3.0, 1.0, 0, 0}, AreaLedger{2.0, 0.0, 0, 0}};
  const FitnessModel model(w.ctx);
  Rng rng(8);
  std::vector<Chromosome> pop;
  for (int i = 0; i < 3; ++i) pop.push_back(encode_random(w.ctx.idle_providers(), w.ctx.pending_ids(), rng));
  std::vector<std::pair<double, std::string>> want;
  const auto d = oracle::floyd_warshall(w.graph);
  for (const auto& c : pop) {
    const auto plan = decode(c);
    std::vector<double> ledger{1.5, 0.0};
    std::vector<double> captured{1.0, 0.0};
    double total = 0.0;
    for (const auto& [pid, route] : plan.routes) {
      NodeId at = w.ctx.providers[static_cast<std::size_t>(pid.value - 1)].location;
      double t = 0.0;
      for (auto rid : route) {
        const auto& r = w.ctx.pending[static_cast<std::size_t>(rid.value - 1)];
        t += d[w.graph.index_of(at)][w.graph.index_of(r.destination)] / 70.0;
        const double p = std::exp(-t / 20.0);
        ledger[static_cast<std::size_t>(pid.value - 1)] += p;
        captured[static_cast<std::size_t>(r.area)] += p;
        total += p;
        at = r.destination;
      }
    }
    const double score = total / 3.0 - oracle::variance({captured[0] / 3.0, captured[1] / 2.0}) -
                         oracle::variance(ledger);
    want.push_back({score, debug_dump(c)});
  }
  std::stable_sort(want.begin(), want.end(), [](auto& a, auto& b) { return a.first > b.first; });
  rank(pop, Criterion::weighted, model);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    EXPECT_EQ(debug_dump(pop[i]), want[i].second);
    EXPECT_NEAR(criterion_score(*pop[i].fitness, Criterion::weighted), want[i].first, 1e-12);
  }
}

TEST(GA3, NoFairnessSpreadReducesToUtilityRanking) {
  // one provider and one area: both variances vanish
  auto w = line_world(9, {4}, {0, 2, 7, 8});
  GAConfig cfg;
  cfg.max_gen = 30;
  cfg.population_size = 16;
  const auto a = run_fairga_detailed(w.ctx, ga3_config(cfg));
  const auto b = run_fairga_detailed(w.ctx, plain_ga_config(cfg));
  EXPECT_EQ(debug_dump(a.best), debug_dump(b.best));
  EXPECT_EQ(ga3_plan(w.ctx, cfg), ga3_plan(w.ctx, cfg));
}
