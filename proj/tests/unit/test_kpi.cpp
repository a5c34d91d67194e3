#include <gtest/gtest.h>

#include "podscale/engine.hpp"
#include "podscale/error.hpp"
#include "podscale/harness.hpp"
#include "podscale/kpi.hpp"
#include "podscale/scenario.hpp"

using namespace podscale;

namespace {

constexpr ServiceId S1{1}, S2{2}, S3{3};

TickRecord rec(int tick, ServiceId id, double response, Millicores applied = 0, Millicores external = 0) {
  TickRecord r;
  r.tick = tick;
  r.service = id;
  r.response_s = response;
  r.applied_delta_mc = applied;
  r.external_delta_mc = external;
  return r;
}

}  // namespace

TEST(Kpi, ViolationIsStrict) {
  EXPECT_FALSE(is_violation(0.25));
  EXPECT_TRUE(is_violation(0.2500001));
  EXPECT_FALSE(is_violation(0.0));
}

TEST(Kpi, HandComputedThreeTicksTwoServices) {
  const EpisodeLog log{
      rec(0, S1, 0.10, 25), rec(0, S2, 0.30, -50),
      rec(1, S1, 0.25, 0),  rec(1, S2, 0.50, 50, -10),
      rec(2, S1, 0.40, -25), rec(2, S2, 0.20, 0),
  };
  const auto k = compute_kpis(log, 0, 2);
  ASSERT_EQ(k.size(), 2u);
  EXPECT_EQ(k[0].service, S1);
  EXPECT_EQ(k[0].ticks, 3);
  EXPECT_EQ(k[0].violations, 1);
  EXPECT_NEAR(k[0].violation_pct, 100.0 / 3.0, 1e-12);
  EXPECT_NEAR(k[0].mean_response_s, 0.25, 1e-12);
  EXPECT_EQ(k[0].resource_delta_mc, 50.0);
  EXPECT_EQ(k[1].violations, 2);
  EXPECT_NEAR(k[1].violation_pct, 200.0 / 3.0, 1e-12);
  EXPECT_NEAR(k[1].mean_response_s, 1.0 / 3.0, 1e-12);
  EXPECT_EQ(k[1].resource_delta_mc, 110.0);

  const auto tail = compute_kpis(log, 1, 1);
  EXPECT_EQ(tail[0].ticks, 1);
  EXPECT_EQ(tail[1].resource_delta_mc, 60.0);
  EXPECT_TRUE(compute_kpis(log, 5, 9).empty());
}

TEST(Kpi, SampleStandardDeviation) {
  const Stat s = summarize({2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0});
  EXPECT_DOUBLE_EQ(s.mean, 5.0);
  EXPECT_NEAR(s.stddev, std::sqrt(32.0 / 7.0), 1e-12);
  EXPECT_EQ(summarize({3.0}).stddev, 0.0);
  EXPECT_EQ(summarize({}).mean, 0.0);
}

TEST(Kpi, AggregateAcrossRuns) {
  const std::vector<EpisodeLog> runs{
      {rec(0, S1, 0.1), rec(0, S2, 0.3)},
      {rec(0, S1, 0.3), rec(0, S2, 0.3)},
  };
  const KpiReport r = aggregate_kpis("x", "heuristic", 4, {{"all", 0, 0}}, runs);
  EXPECT_EQ(r.iterations, 2);
  const auto& w = r.window("all");
  EXPECT_NEAR(w.service(S1).mean_response_s.mean, 0.2, 1e-12);
  EXPECT_NEAR(w.service(S1).mean_response_s.stddev, std::sqrt(0.02), 1e-12);
  EXPECT_NEAR(w.service(S1).violation_pct.mean, 50.0, 1e-12);
  EXPECT_EQ(w.service(S2).violation_pct.mean, 100.0);
  EXPECT_NEAR(w.violation_pct, 75.0, 1e-12);
  EXPECT_NEAR(w.mean_response_s, 0.25, 1e-12);
  EXPECT_THROW(r.window("none"), ConfigError);
  EXPECT_THROW(w.service(S3), ConfigError);
}

TEST(Kpi, ReportJsonRoundTrip) {
  const std::vector<EpisodeLog> runs{{rec(0, S1, 0.1, 5), rec(1, S1, 0.7)}, {rec(0, S1, 0.2), rec(1, S1, 0.1)}};
  const KpiReport r = aggregate_kpis("x", "discrete", 9, {{"all", 0, 1}, {"late", 1, 1}}, runs);
  const std::string text = r.to_json().dump();
  EXPECT_EQ(KpiReport::from_json(nlohmann::json::parse(text)).to_json().dump(), text);
  EXPECT_THROW(KpiReport::from_json({{"scenario", "x"}}), ConfigError);
}

TEST(Kpi, IdleClusterNeverViolates) {
  const Scenario s = scenarios::idle();
  EngineConfig c;
  const ExperimentResult res = run_experiment(c, s, nullptr, {3, true, 1});
  for (const auto& svc : res.report.window("all").services) {
    EXPECT_EQ(svc.violation_pct.mean, 0.0);
  }
  for (const auto& r : res.runs[0]) {
    const double w = static_cast<double>(s.service(r.service).spec.work_per_request_mcs);
    EXPECT_NEAR(r.response_s, w / static_cast<double>(r.limit_mc), 1e-12);
  }
}

TEST(Kpi, HeuristicDynamicLoadWorstServiceIsTheSecond) {
  EngineConfig c;
  c.seed = 7;
  const ExperimentResult res = run_experiment(c, scenarios::dynamic_load(), nullptr, {5, true, 1});
  const auto& w = res.report.window("all");
  const double r1 = w.service(S1).mean_response_s.mean;
  const double r2 = w.service(S2).mean_response_s.mean;
  const double r3 = w.service(S3).mean_response_s.mean;
  EXPECT_GT(r2, r1);
  EXPECT_GT(r2, r3);
}

TEST(Kpi, ExperimentsAreReproducible) {
  EngineConfig c;
  c.seed = 3;
  const auto a = run_experiment(c, scenarios::dynamic_load(), nullptr, {4, true, 1});
  const auto b = run_experiment(c, scenarios::dynamic_load(), nullptr, {4, true, 2});
  EXPECT_EQ(a.report.to_json().dump(), b.report.to_json().dump());
  EXPECT_NE(iteration_seed(3, 0), iteration_seed(3, 1));
}
