#pragma once

#include <filesystem>
#include <vector>

#include "podscale/engine.hpp"
#include "podscale/kpi.hpp"
#include "podscale/scenario.hpp"

namespace podscale {

struct ExperimentOptions {
  int iterations = 20;
  // Poisson arrival noise per iteration; without it every iteration of a
  // greedy policy replays the same trace.
  bool jitter = true;
  int workers = 1;
};

struct ExperimentResult {
  KpiReport report;
  std::vector<EpisodeLog> runs;  // iteration order
};

std::uint64_t iteration_seed(std::uint64_t root, int iteration);

// Independent evaluations of `scenario`, one engine per iteration.
ExperimentResult run_experiment(const EngineConfig& config, const Scenario& scenario,
                                const CheckpointSet* checkpoints, const ExperimentOptions& options);

std::vector<WindowSpan> scenario_windows(const Scenario& scenario);

// <dir>/kpi_report.json, kpi_summary.csv, config.json and runs/run-NN.csv.
void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result,
                      const nlohmann::json& config);

struct LoadedExperiment {
  KpiReport report;
  EpisodeLog first_run;
};
LoadedExperiment load_experiment(const std::filesystem::path& dir);

struct ComparisonInput {
  std::string label;
  KpiReport report;
  EpisodeLog run;  // representative run for the time-series plots
};

// Side-by-side table (compare.txt, compare.csv) and plots of response time and
// utilization over time (response.svg/.csv, utilization.svg/.csv). Returns the
// table text. Throws ConfigError on empty input or mismatched scenarios.
std::string compare(const std::vector<ComparisonInput>& inputs, const std::filesystem::path& out_dir,
                    const std::string& window = "all");

}  // namespace podscale
