#include "podscale/harness.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <mutex>
#include <thread>

#include "podscale/error.hpp"
#include "podscale/report.hpp"
#include "podscale/rng.hpp"

namespace podscale {

std::uint64_t iteration_seed(std::uint64_t root, int iteration) {
  return derive_seed(root, "eval-iteration", static_cast<std::uint64_t>(iteration));
}

std::vector<WindowSpan> scenario_windows(const Scenario& scenario) {
  std::vector<WindowSpan> spans;
  for (const auto& w : scenario.windows) spans.push_back({w.name, w.start, w.end});
  if (spans.empty()) spans.push_back({"all", 0, scenario.horizon - 1});
  return spans;
}

ExperimentResult run_experiment(const EngineConfig& config, const Scenario& scenario,
                                const CheckpointSet* checkpoints, const ExperimentOptions& options) {
  if (options.iterations <= 0) throw ConfigError("iterations must be positive");
  if (options.workers <= 0) throw ConfigError("workers must be positive");
  scenario.validate();
  if (config.policy != PolicyKind::Heuristic && !checkpoints) {
    throw ConfigError("policy " + to_string(config.policy) + " needs trained checkpoints");
  }

  std::vector<EpisodeLog> runs(static_cast<std::size_t>(options.iterations));
  auto run_one = [&](int i) {
    EngineConfig cfg = config;
    cfg.cluster = scenario.cluster;
    cfg.seed = iteration_seed(config.seed, i);
    Engine engine(cfg);
    runs[static_cast<std::size_t>(i)] = engine.evaluate(scenario, checkpoints, options.jitter, cfg.seed);
  };

  if (options.workers == 1) {
    for (int i = 0; i < options.iterations; ++i) run_one(i);
  } else {
    std::atomic<int> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::thread> pool;
    for (int w = 0; w < options.workers; ++w) {
      pool.emplace_back([&] {
        for (int i = next++; i < options.iterations; i = next++) {
          try {
            run_one(i);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
  }

  ExperimentResult result;
  result.report = aggregate_kpis(scenario.name, to_string(config.policy), config.seed, scenario_windows(scenario), runs);
  result.runs = std::move(runs);
  return result;
}

namespace {

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw StateError("cannot write " + p.string());
  return out;
}

}  // namespace

void write_experiment(const std::filesystem::path& dir, const ExperimentResult& result,
                      const nlohmann::json& config) {
  std::filesystem::create_directories(dir / "runs");
  open_out(dir / "kpi_report.json") << result.report.to_json().dump(2) << "\n";
  {
    auto out = open_out(dir / "kpi_summary.csv");
    write_kpi_csv(out, result.report);
  }
  open_out(dir / "config.json") << config.dump(2) << "\n";
  for (std::size_t i = 0; i < result.runs.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "run-%02zu.csv", i);
    auto out = open_out(dir / "runs" / name);
    write_log_csv(out, result.runs[i]);
  }
}

LoadedExperiment load_experiment(const std::filesystem::path& dir) {
  LoadedExperiment loaded;
  std::ifstream report(dir / "kpi_report.json");
  if (!report) throw ConfigError("no kpi_report.json in " + dir.string());
  try {
    loaded.report = KpiReport::from_json(nlohmann::json::parse(report));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("malformed kpi_report.json in " + dir.string() + ": " + e.what());
  }
  std::ifstream run(dir / "runs" / "run-00.csv");
  if (run) loaded.first_run = read_log_csv(run);
  return loaded;
}

std::string compare(const std::vector<ComparisonInput>& inputs, const std::filesystem::path& out_dir,
                    const std::string& window) {
  if (inputs.empty()) throw ConfigError("compare needs at least one report");
  for (const auto& in : inputs) {
    if (in.report.scenario != inputs.front().report.scenario) {
      throw ConfigError("cannot compare reports of scenarios '" + inputs.front().report.scenario + "' and '" +
                        in.report.scenario + "'");
    }
  }

  std::vector<const WindowSummary*> windows;
  std::set<ServiceId> ids;
  for (const auto& in : inputs) {
    windows.push_back(&in.report.window(window));
    for (const auto& s : windows.back()->services) ids.insert(s.service);
  }

  std::ostringstream table;
  std::ostringstream csv;
  table << "scenario " << inputs.front().report.scenario << ", window " << window << "\n";
  table << std::left << std::setw(10) << "service" << std::setw(20) << "metric";
  csv << "service,metric";
  for (const auto& in : inputs) {
    table << std::setw(20) << in.label;
    csv << ',' << in.label;
  }
  table << "\n";
  csv << "\n" << std::setprecision(10);

  struct Metric {
    const char* name;
    const Stat ServiceSummary::*field;
    int precision;
  };
  const Metric metrics[] = {{"violation_pct", &ServiceSummary::violation_pct, 2},
                            {"mean_response_s", &ServiceSummary::mean_response_s, 4},
                            {"resource_delta_mc", &ServiceSummary::resource_delta_mc, 1}};
  for (ServiceId id : ids) {
    for (const auto& m : metrics) {
      table << std::setw(10) << id.value << std::setw(20) << m.name;
      csv << id.value << ',' << m.name;
      for (const auto* w : windows) {
        const ServiceSummary* found = nullptr;
        for (const auto& s : w->services) {
          if (s.service == id) found = &s;
        }
        std::ostringstream cell;
        if (found) {
          cell << std::fixed << std::setprecision(m.precision) << (found->*m.field).mean;
          csv << ',' << (found->*m.field).mean;
        } else {
          cell << "-";
          csv << ',';
        }
        table << std::setw(20) << cell.str();
      }
      table << "\n";
      csv << "\n";
    }
  }

  std::filesystem::create_directories(out_dir);
  open_out(out_dir / "compare.txt") << table.str();
  open_out(out_dir / "compare.csv") << csv.str();

  auto series_plot = [&](const char* title, const char* y_label, double TickRecord::*field,
                         std::optional<double> reference) {
    LinePlot plot{title, "tick", y_label, {}, reference};
    for (const auto& in : inputs) {
      std::map<ServiceId, PlotSeries> per_service;
      for (const auto& r : in.run) {
        PlotSeries& s = per_service[r.service];
        if (s.label.empty()) s.label = in.label + " s" + std::to_string(r.service.value);
        s.points.emplace_back(r.tick, r.*field);
      }
      for (auto& [id, s] : per_service) plot.series.push_back(std::move(s));
    }
    return plot;
  };
  const LinePlot response =
      series_plot("Response time", "response time (s)", &TickRecord::response_s, kViolationThresholdS);
  const LinePlot utilization = series_plot("Utilization", "utilization (%)", &TickRecord::utilization_pct, {});
  for (const auto& [name, plot] : {std::pair{"response", &response}, std::pair{"utilization", &utilization}}) {
    auto svg = open_out(out_dir / (std::string(name) + ".svg"));
    write_svg(svg, *plot);
    auto data = open_out(out_dir / (std::string(name) + ".csv"));
    write_plot_csv(data, *plot);
  }
  return table.str();
}

}  // namespace podscale
