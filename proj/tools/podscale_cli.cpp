#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>

#include "CLI11.hpp"
#include "podscale/engine.hpp"
#include "podscale/error.hpp"
#include "podscale/harness.hpp"
#include "podscale/report.hpp"
#include "podscale/scenario.hpp"

namespace fs = std::filesystem;
using namespace podscale;

namespace {

std::string trim_ws(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

// "--config FILE" becomes one "--key=value" per line, placed before the
// command line flags so those win. Keys already on the command line are skipped.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  auto it = std::find_if(args.begin(), args.end(),
                         [](const std::string& a) { return a == "--config" || a.starts_with("--config="); });
  if (it == args.end()) return args;
  std::string path;
  if (*it == "--config") {
    if (std::next(it) == args.end()) throw ConfigError("--config needs a file");
    path = *std::next(it);
    args.erase(it, it + 2);
  } else {
    path = it->substr(9);
    args.erase(it);
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::set<std::string> given;
  for (const auto& a : args) {
    if (a.starts_with("--")) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  }
  std::vector<std::string> extra;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim_ws(raw.substr(0, raw.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(path + ":" + std::to_string(line_no) + ": expected key = value");
    std::string key = trim_ws(line.substr(0, eq));
    std::string value = trim_ws(line.substr(eq + 1));
    if (key.starts_with("--")) key = key.substr(2);
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (given.contains(key)) continue;
    extra.push_back("--" + key + "=" + value);
  }
  // right after the subcommand name
  args.insert(args.begin() + std::min<std::size_t>(2, args.size()), extra.begin(), extra.end());
  return args;
}

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string policy = "heuristic";
  std::optional<std::uint64_t> seed;
  std::string scenario = "dynamic-load";
  std::string config_file;
  EngineConfig config;
};

// Options that shape the agents; train and eval must agree on them for the
// checkpoint hash to match.
void add_agent_options(CLI::App* app, CommonOptions& o) {
  EngineConfig& c = o.config;
  app->add_option("--config", o.config_file, "key = value file with defaults for any option below");
  app->add_option("--policy", o.policy, "heuristic | discrete | continuous")->capture_default_str();
  app->add_option("--seed", o.seed, "root seed")->required();
  app->add_option("--scenario", o.scenario, "built-in scenario name or scenario file")->capture_default_str();

  app->add_option("--history", c.observe.history, "snapshots per observation")->capture_default_str();
  app->add_option("--eta-lower", c.reward.eta_lower, "lower utilization threshold (%)")->capture_default_str();
  app->add_option("--eta-upper", c.reward.eta_upper, "upper utilization threshold (%)")->capture_default_str();
  app->add_option("--alpha", c.reward.alpha, "response time weight in the shared reward")->capture_default_str();
  app->add_option("--beta", c.reward.beta, "utilization reward weight")->capture_default_str();
  app->add_flag("--clip-shared", c.reward.clip_shared, "floor the shared reward at --shared-floor");
  app->add_option("--shared-floor", c.reward.shared_floor)->capture_default_str();
  app->add_flag("--randomize-order", c.randomize_order, "apply deltas in seeded random order");

  app->add_option("--dqn-lr", c.dqn.learning_rate)->capture_default_str();
  app->add_option("--dqn-gamma", c.dqn.gamma)->capture_default_str();
  app->add_option("--dqn-buffer", c.dqn.buffer_capacity)->capture_default_str();
  app->add_option("--dqn-batch", c.dqn.batch_size)->capture_default_str();
  app->add_option("--dqn-tau", c.dqn.tau)->capture_default_str();
  app->add_option("--dqn-step-mc", c.dqn.step_mc, "limit change per discrete action")->capture_default_str();
  app->add_option("--epsilon-decay", c.dqn.epsilon_decay)->capture_default_str();
  app->add_option("--epsilon-min", c.dqn.epsilon_min)->capture_default_str();

  app->add_option("--actor-lr", c.ppo.actor_learning_rate)->capture_default_str();
  app->add_option("--critic-lr", c.ppo.critic_learning_rate)->capture_default_str();
  app->add_option("--ppo-gamma", c.ppo.gamma)->capture_default_str();
  app->add_option("--clip-epsilon", c.ppo.clip_epsilon)->capture_default_str();
  app->add_option("--entropy-coef", c.ppo.entropy_coef)->capture_default_str();
  app->add_option("--ppo-epochs", c.ppo.update_epochs)->capture_default_str();
  app->add_option("--ppo-threshold", c.ppo.batch_threshold, "rollout size that triggers an update")
      ->capture_default_str();
  app->add_option("--stddev-start", c.ppo.stddev_start)->capture_default_str();
  app->add_option("--stddev-decay", c.ppo.stddev_decay)->capture_default_str();
  app->add_option("--stddev-min", c.ppo.stddev_min)->capture_default_str();
  app->add_option("--delta-max-mc", c.ppo.delta_max_mc, "limit change at action 1.0")->capture_default_str();
  app->add_flag("--bootstrap-truncated", c.ppo.bootstrap_truncated, "bootstrap returns with V(s') at episode ends");

  app->add_option("--heuristic-upper", c.heuristic.upper_threshold)->capture_default_str();
  app->add_option("--heuristic-lower", c.heuristic.lower_threshold)->capture_default_str();
  app->add_option("--heuristic-step-mc", c.heuristic.step_mc)->capture_default_str();
  app->add_option("--heuristic-cooldown", c.heuristic.cooldown_ticks)->capture_default_str();
}

// Cluster calibration comes from the scenario; training sizes itself to it
// unless overridden.
Scenario finish_config(CommonOptions& o) {
  o.config.policy = parse_policy(o.policy);
  o.config.seed = *o.seed;
  Scenario sc = scenarios::resolve(o.scenario);
  o.config.cluster = sc.cluster;
  return sc;
}

int run_train(CommonOptions& o, std::optional<int> agents, std::optional<double> max_rate, const std::string& out,
              const std::string& log_path, bool quiet) {
  const Scenario sc = finish_config(o);
  TrainingConfig& t = o.config.training;
  t.agents = agents.value_or(sc.max_concurrent());
  t.work_per_request_mcs = sc.services.front().spec.work_per_request_mcs;
  t.load.max_rate_rps = max_rate.value_or(static_cast<double>(sc.cluster.capacity_mc) /
                                          static_cast<double>(t.work_per_request_mcs * t.agents));
  o.config.validate();
  if (o.config.policy == PolicyKind::Heuristic) {
    std::cerr << "note: the heuristic has nothing to learn; writing its settings only\n";
  }

  Engine engine(o.config);
  std::ofstream log;
  if (!log_path.empty()) {
    log.open(log_path);
    if (!log) throw StateError("cannot write " + log_path);
    log << "episode,mean_reward\n";
  }
  const CheckpointSet set = engine.train([&](int episode, double mean_reward) {
    if (log) log << episode << ',' << mean_reward << "\n";
    if (!quiet && (episode % 10 == 0 || episode + 1 == t.episodes)) {
      std::cerr << "episode " << episode << " mean reward " << mean_reward << "\n";
    }
  });
  set.save(out);
  std::ofstream(fs::path(out) / "config.json") << o.config.to_json().dump(2) << "\n";
  std::cout << "checkpoints written to " << out << " (hash " << set.config_hash << ")\n";
  return 0;
}

int run_eval(CommonOptions& o, const std::string& checkpoints, const ExperimentOptions& options,
             const std::string& out, const std::string& window) {
  const Scenario sc = finish_config(o);
  o.config.validate();
  std::optional<CheckpointSet> set;
  if (o.config.policy != PolicyKind::Heuristic) {
    if (checkpoints.empty()) throw ConfigError("--checkpoints is required for learned policies");
    set = CheckpointSet::load(checkpoints);
  }
  const ExperimentResult result = run_experiment(o.config, sc, set ? &*set : nullptr, options);
  nlohmann::json cfg = o.config.to_json();
  cfg["scenario"] = sc.name;
  cfg["iterations"] = options.iterations;
  cfg["jitter"] = options.jitter;
  write_experiment(out, result, cfg);
  std::cout << format_report(result.report, window);
  return 0;
}

int run_compare(const std::vector<std::string>& dirs, const std::string& out, const std::string& window) {
  std::vector<ComparisonInput> inputs;
  std::set<std::string> labels;
  for (const auto& d : dirs) {
    LoadedExperiment e = load_experiment(d);
    std::string label = e.report.policy;
    if (!labels.insert(label).second) label = fs::path(d).filename().string();
    labels.insert(label);
    inputs.push_back({label, std::move(e.report), std::move(e.first_run)});
  }
  std::cout << compare(inputs, out, window);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-agent in-place CPU scaling simulator"};
  app.require_subcommand(1);

  CommonOptions train_opts;
  std::optional<int> train_agents;
  std::optional<double> train_max_rate;
  std::string train_out, train_log;
  bool quiet = false;
  auto* train = app.add_subcommand("train", "train agents on synthetic load and write checkpoints");
  add_agent_options(train, train_opts);
  train->add_option("--episodes", train_opts.config.training.episodes)->capture_default_str();
  train->add_option("--ticks", train_opts.config.training.ticks_per_episode, "ticks per episode")
      ->capture_default_str();
  train->add_option("--agents", train_agents, "agents trained together (default: scenario maximum)");
  train->add_option("--max-rate", train_max_rate, "peak synthetic rate per service, req/s");
  train->add_option("--initial-fill-min", train_opts.config.training.initial_fill_min,
                    "share of the spare pool handed out at episode start, lower bound")
      ->capture_default_str();
  train->add_option("--initial-fill-max", train_opts.config.training.initial_fill_max)->capture_default_str();
  train->add_option("--min-segment", train_opts.config.training.load.min_segment)->capture_default_str();
  train->add_option("--max-segment", train_opts.config.training.load.max_segment)->capture_default_str();
  train->add_option("--out", train_out, "checkpoint directory")->required();
  train->add_option("--log", train_log, "per-episode reward CSV");
  train->add_flag("--quiet", quiet);

  CommonOptions eval_opts;
  std::string eval_checkpoints, eval_out, eval_window = "all";
  ExperimentOptions eval_exp;
  bool no_jitter = false;
  auto* eval = app.add_subcommand("eval", "evaluate a policy on a scenario over seeded iterations");
  add_agent_options(eval, eval_opts);
  eval->add_option("--checkpoints", eval_checkpoints, "directory written by train");
  eval->add_option("--iterations", eval_exp.iterations)->capture_default_str();
  eval->add_option("--workers", eval_exp.workers, "parallel iterations")->capture_default_str();
  eval->add_flag("--no-jitter", no_jitter, "replay the exact scenario rates every iteration");
  eval->add_option("--out", eval_out, "output directory")->required();
  eval->add_option("--window", eval_window, "KPI window printed to stdout")->capture_default_str();

  auto* scenario = app.add_subcommand("scenario", "built-in scenarios");
  scenario->require_subcommand(1);
  auto* list = scenario->add_subcommand("list", "list built-in scenarios");
  std::string show_name;
  auto* show = scenario->add_subcommand("show", "print a scenario in file format");
  show->add_option("name", show_name)->required();

  std::string report_dir, report_window = "all";
  auto* report = app.add_subcommand("report", "print the KPI table of an eval output directory");
  report->add_option("dir", report_dir)->required();
  report->add_option("--window", report_window)->capture_default_str();

  std::vector<std::string> compare_dirs;
  std::string compare_out, compare_window = "all";
  auto* cmp = app.add_subcommand("compare", "side-by-side table and plots of eval output directories");
  cmp->add_option("dirs", compare_dirs, "eval output directories");
  cmp->add_option("--out", compare_out, "output directory")->required();
  cmp->add_option("--window", compare_window)->capture_default_str();

  try {
    std::vector<std::string> args = expand_config(std::vector<std::string>(argv, argv + argc));
    args.erase(args.begin());
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfig;
  }

  try {
    if (train->parsed()) return run_train(train_opts, train_agents, train_max_rate, train_out, train_log, quiet);
    if (eval->parsed()) {
      eval_exp.jitter = !no_jitter;
      return run_eval(eval_opts, eval_checkpoints, eval_exp, eval_out, eval_window);
    }
    if (list->parsed()) {
      for (const auto& name : scenarios::names()) {
        const Scenario sc = scenarios::resolve(name);
        std::cout << name << "\t" << sc.description << "\n";
      }
      return 0;
    }
    if (show->parsed()) {
      write_scenario(std::cout, scenarios::resolve(show_name));
      return 0;
    }
    if (report->parsed()) {
      std::cout << format_report(load_experiment(report_dir).report, report_window);
      return 0;
    }
    if (cmp->parsed()) {
      if (compare_dirs.empty()) throw ConfigError("compare needs at least one eval output directory");
      return run_compare(compare_dirs, compare_out, compare_window);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
