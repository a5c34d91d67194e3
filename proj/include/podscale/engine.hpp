#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "podscale/cluster.hpp"
#include "podscale/dqn_agent.hpp"
#include "podscale/heuristic.hpp"
#include "podscale/observe.hpp"
#include "podscale/ppo_agent.hpp"
#include "podscale/reward.hpp"
#include "podscale/workload.hpp"

namespace podscale {

struct Scenario;

enum class PolicyKind { Heuristic, Discrete, Continuous };

std::string to_string(PolicyKind kind);
PolicyKind parse_policy(const std::string& name);

struct TrainingConfig {
  int episodes = 200;
  int ticks_per_episode = 64;
  int agents = 3;
  std::int64_t work_per_request_mcs = 8;
  SyntheticLoadConfig load;
  bool randomize_priorities = true;
  // Episode start: each service gets the floor plus a random share of this
  // fraction range of the remaining pool.
  double initial_fill_min = 0.5;
  double initial_fill_max = 1.0;

  void validate() const;
};

struct EngineConfig {
  PolicyKind policy = PolicyKind::Heuristic;
  std::uint64_t seed = 1;
  ClusterConfig cluster;
  RewardParams reward;
  ObserveConfig observe;
  DqnConfig dqn;
  PpoConfig ppo;
  HeuristicConfig heuristic;
  // Apply deltas in a seeded random order instead of ascending id.
  bool randomize_order = false;
  TrainingConfig training;

  void validate() const;
  // Parameters that determine network shapes and agent behavior; checkpoints
  // record this hash and refuse to load under a different one.
  std::string agent_hash() const;
  nlohmann::json to_json() const;
};

struct TickRecord {
  int episode = 0;
  int tick = 0;
  ServiceId service;
  int priority = 0;
  double rate_rps = 0.0;
  Millicores limit_mc = 0;
  double usage_mc = 0.0;
  double utilization_pct = 0.0;
  double response_s = 0.0;
  double backlog_mcs = 0.0;
  double action = 0.0;  // discrete index, continuous value in [-1, 1], or 0 for the heuristic
  Millicores requested_delta_mc = 0;
  Millicores applied_delta_mc = 0;
  // Limit change imposed from outside the agent since the previous tick
  // (capacity reclaimed for a newly attached service).
  Millicores external_delta_mc = 0;
  RewardBreakdown reward;
};

using EpisodeLog = std::vector<TickRecord>;

struct TickOptions {
  bool explore = false;
  bool learn = false;
};

// Trained agents, one per slot, plus the hash of the config they came from.
struct CheckpointSet {
  PolicyKind policy = PolicyKind::Heuristic;
  std::uint64_t seed = 0;
  std::string config_hash;
  std::map<int, nlohmann::json> agents;  // slot -> agent document

  // Slot for a service id, falling back to slot 1 so services without their
  // own slot share the first pre-trained agent.
  const nlohmann::json& for_service(ServiceId id) const;

  void save(const std::filesystem::path& dir) const;
  static CheckpointSet load(const std::filesystem::path& dir);
};

// Per-tick observe -> act -> apply -> step -> reward -> store -> learn loop
// over all attached agents.
class Engine {
 public:
  explicit Engine(EngineConfig config);

  const EngineConfig& config() const { return config_; }
  const Cluster& cluster() const { return cluster_; }

  // Adds the service at the floor limit, first shaving existing limits
  // proportionally when the free pool is short. Throws StateError when even
  // full reclamation cannot free the floor.
  ServiceId attach_agent(const ServiceSpec& spec, const nlohmann::json* warm_start = nullptr);
  Millicores detach_agent(ServiceId id);
  bool has_agent(ServiceId id) const { return agents_.contains(id); }

  // Resizes outside the agents' control (initial allocations).
  Millicores set_limit(ServiceId id, Millicores limit_mc);
  void set_priority(ServiceId id, int priority);

  EpisodeLog run_tick(const WorkloadSlice& slice, const TickOptions& options);

  // Called after the last tick of an episode: marks rollout boundaries, fires
  // the on-policy update when the rollout is full, decays exploration.
  void end_episode(bool learn);
  int episode() const { return episode_; }
  int tick() const { return tick_; }

  // Starts a fresh cluster holding exactly `services` at the given limits.
  // Agents whose id is listed keep their networks and buffers; others are
  // created new or dropped. Observation histories restart.
  void begin_episode(const std::vector<std::pair<ServiceSpec, Millicores>>& services);

  nlohmann::json agent_checkpoint(ServiceId id) const;

  using Progress = std::function<void(int episode, double mean_reward)>;
  CheckpointSet train(const Progress& progress = {});
  EpisodeLog evaluate(const Scenario& scenario, const CheckpointSet* checkpoints, bool jitter,
                      std::uint64_t jitter_seed);

  // Exposed for tests.
  DqnAgent* dqn(ServiceId id);
  PpoAgent* ppo(ServiceId id);

 private:
  struct AgentSlot {
    ServiceId id;
    HistoryBuffer history;
    double prev_utilization = 0.0;
    std::variant<HeuristicController, DqnAgent, PpoAgent> policy;
    Rng rng;
    Millicores external_delta = 0;
  };

  AgentSlot make_slot(ServiceId id, const nlohmann::json* warm_start) const;
  std::vector<ServiceId> action_order();
  void check_finite(const TickRecord& r) const;

  EngineConfig config_;
  Cluster cluster_;
  std::map<ServiceId, AgentSlot> agents_;
  Rng order_rng_;
  int episode_ = 0;
  int tick_ = 0;
};

// Largest-remainder proportional shave of `need` millicores from the
// headroom above each floor. Entries align with `headroom`.
std::vector<Millicores> proportional_shave(const std::vector<Millicores>& headroom, Millicores need);

}  // namespace podscale
