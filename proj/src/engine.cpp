#include "podscale/engine.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "podscale/error.hpp"
#include "podscale/scenario.hpp"

namespace podscale {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::Heuristic: return "heuristic";
    case PolicyKind::Discrete: return "discrete";
    case PolicyKind::Continuous: return "continuous";
  }
  return "unknown";
}

PolicyKind parse_policy(const std::string& name) {
  if (name == "heuristic") return PolicyKind::Heuristic;
  if (name == "discrete" || name == "dqn") return PolicyKind::Discrete;
  if (name == "continuous" || name == "ppo") return PolicyKind::Continuous;
  throw ConfigError("unknown policy '" + name + "' (heuristic | discrete | continuous)");
}

void TrainingConfig::validate() const {
  if (episodes <= 0 || ticks_per_episode <= 0) throw ConfigError("training episodes and ticks must be positive");
  if (agents <= 0) throw ConfigError("training needs at least one agent");
  if (work_per_request_mcs <= 0) throw ConfigError("training work_per_request_mcs must be positive");
  if (!(initial_fill_min >= 0.0 && initial_fill_min <= initial_fill_max && initial_fill_max <= 1.0)) {
    throw ConfigError("training initial fill must satisfy 0 <= min <= max <= 1");
  }
}

void EngineConfig::validate() const {
  cluster.validate();
  reward.validate();
  observe.validate();
  heuristic.validate();
  training.validate();
  if (policy == PolicyKind::Discrete) dqn.validate();
  if (policy == PolicyKind::Continuous) ppo.validate();
}

nlohmann::json EngineConfig::to_json() const {
  return {{"policy", to_string(policy)},
          {"seed", seed},
          {"cluster",
           {{"capacity_mc", cluster.capacity_mc},
            {"min_limit_mc", cluster.min_limit_mc},
            {"tick_seconds", cluster.tick_seconds}}},
          {"reward",
           {{"eta_lower", reward.eta_lower},
            {"eta_upper", reward.eta_upper},
            {"alpha", reward.alpha},
            {"beta", reward.beta},
            {"clip_shared", reward.clip_shared},
            {"shared_floor", reward.shared_floor}}},
          {"observe", {{"history", observe.history}, {"max_priority", observe.max_priority}}},
          {"dqn", dqn.to_json()},
          {"ppo", ppo.to_json()},
          {"heuristic", heuristic.to_json()},
          {"randomize_order", randomize_order},
          {"training",
           {{"episodes", training.episodes},
            {"ticks_per_episode", training.ticks_per_episode},
            {"agents", training.agents},
            {"work_per_request_mcs", training.work_per_request_mcs},
            {"min_segment", training.load.min_segment},
            {"max_segment", training.load.max_segment},
            {"max_rate_rps", training.load.max_rate_rps},
            {"randomize_priorities", training.randomize_priorities},
            {"initial_fill_min", training.initial_fill_min},
            {"initial_fill_max", training.initial_fill_max}}}};
}

std::string EngineConfig::agent_hash() const {
  nlohmann::json doc = {{"policy", to_string(policy)},
                        {"observe", {{"history", observe.history}, {"max_priority", observe.max_priority}}}};
  if (policy == PolicyKind::Discrete) doc["agent"] = dqn.to_json();
  if (policy == PolicyKind::Continuous) doc["agent"] = ppo.to_json();
  if (policy == PolicyKind::Heuristic) doc["agent"] = heuristic.to_json();
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(doc.dump());
  return out.str();
}

const nlohmann::json& CheckpointSet::for_service(ServiceId id) const {
  if (agents.empty()) throw CheckpointError("checkpoint set is empty");
  auto it = agents.find(id.value);
  if (it != agents.end()) return it->second;
  it = agents.find(1);
  if (it != agents.end()) return it->second;
  return agents.begin()->second;
}

void CheckpointSet::save(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  nlohmann::json manifest = {{"format", "podscale-checkpoints"},
                             {"version", 1},
                             {"policy", to_string(policy)},
                             {"seed", seed},
                             {"config_hash", config_hash},
                             {"agents", nlohmann::json::array()}};
  for (const auto& [slot, doc] : agents) {
    const std::string file = "agent-" + std::to_string(slot) + ".json";
    manifest["agents"].push_back({{"slot", slot}, {"file", file}});
    nlohmann::json wrapped = {{"format", "podscale-agent"},
                              {"version", 1},
                              {"config_hash", config_hash},
                              {"slot", slot},
                              {"agent", doc}};
    std::ofstream out(dir / file);
    if (!out) throw CheckpointError("cannot write checkpoint " + (dir / file).string());
    out << wrapped.dump() << "\n";
  }
  std::ofstream out(dir / "manifest.json");
  if (!out) throw CheckpointError("cannot write checkpoint manifest in " + dir.string());
  out << manifest.dump(2) << "\n";
}

CheckpointSet CheckpointSet::load(const std::filesystem::path& dir) {
  auto read = [](const std::filesystem::path& p) {
    std::ifstream in(p);
    if (!in) throw CheckpointError("cannot read " + p.string());
    try {
      return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("malformed JSON in " + p.string() + ": " + e.what());
    }
  };
  const nlohmann::json manifest = read(dir / "manifest.json");
  try {
    if (manifest.at("format") != "podscale-checkpoints" || manifest.at("version") != 1) {
      throw CheckpointError("unsupported checkpoint manifest in " + dir.string());
    }
    CheckpointSet set;
    set.policy = parse_policy(manifest.at("policy").get<std::string>());
    set.seed = manifest.at("seed").get<std::uint64_t>();
    set.config_hash = manifest.at("config_hash").get<std::string>();
    for (const auto& entry : manifest.at("agents")) {
      const nlohmann::json doc = read(dir / entry.at("file").get<std::string>());
      if (doc.at("format") != "podscale-agent" || doc.at("version") != 1) {
        throw CheckpointError("unsupported agent checkpoint format");
      }
      if (doc.at("config_hash").get<std::string>() != set.config_hash) {
        throw CheckpointError("agent checkpoint hash differs from manifest");
      }
      set.agents[entry.at("slot").get<int>()] = doc.at("agent");
    }
    return set;
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint manifest: ") + e.what());
  }
}

std::vector<Millicores> proportional_shave(const std::vector<Millicores>& headroom, Millicores need) {
  const Millicores total = std::accumulate(headroom.begin(), headroom.end(), Millicores{0});
  if (need < 0) throw StateError("negative reclamation request");
  if (need > total) throw StateError("not enough capacity above the floors to reclaim");
  std::vector<Millicores> shave(headroom.size(), 0);
  if (need == 0) return shave;
  std::vector<std::pair<Millicores, std::size_t>> remainders;  // (need*h mod total, index)
  Millicores assigned = 0;
  for (std::size_t i = 0; i < headroom.size(); ++i) {
    shave[i] = need * headroom[i] / total;
    assigned += shave[i];
    remainders.emplace_back(need * headroom[i] % total, i);
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < need; ++k) {
    ++shave[remainders[k].second];
    ++assigned;
  }
  return shave;
}

Engine::Engine(EngineConfig config)
    : config_(std::move(config)), cluster_(config_.cluster), order_rng_(make_rng(config_.seed, "agent-order")) {
  config_.validate();
}

Engine::AgentSlot Engine::make_slot(ServiceId id, const nlohmann::json* warm_start) const {
  const int input_dim = kObservationVariables * config_.observe.history;
  Rng init = make_rng(config_.seed, "agent-init", static_cast<std::uint64_t>(id.value));
  auto policy = [&]() -> std::variant<HeuristicController, DqnAgent, PpoAgent> {
    switch (config_.policy) {
      case PolicyKind::Heuristic:
        return HeuristicController(config_.heuristic);
      case PolicyKind::Discrete: {
        DqnAgent agent = warm_start ? DqnAgent::from_json(*warm_start) : DqnAgent(input_dim, config_.dqn, init);
        if (agent.q_network().input_dim() != input_dim) throw CheckpointError("checkpoint input size mismatch");
        return agent;
      }
      case PolicyKind::Continuous: {
        PpoAgent agent = warm_start ? PpoAgent::from_json(*warm_start) : PpoAgent(input_dim, config_.ppo, init);
        if (agent.actor().input_dim() != input_dim) throw CheckpointError("checkpoint input size mismatch");
        return agent;
      }
    }
    throw ConfigError("unknown policy kind");
  }();
  return AgentSlot{id, HistoryBuffer(config_.observe.history), 0.0, std::move(policy),
                   make_rng(config_.seed, "agent-act", static_cast<std::uint64_t>(id.value)), 0};
}

ServiceId Engine::attach_agent(const ServiceSpec& spec, const nlohmann::json* warm_start) {
  if (cluster_.contains(spec.id) || agents_.contains(spec.id)) {
    throw StateError("service " + std::to_string(spec.id.value) + " already attached");
  }
  AgentSlot slot = make_slot(spec.id, warm_start);

  const Millicores floor = cluster_.config().min_limit_mc;
  if (cluster_.free_mc() < floor) {
    const std::vector<ServiceId> ids = cluster_.active_ids();
    std::vector<Millicores> headroom;
    for (ServiceId id : ids) headroom.push_back(cluster_.service(id).limit_mc - floor);
    const std::vector<Millicores> shave = proportional_shave(headroom, floor - cluster_.free_mc());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (shave[i] == 0) continue;
      const Millicores applied = cluster_.resize_in_place(ids[i], -shave[i]);
      auto it = agents_.find(ids[i]);
      if (it != agents_.end()) it->second.external_delta += applied;
    }
  }
  cluster_.add_service(spec);
  agents_.emplace(spec.id, std::move(slot));
  return spec.id;
}

Millicores Engine::detach_agent(ServiceId id) {
  if (!agents_.contains(id)) throw StateError("no agent attached to service " + std::to_string(id.value));
  const Millicores released = cluster_.remove_service(id);
  agents_.erase(id);
  return released;
}

Millicores Engine::set_limit(ServiceId id, Millicores limit_mc) {
  return cluster_.resize_in_place(id, limit_mc - cluster_.service(id).limit_mc);
}

void Engine::set_priority(ServiceId id, int priority) { cluster_.set_priority(id, priority); }

DqnAgent* Engine::dqn(ServiceId id) {
  auto it = agents_.find(id);
  return it == agents_.end() ? nullptr : std::get_if<DqnAgent>(&it->second.policy);
}

PpoAgent* Engine::ppo(ServiceId id) {
  auto it = agents_.find(id);
  return it == agents_.end() ? nullptr : std::get_if<PpoAgent>(&it->second.policy);
}

nlohmann::json Engine::agent_checkpoint(ServiceId id) const {
  auto it = agents_.find(id);
  if (it == agents_.end()) throw StateError("no agent attached to service " + std::to_string(id.value));
  if (const auto* d = std::get_if<DqnAgent>(&it->second.policy)) return d->to_json();
  if (const auto* p = std::get_if<PpoAgent>(&it->second.policy)) return p->to_json();
  return {{"kind", "heuristic"}, {"config", config_.heuristic.to_json()}};
}

std::vector<ServiceId> Engine::action_order() {
  std::vector<ServiceId> order;
  order.reserve(agents_.size());
  for (const auto& [id, slot] : agents_) order.push_back(id);
  if (config_.randomize_order) std::shuffle(order.begin(), order.end(), order_rng_);
  return order;
}

void Engine::check_finite(const TickRecord& r) const {
  const bool ok = std::isfinite(r.usage_mc) && std::isfinite(r.utilization_pct) && std::isfinite(r.response_s) &&
                  std::isfinite(r.action) && std::isfinite(r.reward.rho) && std::isfinite(r.reward.omega) &&
                  std::isfinite(r.reward.r_shared) && std::isfinite(r.reward.r_total);
  if (!ok) {
    std::ostringstream msg;
    msg << "non-finite value at episode " << r.episode << " tick " << r.tick << " service " << r.service
        << ": usage=" << r.usage_mc << " util=" << r.utilization_pct << " response=" << r.response_s
        << " action=" << r.action << " reward=" << r.reward.r_total;
    throw NumericError(msg.str());
  }
}

EpisodeLog Engine::run_tick(const WorkloadSlice& slice, const TickOptions& options) {
  struct Pending {
    explicit Pending(Observation o) : obs(std::move(o)) {}
    Observation obs;
    double action = 0.0;
    int action_index = 1;
    ActionSample sample;
    Millicores requested = 0;
    Millicores applied = 0;
  };
  const std::vector<ServiceId> order = action_order();
  std::map<ServiceId, Pending> pending;

  // (1) observations from the pre-action state
  for (ServiceId id : order) {
    AgentSlot& slot = agents_.at(id);
    Pending p{build_observation(cluster_, id, slot.history, config_.observe)};
    pending.emplace(id, std::move(p));
  }

  // (2) every agent selects an action
  for (ServiceId id : order) {
    AgentSlot& slot = agents_.at(id);
    Pending& p = pending.at(id);
    std::visit(
        [&](auto& policy) {
          using T = std::decay_t<decltype(policy)>;
          if constexpr (std::is_same_v<T, HeuristicController>) {
            p.requested = policy.decide(cluster_.service(id));
          } else if constexpr (std::is_same_v<T, DqnAgent>) {
            p.action_index = policy.select_action(p.obs, options.explore, slot.rng);
            p.action = p.action_index;
            p.requested = dqn_action_delta(p.action_index, policy.config().step_mc);
          } else {
            p.sample = policy.sample_action(p.obs, options.explore, slot.rng);
            p.action = p.sample.action;
            p.requested = continuous_action_delta(p.sample.action, policy.config().delta_max_mc);
          }
        },
        slot.policy);
  }

  // (3) apply in order with clamping
  for (ServiceId id : order) {
    Pending& p = pending.at(id);
    p.applied = cluster_.resize_in_place(id, p.requested);
  }

  // (4) one simulator tick
  cluster_.step(slice);

  // (5) shared term once, then per-agent rewards
  std::vector<PriorityResponse> responses;
  for (ServiceId id : cluster_.active_ids()) {
    const auto& s = cluster_.service(id);
    responses.push_back({s.priority, s.response_s});
  }
  const double omega = weighted_response_time(responses);

  EpisodeLog records;
  records.reserve(order.size());
  for (ServiceId id : cluster_.active_ids()) {
    AgentSlot& slot = agents_.at(id);
    Pending& p = pending.at(id);
    const MicroserviceState& s = cluster_.service(id);

    TickRecord r;
    r.episode = episode_;
    r.tick = tick_;
    r.service = id;
    r.priority = s.priority;
    r.rate_rps = rate_to_rps(s.rate);
    r.limit_mc = s.limit_mc;
    r.usage_mc = s.usage_mc;
    r.utilization_pct = s.utilization_pct();
    r.response_s = s.response_s;
    r.backlog_mcs = s.backlog_mcs();
    r.action = p.action;
    r.requested_delta_mc = p.requested;
    r.applied_delta_mc = p.applied;
    r.external_delta_mc = slot.external_delta;
    r.reward = reward_breakdown(r.utilization_pct, slot.prev_utilization, omega, config_.reward);
    check_finite(r);
    slot.external_delta = 0;
    slot.prev_utilization = r.utilization_pct;

    // (6) store transitions
    if (options.learn) {
      std::visit(
          [&](auto& policy) {
            using T = std::decay_t<decltype(policy)>;
            if constexpr (!std::is_same_v<T, HeuristicController>) {
              Observation next = slot.history.peek(take_snapshot(cluster_, id, config_.observe));
              if constexpr (std::is_same_v<T, DqnAgent>) {
                policy.store(Transition{std::move(p.obs), p.action_index, r.reward.r_total, std::move(next)});
              } else {
                policy.store(RolloutRecord{std::move(p.obs), p.sample.raw_action, p.sample.action, p.sample.log_prob,
                                           r.reward.r_total, std::move(next), false});
              }
            }
          },
          slot.policy);
    }
    records.push_back(r);
  }

  // (7) learning hooks
  if (options.learn) {
    for (ServiceId id : order) {
      AgentSlot& slot = agents_.at(id);
      if (auto* d = std::get_if<DqnAgent>(&slot.policy)) d->learn_from_buffer(slot.rng);
    }
  }
  ++tick_;
  return records;
}

void Engine::end_episode(bool learn) {
  for (auto& [id, slot] : agents_) {
    if (auto* p = std::get_if<PpoAgent>(&slot.policy)) {
      p->mark_episode_end();
      if (learn) p->update();
    }
  }
  ++episode_;
}

void Engine::begin_episode(const std::vector<std::pair<ServiceSpec, Millicores>>& services) {
  std::map<ServiceId, AgentSlot> kept;
  cluster_ = Cluster(config_.cluster);
  for (const auto& [spec, limit] : services) {
    auto it = agents_.find(spec.id);
    if (it != agents_.end()) {
      kept.emplace(spec.id, std::move(it->second));
      agents_.erase(it);
    } else {
      kept.emplace(spec.id, make_slot(spec.id, nullptr));
    }
    AgentSlot& slot = kept.at(spec.id);
    slot.history.clear();
    slot.prev_utilization = 0.0;
    slot.external_delta = 0;
    cluster_.add_service(spec);
  }
  for (const auto& [spec, limit] : services) set_limit(spec.id, limit);
  agents_ = std::move(kept);
  tick_ = 0;
}

CheckpointSet Engine::train(const Progress& progress) {
  const TrainingConfig& tc = config_.training;
  Rng load_rng = make_rng(config_.seed, "training-load");
  Rng setup_rng = make_rng(config_.seed, "episode-setup");
  std::vector<ServiceId> ids;
  for (int i = 1; i <= tc.agents; ++i) ids.push_back(ServiceId{i});

  const Millicores floor = config_.cluster.min_limit_mc;
  const Millicores spare = config_.cluster.capacity_mc - floor * tc.agents;
  if (spare < 0) throw ConfigError("training agents do not fit at the floor limit");

  episode_ = 0;
  for (int ep = 0; ep < tc.episodes; ++ep) {
    std::uniform_int_distribution<int> prio(0, config_.observe.max_priority);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double fill = tc.initial_fill_min + (tc.initial_fill_max - tc.initial_fill_min) * unit(setup_rng);
    std::vector<double> weights;
    for (std::size_t i = 0; i < ids.size(); ++i) weights.push_back(unit(setup_rng));
    const double wsum = std::accumulate(weights.begin(), weights.end(), 0.0);

    std::vector<std::pair<ServiceSpec, Millicores>> services;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      ServiceSpec spec{ids[i], tc.randomize_priorities ? prio(setup_rng) : 0, tc.work_per_request_mcs};
      const auto extra = wsum > 0.0 ? static_cast<Millicores>(std::floor(fill * static_cast<double>(spare) * weights[i] / wsum)) : 0;
      services.emplace_back(spec, floor + extra);
    }
    begin_episode(services);
    for (auto& [id, slot] : agents_) {
      if (auto* d = std::get_if<DqnAgent>(&slot.policy)) d->decay_epsilon(ep);
      if (auto* p = std::get_if<PpoAgent>(&slot.policy)) p->decay_stddev(ep);
    }

    const auto slices = synthetic_load(ids, tc.ticks_per_episode, tc.load, load_rng);
    double reward_sum = 0.0;
    std::size_t reward_count = 0;
    for (const auto& slice : slices) {
      for (const auto& r : run_tick(slice, TickOptions{true, true})) {
        reward_sum += r.reward.r_total;
        ++reward_count;
      }
    }
    end_episode(true);
    if (progress) progress(ep, reward_count ? reward_sum / static_cast<double>(reward_count) : 0.0);
  }

  CheckpointSet set;
  set.policy = config_.policy;
  set.seed = config_.seed;
  set.config_hash = config_.agent_hash();
  for (const auto& [id, slot] : agents_) set.agents[id.value] = agent_checkpoint(id);
  return set;
}

EpisodeLog Engine::evaluate(const Scenario& scenario, const CheckpointSet* checkpoints, bool jitter,
                            std::uint64_t jitter_seed) {
  scenario.validate();
  const bool learned = config_.policy != PolicyKind::Heuristic;
  if (learned) {
    if (!checkpoints) throw ConfigError("policy " + to_string(config_.policy) + " needs trained checkpoints");
    if (checkpoints->policy != config_.policy) throw CheckpointError("checkpoints were trained for another policy");
    if (checkpoints->config_hash != config_.agent_hash()) {
      throw CheckpointError("checkpoint config hash " + checkpoints->config_hash + " does not match " +
                            config_.agent_hash());
    }
  }
  auto warm = [&](ServiceId id) { return learned ? &checkpoints->for_service(id) : nullptr; };

  agents_.clear();
  cluster_ = Cluster(scenario.cluster);
  episode_ = 0;
  tick_ = 0;
  for (const auto& s : scenario.services) {
    if (s.add_tick == 0) attach_agent(s.spec, warm(s.spec.id));
  }
  for (const auto& s : scenario.services) {
    if (s.add_tick == 0 && s.initial_limit_mc > 0) set_limit(s.spec.id, s.initial_limit_mc);
  }

  const WorkloadTrace trace = scenario.trace();
  Rng noise = Rng(jitter_seed);
  EpisodeLog log;
  for (int t = 0; t < trace.horizon(); ++t) {
    for (const auto& e : trace.events_at(t)) {
      if (e.kind == ServiceEvent::Kind::Remove) {
        detach_agent(e.spec.id);
      } else {
        attach_agent(e.spec, warm(e.spec.id));
      }
    }
    const WorkloadSlice& base = trace.slices[static_cast<std::size_t>(t)];
    const WorkloadSlice slice = jitter ? poisson_jitter(base, scenario.cluster.tick_seconds, noise) : base;
    auto records = run_tick(slice, TickOptions{false, false});
    log.insert(log.end(), records.begin(), records.end());
  }
  return log;
}

}  // namespace podscale
