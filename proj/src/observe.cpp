#include "podscale/observe.hpp"

#include <algorithm>

#include "podscale/error.hpp"

namespace podscale {

void ObserveConfig::validate() const {
  if (history <= 0) throw ConfigError("observation history must be positive");
  if (max_priority <= 0) throw ConfigError("max_priority must be positive");
}

Eigen::VectorXd Observation::vector() const {
  return Eigen::Map<const Eigen::VectorXd>(values_.data(), static_cast<Eigen::Index>(values_.size()));
}

Snapshot take_snapshot(const Cluster& cluster, ServiceId id, const ObserveConfig& config) {
  const MicroserviceState& own = cluster.service(id);
  const auto capacity = static_cast<double>(cluster.config().capacity_mc);
  const auto max_priority = static_cast<double>(config.max_priority);

  double others_util = 0.0;
  double others_priority = 0.0;
  int others = 0;
  for (ServiceId other : cluster.active_ids()) {
    if (other == id) continue;
    const MicroserviceState& s = cluster.service(other);
    others_util += s.utilization_pct();
    others_priority += static_cast<double>(s.priority);
    ++others;
  }
  if (others > 0) {
    others_util /= others;
    others_priority /= others;
  }

  Snapshot snap{};
  snap[static_cast<int>(ObsVar::Limit)] = static_cast<double>(own.limit_mc) / capacity;
  snap[static_cast<int>(ObsVar::Usage)] = own.usage_mc / capacity;
  snap[static_cast<int>(ObsVar::Available)] = static_cast<double>(cluster.free_mc()) / capacity;
  snap[static_cast<int>(ObsVar::Utilization)] = own.utilization_pct() / 100.0;
  snap[static_cast<int>(ObsVar::OthersUtilization)] = others_util / 100.0;
  snap[static_cast<int>(ObsVar::Priority)] =
      std::min(static_cast<double>(own.priority) / max_priority, 1.0);
  snap[static_cast<int>(ObsVar::OthersPriority)] = std::min(others_priority / max_priority, 1.0);
  return snap;
}

HistoryBuffer::HistoryBuffer(int history) : history_(history) {
  if (history <= 0) throw ConfigError("observation history must be positive");
}

void HistoryBuffer::warm_fill(const Snapshot& snapshot) {
  slots_.assign(static_cast<std::size_t>(history_), snapshot);
}

void HistoryBuffer::push(const Snapshot& snapshot) {
  if (slots_.empty()) {
    warm_fill(snapshot);
    return;
  }
  slots_.push_front(snapshot);
  slots_.pop_back();
}

Observation HistoryBuffer::matrix() const {
  if (slots_.empty()) throw StateError("history buffer used before warm fill");
  Observation obs(history_);
  for (int slot = 0; slot < history_; ++slot) {
    for (int v = 0; v < kObservationVariables; ++v) {
      obs.at(static_cast<ObsVar>(v), slot) = slots_[static_cast<std::size_t>(slot)][v];
    }
  }
  return obs;
}

Observation HistoryBuffer::peek(const Snapshot& snapshot) const {
  HistoryBuffer copy = *this;
  copy.push(snapshot);
  return copy.matrix();
}

Observation build_observation(const Cluster& cluster, ServiceId id, HistoryBuffer& history,
                              const ObserveConfig& config) {
  history.push(take_snapshot(cluster, id, config));
  return history.matrix();
}

Eigen::MatrixXd stack_observations(const std::vector<const Observation*>& obs) {
  if (obs.empty()) return {};
  const auto rows = static_cast<Eigen::Index>(obs.front()->size());
  Eigen::MatrixXd m(rows, static_cast<Eigen::Index>(obs.size()));
  for (std::size_t j = 0; j < obs.size(); ++j) {
    if (static_cast<Eigen::Index>(obs[j]->size()) != rows) throw ConfigError("observation shapes differ in batch");
    m.col(static_cast<Eigen::Index>(j)) = obs[j]->vector();
  }
  return m;
}

}  // namespace podscale
