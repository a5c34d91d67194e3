#pragma once

#include <array>
#include <deque>
#include <vector>

#include <Eigen/Dense>

#include "podscale/cluster.hpp"

namespace podscale {

inline constexpr int kObservationVariables = 7;

// Variable order inside a snapshot.
enum class ObsVar : int {
  Limit = 0,
  Usage,
  Available,
  Utilization,
  OthersUtilization,
  Priority,
  OthersPriority,
};

struct ObserveConfig {
  int history = 5;
  int max_priority = 2;

  void validate() const;
};

using Snapshot = std::array<double, kObservationVariables>;

// 7 x k matrix, slot 0 is the most recent snapshot. Flattened variable-major
// (variable * k + slot) when fed to a network.
class Observation {
 public:
  explicit Observation(int history) : history_(history), values_(kObservationVariables * history, 0.0) {}

  int history() const { return history_; }
  std::size_t size() const { return values_.size(); }
  double at(ObsVar var, int slot) const { return values_[index(var, slot)]; }
  double& at(ObsVar var, int slot) { return values_[index(var, slot)]; }
  const std::vector<double>& values() const { return values_; }
  Eigen::VectorXd vector() const;

  friend bool operator==(const Observation&, const Observation&) = default;

 private:
  std::size_t index(ObsVar var, int slot) const {
    return static_cast<std::size_t>(static_cast<int>(var) * history_ + slot);
  }
  int history_;
  std::vector<double> values_;
};

// Normalized snapshot of one service: limit, usage and free pool over
// capacity; utilizations over 100; priorities over max_priority. Means over
// other services are 0 when the service is alone.
Snapshot take_snapshot(const Cluster& cluster, ServiceId id, const ObserveConfig& config);

// Per-agent FIFO of the last k snapshots.
class HistoryBuffer {
 public:
  explicit HistoryBuffer(int history);

  void warm_fill(const Snapshot& snapshot);
  void push(const Snapshot& snapshot);
  Observation matrix() const;
  // Matrix as it would look after pushing `snapshot`, without mutating.
  Observation peek(const Snapshot& snapshot) const;
  bool empty() const { return slots_.empty(); }
  void clear() { slots_.clear(); }

 private:
  int history_;
  std::deque<Snapshot> slots_;  // front is most recent
};

// Pushes the current snapshot of `id` and returns the updated matrix. An empty
// buffer is warm-filled with the snapshot first.
Observation build_observation(const Cluster& cluster, ServiceId id, HistoryBuffer& history,
                              const ObserveConfig& config);

// One observation per column, for batched network calls.
Eigen::MatrixXd stack_observations(const std::vector<const Observation*>& obs);

}  // namespace podscale
