#include <gtest/gtest.h>

#include <random>

#include "podscale/error.hpp"
#include "podscale/observe.hpp"

using namespace podscale;

namespace {

constexpr ServiceId S1{1}, S2{2}, S3{3};

}  // namespace

TEST(Observe, SingleServiceNormalization) {
  Cluster c(ClusterConfig{1200, 25, 1});
  c.add_service({S1, 0, 8});
  c.resize_in_place(S1, 575);
  c.step({{S1, rps_to_rate(30)}});
  const Snapshot s = take_snapshot(c, S1, {});
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::Limit)], 0.5);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::Usage)], 240.0 / 1200.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::Available)], 0.5);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::Utilization)], 0.4);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::OthersUtilization)], 0.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::OthersPriority)], 0.0);
}

TEST(Observe, PriorityNormalization) {
  Cluster c(ClusterConfig{1200, 25, 1});
  c.add_service({S1, 2, 8});
  c.add_service({S2, 0, 8});
  c.add_service({S3, 1, 8});
  const Snapshot s = take_snapshot(c, S1, ObserveConfig{5, 2});
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::Priority)], 1.0);
  EXPECT_DOUBLE_EQ(s[static_cast<int>(ObsVar::OthersPriority)], 0.25);
}

TEST(Observe, WarmFillRepeatsFirstSnapshot) {
  Cluster c(ClusterConfig{1200, 25, 1});
  c.add_service({S1, 0, 8});
  HistoryBuffer h(5);
  const Observation o = build_observation(c, S1, h, {});
  ASSERT_EQ(o.size(), 35u);
  for (int v = 0; v < kObservationVariables; ++v) {
    for (int k = 1; k < 5; ++k) EXPECT_EQ(o.at(static_cast<ObsVar>(v), k), o.at(static_cast<ObsVar>(v), 0));
  }
}

TEST(Observe, FifoMostRecentFirst) {
  Cluster c(ClusterConfig{1000, 25, 1});
  c.add_service({S1, 0, 8});
  HistoryBuffer h(3);
  build_observation(c, S1, h, {});  // limit 25
  c.resize_in_place(S1, 75);
  build_observation(c, S1, h, {});  // limit 100
  c.resize_in_place(S1, 100);
  const Observation o = build_observation(c, S1, h, {});  // limit 200
  EXPECT_DOUBLE_EQ(o.at(ObsVar::Limit, 0), 0.2);
  EXPECT_DOUBLE_EQ(o.at(ObsVar::Limit, 1), 0.1);
  EXPECT_DOUBLE_EQ(o.at(ObsVar::Limit, 2), 0.025);
  // variable-major flattening
  EXPECT_DOUBLE_EQ(o.vector()(0), 0.2);
  EXPECT_DOUBLE_EQ(o.vector()(2), 0.025);
}

TEST(Observe, PeekDoesNotMutate) {
  Cluster c(ClusterConfig{1000, 25, 1});
  c.add_service({S1, 0, 8});
  HistoryBuffer h(3);
  const Observation first = build_observation(c, S1, h, {});
  c.resize_in_place(S1, 100);
  const Observation peeked = h.peek(take_snapshot(c, S1, {}));
  EXPECT_EQ(h.matrix(), first);
  EXPECT_EQ(peeked, build_observation(c, S1, h, {}));
}

TEST(Observe, IdenticalPushesGiveConstantHistory) {
  Cluster c(ClusterConfig{1000, 25, 1});
  c.add_service({S1, 0, 8});
  c.resize_in_place(S1, 300);
  HistoryBuffer h(4);
  h.warm_fill(Snapshot{});
  Observation o(4);
  for (int i = 0; i < 4; ++i) o = build_observation(c, S1, h, {});
  for (int v = 0; v < kObservationVariables; ++v) {
    for (int k = 1; k < 4; ++k) EXPECT_EQ(o.at(static_cast<ObsVar>(v), k), o.at(static_cast<ObsVar>(v), 0));
  }
}

TEST(Observe, AllValuesInUnitInterval) {
  std::mt19937_64 rng(3);
  Cluster c(ClusterConfig{1200, 25, 1});
  for (int i = 1; i <= 4; ++i) c.add_service({ServiceId{i}, static_cast<int>(rng() % 3), 8});
  std::vector<HistoryBuffer> hs(4, HistoryBuffer(5));
  for (int t = 0; t < 500; ++t) {
    WorkloadSlice slice;
    for (ServiceId id : c.active_ids()) {
      c.resize_in_place(id, static_cast<Millicores>(rng() % 201) - 100);
      slice[id] = static_cast<MilliRate>(rng() % 150'000);
    }
    c.step(slice);
    for (ServiceId id : c.active_ids()) {
      const Observation o = build_observation(c, id, hs[static_cast<std::size_t>(id.value - 1)], {});
      for (double v : o.values()) {
        ASSERT_TRUE(v >= 0.0 && v <= 1.0) << v;
      }
    }
  }
}

TEST(Observe, InactiveServiceIsAnError) {
  Cluster c(ClusterConfig{1000, 25, 1});
  HistoryBuffer h(5);
  EXPECT_THROW(build_observation(c, S1, h, {}), StateError);
  EXPECT_THROW(HistoryBuffer(0), ConfigError);
}
