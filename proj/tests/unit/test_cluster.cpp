#include <gtest/gtest.h>

#include <random>

#include "podscale/cluster.hpp"
#include "podscale/error.hpp"

using namespace podscale;

namespace {

constexpr ServiceId S1{1}, S2{2}, S3{3};

Cluster one_service(Millicores limit, Millicores capacity = 1200) {
  Cluster c(ClusterConfig{capacity, 25, 1});
  c.add_service({S1, 0, 8});
  c.resize_in_place(S1, limit - 25);
  return c;
}

}  // namespace

TEST(Cluster, IdleServicePaysBaseServiceTime) {
  Cluster c = one_service(100);
  c.step({{S1, 0}});
  const auto& s = c.service(S1);
  EXPECT_EQ(s.usage_mc, 0.0);
  EXPECT_EQ(s.backlog, 0);
  EXPECT_DOUBLE_EQ(s.response_s, 0.08);
}

TEST(Cluster, UnderloadedServiceDrainsEverything) {
  Cluster c = one_service(400);
  c.step({{S1, rps_to_rate(40)}});
  const auto& s = c.service(S1);
  EXPECT_DOUBLE_EQ(s.usage_mc, 320.0);
  EXPECT_EQ(s.backlog, 0);
  EXPECT_DOUBLE_EQ(s.utilization_pct(), 80.0);
  EXPECT_DOUBLE_EQ(s.response_s, 0.02);
}

TEST(Cluster, OverloadedServiceAccumulatesBacklog) {
  Cluster c = one_service(200);
  c.step({{S1, rps_to_rate(40)}});
  const auto& s = c.service(S1);
  EXPECT_DOUBLE_EQ(s.usage_mc, 200.0);
  EXPECT_DOUBLE_EQ(s.backlog_mcs(), 120.0);
  EXPECT_DOUBLE_EQ(s.response_s, (120.0 + 8.0) / 200.0);
}

TEST(Cluster, ResizeClampsToFreePoolAndFloor) {
  Cluster c(ClusterConfig{1200, 25, 1});
  c.add_service({S1, 0, 8});
  c.add_service({S2, 0, 8});
  c.resize_in_place(S2, 1200 - 50 - 200);  // free = 200
  EXPECT_EQ(c.free_mc(), 200);
  EXPECT_EQ(c.resize_in_place(S1, 50), 50);
  c.resize_in_place(S2, 130);  // free = 20
  EXPECT_EQ(c.resize_in_place(S1, 50), 20);

  Cluster d = one_service(60);
  EXPECT_EQ(d.resize_in_place(S1, -100), -35);
  EXPECT_EQ(d.service(S1).limit_mc, 25);
}

TEST(Cluster, ResizeKeepsBacklog) {
  Cluster c = one_service(200);
  c.step({{S1, rps_to_rate(40)}});
  const MicroWork backlog = c.service(S1).backlog;
  c.resize_in_place(S1, 300);
  EXPECT_EQ(c.service(S1).backlog, backlog);
  EXPECT_DOUBLE_EQ(c.service(S1).usage_mc, 200.0);
}

TEST(Cluster, AddAndRemove) {
  Cluster c = one_service(700);
  EXPECT_EQ(c.free_mc(), 500);
  c.add_service({S2, 0, 8});
  EXPECT_EQ(c.service(S2).limit_mc, 25);
  EXPECT_EQ(c.free_mc(), 475);

  c.resize_in_place(S2, 275);
  const Millicores before = c.free_mc();
  EXPECT_EQ(c.remove_service(S2), 300);
  EXPECT_EQ(c.free_mc(), before + 300);
  EXPECT_FALSE(c.contains(S2));
}

TEST(Cluster, AddWithoutFreeFloorIsRejected) {
  Cluster c = one_service(1200);
  EXPECT_THROW(c.add_service({S2, 0, 8}), StateError);
  EXPECT_THROW(c.add_service({S1, 0, 8}), StateError);
}

TEST(Cluster, UnknownIdsAreErrors) {
  Cluster c = one_service(100);
  EXPECT_THROW(c.step({{S2, 1000}}), TraceError);
  EXPECT_THROW(c.resize_in_place(S2, 10), StateError);
  EXPECT_THROW(c.remove_service(S2), StateError);
  EXPECT_THROW(c.step({{S1, -1}}), TraceError);
}

TEST(Cluster, ConfigValidation) {
  EXPECT_THROW(Cluster(ClusterConfig{0, 25, 1}), ConfigError);
  EXPECT_THROW(Cluster(ClusterConfig{100, 0, 1}), ConfigError);
  EXPECT_THROW(Cluster(ClusterConfig{100, 25, 0}), ConfigError);
}

TEST(Cluster, MonotoneRelief) {
  double previous = 1e300;
  for (Millicores limit = 25; limit <= 1200; limit += 25) {
    Cluster c = one_service(limit);
    c.step({{S1, rps_to_rate(30)}});
    if (c.service(S1).backlog == 0) {
      EXPECT_LT(c.service(S1).response_s, previous) << limit;
      previous = c.service(S1).response_s;
    }
  }
}

TEST(Cluster, StableServiceSettlesImmediately) {
  Cluster c = one_service(500);
  std::mt19937_64 rng(4);
  std::uniform_int_distribution<MilliRate> rate(0, rps_to_rate(62));  // 62 * 8 < 500
  for (int t = 0; t < 200; ++t) {
    c.step({{S1, rate(rng)}});
    EXPECT_EQ(c.service(S1).backlog, 0);
    EXPECT_DOUBLE_EQ(c.service(S1).response_s, 8.0 / 500.0);
  }
}

// Random resizes, adds, removes and loads; capacity and work must balance
// exactly at every step.
TEST(Cluster, ConservationUnderRandomOperations) {
  std::mt19937_64 rng(2024);
  Cluster c(ClusterConfig{1500, 25, 1});
  std::map<ServiceId, MicroWork> discarded;
  std::map<ServiceId, std::pair<MicroWork, MicroWork>> retired;  // arrived, processed
  int next_id = 1;
  for (int t = 0; t < 3000; ++t) {
    std::uniform_int_distribution<int> op(0, 9);
    const int o = op(rng);
    if (o == 0 && c.free_mc() >= 25) {
      c.add_service({ServiceId{next_id++}, static_cast<int>(rng() % 3), 1 + static_cast<std::int64_t>(rng() % 12)});
    } else if (o == 1 && c.active_count() > 1) {
      const auto ids = c.active_ids();
      const ServiceId victim = ids[rng() % ids.size()];
      const auto& s = c.service(victim);
      retired[victim] = {s.total_arrived, s.total_processed};
      discarded[victim] = s.backlog;
      const Millicores before = c.free_mc();
      const Millicores released = c.remove_service(victim);
      EXPECT_EQ(c.free_mc(), before + released);
    }
    WorkloadSlice slice;
    for (ServiceId id : c.active_ids()) {
      std::uniform_int_distribution<Millicores> delta(-300, 300);
      c.resize_in_place(id, delta(rng));
      std::uniform_int_distribution<MilliRate> rate(0, 120'000);
      slice[id] = rate(rng);
    }
    c.step(slice);

    Millicores sum = 0;
    for (ServiceId id : c.active_ids()) {
      const auto& s = c.service(id);
      sum += s.limit_mc;
      ASSERT_GE(s.limit_mc, 25);
      ASSERT_GE(s.backlog, 0);
      ASSERT_LE(s.usage_mc, static_cast<double>(s.limit_mc));
      ASSERT_EQ(s.total_processed, s.total_arrived - s.backlog);
    }
    ASSERT_EQ(sum + c.free_mc(), 1500);
    ASSERT_EQ(sum, c.allocated_mc());
  }
  for (const auto& [id, totals] : retired) {
    EXPECT_EQ(totals.second, totals.first - discarded[id]);
  }
}

TEST(Cluster, Deterministic) {
  auto run = [] {
    Cluster c(ClusterConfig{1200, 25, 1});
    c.add_service({S1, 0, 8});
    c.add_service({S2, 1, 8});
    c.add_service({S3, 2, 8});
    std::mt19937_64 rng(11);
    std::vector<double> trace;
    for (int t = 0; t < 100; ++t) {
      WorkloadSlice slice;
      for (ServiceId id : c.active_ids()) {
        c.resize_in_place(id, static_cast<Millicores>(rng() % 101) - 50);
        slice[id] = static_cast<MilliRate>(rng() % 80'000);
      }
      c.step(slice);
      for (ServiceId id : c.active_ids()) trace.push_back(c.service(id).response_s);
    }
    return trace;
  };
  EXPECT_EQ(run(), run());
}
