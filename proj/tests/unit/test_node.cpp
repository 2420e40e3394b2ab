#include <gtest/gtest.h>

#include <random>

#include "edgetb/common/error.hpp"
#include "edgetb/node/node.hpp"

namespace edgetb::node {
namespace {

NodeSpec spec(const std::string& id, double cpu, double mem = 100, double battery = 1e9) {
  NodeSpec s;
  s.id = id;
  s.cpu_capacity = cpu;
  s.memory_capacity = mem;
  s.battery_capacity = battery;
  return s;
}

StageSpec stage(double cpu, double cost = 1.0, double mem = 1.0) {
  StageSpec s;
  s.name = "s";
  s.cpu_demand = cpu;
  s.mem_demand = mem;
  s.per_item_cost = cost;
  s.input_topic = "in";
  s.output_topic = "out";
  return s;
}

distrib::Message item(std::uint64_t seq) {
  distrib::Message m;
  m.topic = "in";
  m.origin = "src";
  m.seq = seq;
  m.created_at = 10;
  return m;
}

TEST(Admit, ExactFitAccepted) {
  NodeState n(spec("n", 4));
  EXPECT_FALSE(admit_stage(n, stage(4), "a").has_value());
  EXPECT_DOUBLE_EQ(n.cpu_free, 0.0);
  ASSERT_NE(n.find("a"), nullptr);
  EXPECT_TRUE(n.find("a")->queue.empty());
}

TEST(Admit, InsufficientCpuLeavesStateAlone) {
  NodeState n(spec("n", 4));
  ASSERT_FALSE(admit_stage(n, stage(3), "a").has_value());
  EXPECT_EQ(admit_stage(n, stage(2), "b"), AdmitReject::InsufficientCpu);
  EXPECT_DOUBLE_EQ(n.cpu_free, 1.0);
  EXPECT_EQ(n.stages.size(), 1u);
}

TEST(Admit, InsufficientMemory) {
  NodeState n(spec("n", 4, 2));
  EXPECT_EQ(admit_stage(n, stage(1, 1, 3), "a"), AdmitReject::InsufficientMemory);
}

TEST(Admit, DownNodeThrows) {
  NodeState n(spec("n", 4));
  n.status = NodeStatus::Down;
  EXPECT_THROW(admit_stage(n, stage(1), "a"), Error);
}

TEST(Admit, RemoveReleasesAndReportsDiscards) {
  NodeState n(spec("n", 4));
  admit_stage(n, stage(3), "a");
  for (int i = 0; i < 5; ++i) enqueue(*n.find("a"), item(i), 100);
  EXPECT_EQ(remove_stage(n, "a"), 5u);
  EXPECT_DOUBLE_EQ(n.cpu_free, 4.0);
  EXPECT_EQ(remove_stage(n, "a"), 0u);
}

TEST(Admit, ReservationsNeverExceedCapacity) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    NodeState n(spec("n", 1 + static_cast<double>(rng() % 10), 1 + static_cast<double>(rng() % 10)));
    double cpu = 0, mem = 0;
    for (int i = 0; i < 30; ++i) {
      const std::string id = "i" + std::to_string(rng() % 8);
      if (rng() % 3 == 0) {
        remove_stage(n, id);
      } else if (!n.find(id)) {
        admit_stage(n, stage(static_cast<double>(rng() % 5), 1, static_cast<double>(rng() % 5)), id);
      }
      cpu = mem = 0;
      for (const auto& s : n.stages) {
        cpu += s.stage.cpu_demand;
        mem += s.stage.mem_demand;
      }
      ASSERT_LE(cpu, n.spec.cpu_capacity + 1e-9);
      ASSERT_LE(mem, n.spec.memory_capacity + 1e-9);
      ASSERT_NEAR(n.cpu_free, n.spec.cpu_capacity - cpu, 1e-9);
      ASSERT_NEAR(n.mem_free, n.spec.memory_capacity - mem, 1e-9);
    }
  }
}

TEST(Enqueue, WatermarkCrossedOnce) {
  StageInstance inst;
  int crossings = 0;
  for (int i = 0; i < 5; ++i) crossings += enqueue(inst, item(i), 3) ? 1 : 0;
  EXPECT_EQ(crossings, 1);
  EXPECT_EQ(inst.queue.size(), 5u);
}

TEST(Step, RateTwoPerSecond) {
  NodeState n(spec("n", 4));
  admit_stage(n, stage(2, 1), "a", "p");
  for (int i = 0; i < 10; ++i) enqueue(*n.find("a"), item(i), 100);
  const auto r = step_execute(n, 1000);
  ASSERT_EQ(r.outputs.size(), 2u);
  EXPECT_EQ(n.find("a")->queue.size(), 8u);
  EXPECT_EQ(r.outputs[0].offset_ms, 500);
  EXPECT_EQ(r.outputs[1].offset_ms, 1000);
  EXPECT_EQ(r.outputs[0].message.topic, "out");
  EXPECT_EQ(r.outputs[0].message.trace_start, 10);
  EXPECT_EQ(r.outputs[0].pipeline, "p");
}

TEST(Step, FractionalCreditCarriesAcrossTicks) {
  NodeState n(spec("n", 4));
  admit_stage(n, stage(2, 1), "a");
  for (int i = 0; i < 10; ++i) enqueue(*n.find("a"), item(i), 100);
  std::size_t produced = 0;
  for (int t = 0; t < 10; ++t) produced += step_execute(n, 100).outputs.size();
  EXPECT_EQ(produced, 2u);
}

TEST(Step, EmptyQueueProducesNothing) {
  NodeState n(spec("n", 4));
  admit_stage(n, stage(2, 1), "a");
  const auto r = step_execute(n, 1000);
  EXPECT_TRUE(r.outputs.empty());
  EXPECT_DOUBLE_EQ(r.drained_j, n.spec.idle_drain_w);
}

TEST(Step, BatteryExhaustionAtAnalyticTime) {
  // 1 J, idle 0.1 W plus one busy 2-cpu stage at 1 J per cpu-second: 2.1 W.
  NodeState n(spec("n", 4, 100, 1.0));
  admit_stage(n, stage(2, 1), "a");
  for (int i = 0; i < 10; ++i) enqueue(*n.find("a"), item(i), 100);
  const auto r = step_execute(n, 1000);
  EXPECT_TRUE(r.went_down);
  EXPECT_EQ(r.elapsed_ms, static_cast<SimTime>(1000.0 / 2.1));  // 476
  EXPECT_DOUBLE_EQ(r.drained_j, 1.0);
  EXPECT_EQ(r.outputs.size(), 0u);
  EXPECT_FALSE(n.up());
  EXPECT_DOUBLE_EQ(n.battery_j, 0.0);
  EXPECT_THROW(step_execute(n, 100), Error);
}

TEST(Step, ConservationProperty) {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 200; ++trial) {
    NodeState n(spec("n", 10, 100, 1 + static_cast<double>(rng() % 50)));
    admit_stage(n, stage(1 + static_cast<double>(rng() % 4), 0.5 + static_cast<double>(rng() % 4)), "a");
    admit_stage(n, stage(1 + static_cast<double>(rng() % 4), 0.5 + static_cast<double>(rng() % 4)), "b");
    std::size_t enq = 0, out = 0;
    double drained = 0;
    const double start = n.battery_j;
    std::uint64_t seq = 0;
    for (int t = 0; t < 50 && n.up(); ++t) {
      for (auto& s : n.stages) {
        const auto k = rng() % 4;
        for (std::uint64_t i = 0; i < k; ++i, ++enq) enqueue(s, item(seq++), 1000);
      }
      const auto r = step_execute(n, 100);
      out += r.outputs.size();
      drained += r.drained_j;
      for (const auto& o : r.outputs) ASSERT_LE(o.offset_ms, r.elapsed_ms);
      ASSERT_GE(n.battery_j, 0.0);
    }
    std::size_t queued = 0;
    for (const auto& s : n.stages) queued += s.queue.size();
    ASSERT_EQ(enq, out + queued);
    ASSERT_NEAR(start - n.battery_j, drained, 1e-9);
  }
}

TEST(Sensors, BatteryLocationThreat) {
  NodeSpec s = spec("n", 1, 1, 50);
  s.sensors = {"battery", "location", "threat", "network"};
  s.waypoints = {{0, {0, 0}}, {1000, {10, 20}}};
  NodeState n(s);
  n.battery_j = 25;
  n.threat_since = 300;
  const auto r = read_sensors(n, 500, {{"m", 4000.0}});
  ASSERT_EQ(r.size(), 4u);
  EXPECT_DOUBLE_EQ(std::get<double>(r[0].value), 50.0);
  EXPECT_EQ(std::get<Location>(r[1].value), (Location{5, 10}));
  EXPECT_TRUE(std::get<bool>(r[2].value));
  EXPECT_EQ(r[3].sensor_id, "network:m");
  EXPECT_DOUBLE_EQ(std::get<double>(r[3].value), 4000.0);
}

TEST(Sensors, DownNodeThrows) {
  NodeState n(spec("n", 1));
  n.status = NodeStatus::Down;
  EXPECT_THROW(read_sensors(n, 0), Error);
}

TEST(Interpolate, ClampsAtEnds) {
  const std::vector<Waypoint> w{{100, {1, 1}}, {200, {3, 5}}};
  EXPECT_EQ(interpolate(w, 0, {}), (Location{1, 1}));
  EXPECT_EQ(interpolate(w, 150, {}), (Location{2, 3}));
  EXPECT_EQ(interpolate(w, 999, {}), (Location{3, 5}));
  EXPECT_EQ(interpolate({}, 5, {7, 7}), (Location{7, 7}));
}

TEST(Slot, AcceptsByModulus) {
  SlotFilter f{1, 3};
  EXPECT_TRUE(f.accepts(4));
  EXPECT_FALSE(f.accepts(3));
  EXPECT_TRUE(SlotFilter{}.accepts(12345));
}

}  // namespace
}  // namespace edgetb::node
