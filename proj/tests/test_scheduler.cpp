#include "doctest.h"
#include "sailx/scheduler.hpp"

#include <algorithm>

using namespace sailx;

namespace {

Demonstration long_line() {
  Demonstration d;
  d.object_start = Pose(Vector3(0.8, 0.0, 0.02));
  for (int i = 0; i < 400; ++i) {
    DemoRecord r;
    r.step = i;
    r.time = 0.05 * i;
    r.reached = r.commanded = Pose(Vector3(0.3 + 0.0005 * i, 0.0, 0.2));
    r.k = 0;
    d.records.push_back(r);
  }
  return d;
}

struct Fixture {
  Demonstration demo = long_line();
  TaskSpec spec;
  WorldState world;
  Fixture() {
    spec.robot_start = demo.records[0].reached;
    spec.object_start = demo.object_start;
    spec.t_max = 1000.0;
    world.robot.pose = spec.robot_start;
    world.object_pose = spec.object_start;
  }
  MockPolicy policy(int hp, int he, int hc) const {
    PolicyConfig c;
    c.horizon_prediction = hp;
    c.horizon_execution = he;
    c.horizon_condition = hc;
    c.noise_sigma = 0.0;
    c.p_branch = 0.0;
    return MockPolicy({demo}, c);
  }
};

ExecutorConfig ideal(double delay, int hp, int he, int hc, double interval) {
  ExecutorConfig e;
  e.mode = TrackingMode::kIdeal;
  e.delta_delay = delay;
  e.horizon_prediction = hp;
  e.horizon_execution = he;
  e.horizon_condition = hc;
  e.interval_override = interval;
  e.max_cycles = 30;
  return e;
}

}  // namespace

TEST_CASE("interval bounds") {
  CHECK(lower_bound_interval(0.1, 32, 4) == doctest::Approx(0.1 / 28.0));
  CHECK(lower_bound_interval(0.0, 32, 4) == 0.0);
  CHECK_THROWS_AS(lower_bound_interval(0.1, 4, 4), ConfigError);
  CHECK_THROWS_AS(lower_bound_interval(-0.1, 32, 4), ConfigError);

  ExecutorConfig cfg;
  cfg.delta_star = 0.05;
  cfg.delta_delay = 0.1;
  cfg.horizon_prediction = 32;
  cfg.horizon_condition = 4;
  CHECK(effective_interval(1.0, cfg) == doctest::Approx(0.05));
  CHECK(effective_interval(0.01, cfg) == doctest::Approx(1.05 * 0.1 / 28.0));
}

TEST_CASE("speed factor selects by criticality") {
  ExecutorConfig cfg;
  cfg.c_slow = 0.8;
  cfg.c_fast = 0.3;
  CHECK(speed_factor(1, cfg) == 0.8);
  CHECK(speed_factor(0, cfg) == 0.3);
  cfg.c_fast = 0.9;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("zero latency never stalls") {
  const Fixture f;
  const MockPolicy p = f.policy(32, 8, 4);
  const RolloutLog log = run_rollout(ideal(0.0, 32, 8, 4, 0.01), p, f.world, f.spec, 1);
  CHECK(log.splice_count == 30);
  CHECK(log.stall_count == 0);
}

TEST_CASE("intervals above the bound avoid plan exhaustion") {
  const Fixture f;
  const MockPolicy p = f.policy(32, 8, 4);
  const double lb = lower_bound_interval(0.2, 32, 4);
  const RolloutLog ok = run_rollout(ideal(0.2, 32, 8, 4, 1.05 * lb), p, f.world, f.spec, 1);
  CHECK(ok.stall_count == 0);
  const RolloutLog bad = run_rollout(ideal(0.2, 32, 8, 4, 0.5 * lb), p, f.world, f.spec, 1);
  CHECK(bad.stall_count >= 1);
}

TEST_CASE("splices are time ordered and latency is respected") {
  const Fixture f;
  const MockPolicy p = f.policy(32, 8, 4);
  const RolloutLog log = run_rollout(ideal(0.05, 32, 8, 4, 0.02), p, f.world, f.spec, 3);
  REQUIRE(log.chunks.size() == 30);
  for (std::size_t i = 0; i < log.chunks.size(); ++i) {
    CHECK(log.chunks[i].t_a == doctest::Approx(log.chunks[i].t_o + 0.05));
    if (i > 0) CHECK(log.chunks[i].t_o >= log.chunks[i - 1].t_a - 1e-12);
  }
  for (std::size_t i = 1; i < log.samples.size(); ++i) {
    CHECK(log.samples[i].time >= log.samples[i - 1].time);
  }
}

TEST_CASE("ideal tracking has zero tracking error") {
  const Fixture f;
  const MockPolicy p = f.policy(16, 6, 2);
  const RolloutLog log = run_rollout(ideal(0.03, 16, 6, 2, 0.01), p, f.world, f.spec, 0);
  for (const auto& s : log.samples) CHECK(s.error.e_pos < 1e-12);
  for (std::size_t i = 1; i < log.chunks.size(); ++i) CHECK(log.chunks[i].guidance_applied);
}

TEST_CASE("physics rollout completes a delivered reference") {
  const Fixture f;
  const MockPolicy p = f.policy(32, 8, 4);
  ExecutorConfig e;
  e.max_cycles = 10;
  const RolloutLog log = run_rollout(e, p, f.world, f.spec, 0);
  CHECK_FALSE(log.fault);
  CHECK(log.splice_count == 10);
  CHECK_FALSE(log.samples.empty());
}

TEST_CASE("rollouts are reproducible") {
  const Fixture f;
  PolicyConfig c;
  const MockPolicy p({f.demo}, c, {}, 5);
  ExecutorConfig e;
  e.max_cycles = 6;
  e.delay_jitter = 0.01;
  const RolloutLog a = run_rollout(e, p, f.world, f.spec, 11);
  const RolloutLog b = run_rollout(e, p, f.world, f.spec, 11);
  REQUIRE(a.samples.size() == b.samples.size());
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].state == b.samples[i].state);
}
