#include <cmath>
#include <random>

#include "sailx/controller.hpp"
#include "sailx/io.hpp"
#include "sailx/policy.hpp"

namespace sailx {

namespace {

struct Key {
  Vector3 position;
  double yaw = 0.0;
  double duration = 0.0;
  double gripper = 0.0;
};

double min_jerk(double s) { return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s); }

struct Intended {
  Pose pose;
  double gripper;
};

// Operator intent at time t: min-jerk between keys, gripper switched at the
// start of each segment.
Intended sample(const std::vector<Key>& keys, const Key& start, double t) {
  Key from = start;
  double t0 = 0.0;
  for (const Key& k : keys) {
    if (t < t0 + k.duration) {
      const double s = k.duration > 0.0 ? min_jerk((t - t0) / k.duration) : 1.0;
      const Vector3 p = from.position + s * (k.position - from.position);
      const double yaw = from.yaw + s * (k.yaw - from.yaw);
      return {Pose(p, Eigen::Quaterniond(Eigen::AngleAxisd(yaw, Vector3::UnitZ()))), k.gripper};
    }
    t0 += k.duration;
    from = k;
  }
  return {Pose(from.position, Eigen::Quaterniond(Eigen::AngleAxisd(from.yaw, Vector3::UnitZ()))),
          from.gripper};
}

std::vector<Key> script_keys(const TaskSpec& spec, const Vector3& object, const DemoScript& sc,
                             std::mt19937_64& rng) {
  std::uniform_real_distribution<double> jitter(1.0 - sc.timing_jitter, 1.0 + sc.timing_jitter);
  std::uniform_real_distribution<double> angle(-M_PI, M_PI);
  std::uniform_real_distribution<double> yaw_scale(0.8, 1.2);
  auto dur = [&](double d) { return d * jitter(rng); };

  const Vector3 hover(object.x(), object.y(), object.z() + sc.hover_height);
  const Vector3 above(object.x(), object.y(), sc.lift_height);
  const Vector3 goal = spec.goal_position;
  const Vector3 goal_above(goal.x(), goal.y(), sc.lift_height);
  const double yaw = sc.transport_yaw * yaw_scale(rng);

  std::vector<Key> k;
  k.push_back({spec.robot_start.position(), 0.0, 0.3, 0.0});
  k.push_back({above, 0.0, dur(1.5), 0.0});
  // Corrections converge on the hover point, which is reached only once.
  for (int i = 0; i < 3; ++i) {
    const double a = angle(rng);
    const double r = sc.align_step * (3 - i) / 3.0;
    const Vector3 nudge(r * std::cos(a), r * std::sin(a), 0.0);
    k.push_back({hover + nudge, 0.0, dur(i == 0 ? 0.8 : 0.3), 0.0});
  }
  k.push_back({hover, 0.0, dur(0.3), 0.0});
  k.push_back({object, 0.0, dur(0.5), 0.0});
  k.push_back({object, 0.0, 0.1, 0.0});
  k.push_back({object, 0.0, sc.grasp_dwell, 1.0});
  k.push_back({above, 0.0, dur(0.8), 1.0});
  k.push_back({goal_above, yaw, dur(2.0), 1.0});
  k.push_back({goal, yaw, dur(0.8), 1.0});
  k.push_back({goal, yaw, 0.1, 1.0});
  k.push_back({goal, yaw, sc.release_dwell, 0.0});
  k.push_back({goal_above, yaw, dur(0.6), 0.0});
  return k;
}

}  // namespace

std::vector<Demonstration> generate_demos(const TaskSpec& spec, int n, std::uint64_t seed,
                                          const DemoScript& script) {
  if (n < 1) throw InvalidInput("need at least one demonstration");
  spec.validate();
  std::vector<Demonstration> demos;
  demos.reserve(n);
  const double sag = script.dynamics.gravity * script.dynamics.mass /
                     (script.dynamics.mass * script.teleop_gains.kp_pos);
  for (int d = 0; d < n; ++d) {
    auto rng = split_rng(seed, static_cast<std::uint64_t>(d), 11);
    std::uniform_real_distribution<double> ux(script.box_min.x(), script.box_max.x());
    std::uniform_real_distribution<double> uy(script.box_min.y(), script.box_max.y());
    std::uniform_real_distribution<double> uz(script.box_min.z(), script.box_max.z());
    const double ox = ux(rng), oy = uy(rng);
    const Vector3 object(ox, oy, uz(rng));
    const std::vector<Key> keys = script_keys(spec, object, script, rng);
    double total = 0.0;
    for (const auto& k : keys) total += k.duration;
    if (total > spec.t_max) throw GenerationError("scripted plan exceeds the time limit");

    Key start{spec.robot_start.position(), 0.0, 0.0, 0.0};
    const int steps = static_cast<int>(std::floor(total / script.delta_star)) + 1;
    std::vector<double> times;
    std::vector<Pose> commanded;
    std::vector<double> grippers;
    for (int i = 0; i < steps; ++i) {
      const double t = i * script.delta_star;
      const Intended in = sample(keys, start, t);
      // The operator holds the hand where it should be, which under the soft
      // teleoperation gains means commanding above it.
      commanded.emplace_back(in.pose.position() + Vector3(0.0, 0.0, sag), in.pose.orientation());
      times.push_back(t);
      grippers.push_back(in.gripper);
    }

    TaskSpec task = spec;
    task.object_start = Pose(object);
    WorldState world = initial_world(task);
    world.robot.pose = sample(keys, start, 0.0).pose;
    const ReferenceTrack ref(times, commanded, grippers);

    Demonstration demo;
    demo.object_start = task.object_start;
    demo.goal_position = spec.goal_position;
    demo.delta_star = script.delta_star;
    for (int i = 0; i < steps; ++i) {
      if (i > 0) world = track(world, ref, script.teleop_gains, script.dynamics, times[i]).world;
      DemoRecord r;
      r.step = i;
      r.time = times[i];
      r.commanded = commanded[i];
      r.reached = world.robot.pose;
      r.gripper = grippers[i];
      demo.records.push_back(r);
    }
    if (!success(world, task)) throw GenerationError("scripted demonstration failed the task");
    demos.push_back(std::move(demo));
  }
  return demos;
}

}  // namespace sailx
