#include "sailx/sim.hpp"

namespace sailx {

void DynamicsParams::validate() const {
  if (!(mass > 0.0) || !(inertia > 0.0) || !(physics_dt > 0.0)) {
    throw ConfigError("dynamics parameters must be positive");
  }
  if (!(gripper_rate > 0.0)) throw ConfigError("gripper rate must be positive");
  if (wrench_limit && !(*wrench_limit > 0.0)) throw ConfigError("wrench limit must be positive");
}

void TaskSpec::validate() const {
  if (!(grasp_radius > 0.0) || !(place_tolerance > 0.0) || !(t_max > 0.0)) {
    throw ConfigError("task tolerances and time limit must be positive");
  }
}

WorldState initial_world(const TaskSpec& spec) {
  WorldState w;
  w.robot.pose = spec.robot_start;
  w.object_pose = spec.object_start;
  w.table_height = spec.object_start.position().z();
  w.grasp_radius = spec.grasp_radius;
  return w;
}

namespace {

Pose compose(const Pose& a, const Pose& b) {
  return Pose::normalized(a.position() + a.orientation() * b.position(),
                          a.orientation() * b.orientation());
}

Pose relative(const Pose& a, const Pose& b) {
  const Eigen::Quaterniond inv = a.orientation().conjugate();
  return Pose::normalized(inv * (b.position() - a.position()), inv * b.orientation());
}

// Handles attachment toggles when the gripper crosses 0.5.
GripperEvent update_attachment(WorldState& w, double before, double after) {
  if (before < 0.5 && after >= 0.5 && !w.attached) {
    if ((w.robot.pose.position() - w.object_pose.position()).norm() < w.grasp_radius) {
      w.attached = true;
      w.grasp_offset = relative(w.robot.pose, w.object_pose);
      return GripperEvent::kGrasp;
    }
  } else if (before >= 0.5 && after < 0.5 && w.attached) {
    w.attached = false;
    Vector3 p = w.object_pose.position();
    p.z() = w.table_height;
    w.object_pose = Pose(p, w.object_pose.orientation());
    return GripperEvent::kRelease;
  }
  return GripperEvent::kNone;
}

}  // namespace

StepResult step(const WorldState& world, const Wrench& wrench, double gripper_cmd,
                const DynamicsParams& params) {
  if (!wrench.allFinite()) throw SimFault("non-finite wrench");
  Wrench u = wrench;
  if (params.wrench_limit) u = u.cwiseMax(-*params.wrench_limit).cwiseMin(*params.wrench_limit);

  StepResult out{world, GripperEvent::kNone};
  WorldState& w = out.world;
  const double dt = params.physics_dt;

  Vector3 accel = u.head<3>() / params.mass;
  accel.z() -= params.gravity;
  w.robot.twist.linear += accel * dt;
  w.robot.twist.angular += (u.tail<3>() / params.inertia) * dt;
  const Vector3 p = world.robot.pose.position() + w.robot.twist.linear * dt;
  const Eigen::Quaterniond q =
      quaternion_exp<double>(w.robot.twist.angular * dt) * world.robot.pose.orientation();
  w.robot.pose = Pose::normalized(p, q);

  const double before = world.robot.gripper.command();
  const double target = std::clamp(gripper_cmd, 0.0, 1.0);
  const double max_move = params.gripper_rate * dt;
  const double after = before + std::clamp(target - before, -max_move, max_move);
  w.robot.gripper = GripperState(after);

  if (w.attached) w.object_pose = compose(w.robot.pose, w.grasp_offset);
  out.event = update_attachment(w, before, after);
  w.sim_time = world.sim_time + dt;
  return out;
}

StepResult set_gripper(const WorldState& world, double gripper_value) {
  StepResult out{world, GripperEvent::kNone};
  const double before = world.robot.gripper.command();
  out.world.robot.gripper = GripperState(gripper_value);
  out.event = update_attachment(out.world, before, out.world.robot.gripper.command());
  return out;
}

WorldState place_robot(const WorldState& world, const Pose& pose, const Twist& twist) {
  WorldState w = world;
  w.robot.pose = pose;
  w.robot.twist = twist;
  if (w.attached) w.object_pose = compose(w.robot.pose, w.grasp_offset);
  return w;
}

bool success(const WorldState& world, const TaskSpec& spec) {
  if (world.attached || world.sim_time > spec.t_max) return false;
  return (world.object_pose.position() - spec.goal_position).norm() <= spec.place_tolerance;
}

double kinetic_energy(const WorldState& world, const DynamicsParams& params) {
  return 0.5 * params.mass * world.robot.twist.linear.squaredNorm() +
         0.5 * params.inertia * world.robot.twist.angular.squaredNorm();
}

}  // namespace sailx
