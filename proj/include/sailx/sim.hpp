#ifndef SAILX_SIM_HPP
#define SAILX_SIM_HPP

#include <optional>
#include <stdexcept>

#include "sailx/core.hpp"

namespace sailx {

struct SimFault : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Free-floating end-effector plant. `gravity` is a constant downward
/// acceleration the tracking controller does not compensate; it is zero
/// unless a task enables it.
struct DynamicsParams {
  double mass = 1.0;
  double inertia = 1.0;
  double physics_dt = 0.002;
  double gravity = 0.0;
  double gripper_rate = 10.0;          // command units per second
  std::optional<double> wrench_limit;  // per-component saturation

  void validate() const;
};

struct RobotState {
  Pose pose;
  Twist twist;
  GripperState gripper;
};

struct WorldState {
  RobotState robot;
  Pose object_pose;
  bool attached = false;
  double sim_time = 0.0;
  double table_height = 0.0;
  double grasp_radius = 0.02;
  // Object pose relative to the gripper while attached.
  Pose grasp_offset;
};

struct TaskSpec {
  Pose robot_start{Vector3(0.3, 0.0, 0.3)};
  Pose object_start{Vector3(0.4, 0.0, 0.02)};
  Vector3 goal_position{0.4, 0.3, 0.02};
  double grasp_radius = 0.02;
  double place_tolerance = 0.03;
  double t_max = 20.0;

  void validate() const;
};

enum class GripperEvent { kNone, kGrasp, kRelease };

struct StepResult {
  WorldState world;
  GripperEvent event = GripperEvent::kNone;
};

WorldState initial_world(const TaskSpec& spec);

/// One semi-implicit Euler step. Throws SimFault on a non-finite wrench.
StepResult step(const WorldState& world, const Wrench& wrench, double gripper_cmd,
                const DynamicsParams& params);

/// Applies a gripper change without dynamics (kinematic replay).
StepResult set_gripper(const WorldState& world, double gripper_value);

/// Moves the robot kinematically and drags an attached object along.
WorldState place_robot(const WorldState& world, const Pose& pose, const Twist& twist);

bool success(const WorldState& world, const TaskSpec& spec);

double kinetic_energy(const WorldState& world, const DynamicsParams& params);

}  // namespace sailx

#endif  // SAILX_SIM_HPP
