#ifndef SAILX_DEMO_HPP
#define SAILX_DEMO_HPP

#include <optional>
#include <vector>

#include "sailx/core.hpp"

namespace sailx {

struct DemoRecord {
  int step = 0;
  double time = 0.0;
  Pose commanded;
  Pose reached;
  double gripper = 0.0;
  std::optional<int> k;
};

/// One teleoperated episode sampled at a fixed interval.
struct Demonstration {
  std::vector<DemoRecord> records;
  Pose object_start;
  Vector3 goal_position = Vector3::Zero();
  double delta_star = 0.05;

  std::size_t size() const { return records.size(); }
  double duration() const {
    return records.empty() ? 0.0 : records.back().time - records.front().time + delta_star;
  }
};

/// Object position at every record, replaying the kinematic grasp rule on the
/// reached poses and gripper commands.
std::vector<Vector3> derive_object_track(const Demonstration& demo, double grasp_radius);

}  // namespace sailx

#endif  // SAILX_DEMO_HPP
