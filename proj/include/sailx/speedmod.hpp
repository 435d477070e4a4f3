#ifndef SAILX_SPEEDMOD_HPP
#define SAILX_SPEEDMOD_HPP

#include <vector>

#include "sailx/core.hpp"
#include "sailx/policy.hpp"

namespace sailx {

struct WaypointSet {
  std::vector<int> indices;
  std::vector<Vector3> positions;
};

struct LabelParams {
  double tau = 0.01;
  double eps = 0.02;
  int min_pts = 4;

  void validate() const;
};

/// Distance from p to the segment [a, b].
double point_segment_distance(const Vector3& p, const Vector3& a, const Vector3& b);

/// Recursive maximal-deviation split until every point is within tau of its chord.
WaypointSet extract_waypoints(const std::vector<Pose>& traj, double tau);
WaypointSet extract_waypoints(const std::vector<Vector3>& traj, double tau);

/// Density clustering; labels are cluster ids from 0, noise is -1.
std::vector<int> dbscan(const std::vector<Vector3>& points, double eps, int min_pts);

/// k = 1 on every index spanned by two consecutive clustered waypoints.
std::vector<int> label_critical(const std::vector<Pose>& traj, const LabelParams& params);

/// k = 1 around every toggle of the binarized gripper command.
std::vector<int> gripper_event_flags(const std::vector<double>& gripper, int window = 0);
std::vector<int> gripper_event_flags(const ActionChunk& chunk, int window = 0);

}  // namespace sailx

#endif  // SAILX_SPEEDMOD_HPP
