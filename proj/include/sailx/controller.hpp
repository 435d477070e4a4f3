#ifndef SAILX_CONTROLLER_HPP
#define SAILX_CONTROLLER_HPP

#include <string>
#include <vector>

#include "sailx/core.hpp"
#include "sailx/sim.hpp"

namespace sailx {

struct ActionChunk;

enum class GainLabel { kLowGain, kHighGain };

struct GainProfile {
  double kp_pos = 0.0;
  double kv_pos = 0.0;
  double kp_ori = 0.0;
  double kv_ori = 0.0;
  GainLabel label = GainLabel::kLowGain;
  std::string name;

  void validate() const;
  bool dominates(const GainProfile& other) const;
};

/// Damping ratio convention: kv = 2 * damping * sqrt(kp).
double damping_to_kv(double kp, double damping);

/// Named presets: "sim-lift", "sim-square", "real-demo", "real-exec".
GainProfile gain_preset(const std::string& name);
GainProfile low_gain();
GainProfile high_gain();

struct ReferenceSample {
  Pose pose;
  Twist twist;
  double gripper = 0.0;
};

/// Timed reference through pose waypoints. Positions follow a natural cubic
/// spline; orientations are slerped between neighbors. Outside the knot span
/// the first/last pose is held with zero twist.
class ReferenceTrack {
 public:
  ReferenceTrack() = default;
  ReferenceTrack(std::vector<double> times, std::vector<Pose> poses,
                 std::vector<double> grippers);

  ReferenceSample evaluate(double t) const;

  const std::vector<double>& times() const { return times_; }
  const std::vector<Pose>& poses() const { return poses_; }
  const std::vector<Twist>& waypoint_twists() const { return twists_; }
  bool empty() const { return times_.empty(); }
  double start_time() const { return times_.front(); }
  double end_time() const { return times_.back(); }

 private:
  std::vector<double> times_;
  std::vector<Pose> poses_;
  std::vector<double> grippers_;
  Eigen::Matrix<double, Eigen::Dynamic, 3> second_;  // spline second derivatives at knots
  std::vector<Twist> twists_;
};

/// Natural cubic spline reference through a chunk sampled at a uniform interval.
ReferenceTrack fit_reference(const ActionChunk& chunk, double interval);

/// Wrench from pose and twist errors: m (kp e_p + kv e_v) and the rotational analogue.
Wrench compute_wrench(const Pose& ref_pose, const Twist& ref_twist, const RobotState& state,
                      const GainProfile& gains, const DynamicsParams& params);

struct TraceSample {
  double time = 0.0;
  Pose reference;
  Pose state;
  TrackingError error;
  double gripper = 0.0;
};

struct TrackResult {
  WorldState world;
  std::vector<TraceSample> trace;
  std::vector<std::pair<double, GripperEvent>> events;
};

/// Runs the inner loop at physics_dt until `until`, appending to `trace`.
TrackResult track(const WorldState& world, const ReferenceTrack& ref, const GainProfile& gains,
                  const DynamicsParams& params, double until);

}  // namespace sailx

#endif  // SAILX_CONTROLLER_HPP
