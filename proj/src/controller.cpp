#include "sailx/controller.hpp"

#include <algorithm>

#include "sailx/policy.hpp"

namespace sailx {

void GainProfile::validate() const {
  if (kp_pos < 0 || kv_pos < 0 || kp_ori < 0 || kv_ori < 0) {
    throw ConfigError("gains must be non-negative");
  }
}

bool GainProfile::dominates(const GainProfile& o) const {
  return kp_pos > o.kp_pos && kv_pos > o.kv_pos && kp_ori > o.kp_ori && kv_ori > o.kv_ori;
}

double damping_to_kv(double kp, double damping) { return 2.0 * damping * std::sqrt(kp); }

GainProfile gain_preset(const std::string& name) {
  GainProfile g;
  g.name = name;
  if (name == "sim-lift" || name == "sim-square") {
    const double kp = name == "sim-lift" ? 3000.0 : 1000.0;
    const double damping = name == "sim-lift" ? 0.5 : 1.0;
    g.kp_pos = g.kp_ori = kp;
    g.kv_pos = g.kv_ori = damping_to_kv(kp, damping);
    g.label = GainLabel::kHighGain;
  } else if (name == "real-demo") {
    g = {150.0, 24.5, 250.0, 31.6, GainLabel::kLowGain, name};
  } else if (name == "real-exec") {
    g = {300.0, 34.6, 400.0, 40.0, GainLabel::kHighGain, name};
  } else {
    throw ConfigError("unknown gain preset: " + name);
  }
  return g;
}

GainProfile low_gain() { return gain_preset("real-demo"); }
GainProfile high_gain() { return gain_preset("sim-lift"); }

ReferenceTrack::ReferenceTrack(std::vector<double> times, std::vector<Pose> poses,
                               std::vector<double> grippers)
    : times_(std::move(times)), poses_(std::move(poses)), grippers_(std::move(grippers)) {
  const std::size_t n = times_.size();
  if (n < 2 || poses_.size() != n || grippers_.size() != n) {
    throw InvalidInput("reference needs at least two consistent waypoints");
  }
  for (std::size_t i = 1; i < n; ++i) {
    if (!(times_[i] > times_[i - 1])) throw InvalidInput("waypoint times must increase");
  }

  // Natural spline: solve the tridiagonal system for interior second
  // derivatives (Thomas algorithm, all three axes at once).
  second_ = Eigen::Matrix<double, Eigen::Dynamic, 3>::Zero(n, 3);
  if (n > 2) {
    const std::size_t m = n - 2;
    std::vector<double> diag(m), upper(m);
    Eigen::Matrix<double, Eigen::Dynamic, 3> rhs(m, 3);
    for (std::size_t k = 0; k < m; ++k) {
      const std::size_t i = k + 1;
      const double h0 = times_[i] - times_[i - 1];
      const double h1 = times_[i + 1] - times_[i];
      diag[k] = 2.0 * (h0 + h1);
      upper[k] = h1;
      rhs.row(k) = 6.0 * ((poses_[i + 1].position() - poses_[i].position()) / h1 -
                          (poses_[i].position() - poses_[i - 1].position()) / h0)
                             .transpose();
    }
    for (std::size_t k = 1; k < m; ++k) {
      const double lower = times_[k + 1] - times_[k];
      const double f = lower / diag[k - 1];
      diag[k] -= f * upper[k - 1];
      rhs.row(k) -= f * rhs.row(k - 1);
    }
    second_.row(m) = rhs.row(m - 1) / diag[m - 1];
    for (std::size_t k = m - 1; k-- > 0;) {
      second_.row(k + 1) = (rhs.row(k) - upper[k] * second_.row(k + 2)) / diag[k];
    }
  }

  twists_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    twists_[i].linear = evaluate(times_[i]).twist.linear;
    const std::size_t a = i == 0 ? 0 : i - 1;
    const std::size_t b = i + 1 == n ? n - 1 : i + 1;
    twists_[i].angular = rotation_vector(poses_[a].orientation(), poses_[b].orientation()) /
                         (times_[b] - times_[a]);
  }
}

ReferenceSample ReferenceTrack::evaluate(double t) const {
  ReferenceSample out;
  if (t < times_.front()) {
    out.pose = poses_.front();
    out.gripper = grippers_.front();
    return out;
  }
  if (t > times_.back()) {
    out.pose = poses_.back();
    out.gripper = grippers_.back();
    return out;
  }
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  const std::size_t i = std::min<std::size_t>(
      static_cast<std::size_t>(it - times_.begin()) - 1, times_.size() - 2);
  const double h = times_[i + 1] - times_[i];
  const double a = (times_[i + 1] - t) / h;
  const double b = (t - times_[i]) / h;
  const Vector3 m0 = second_.row(i).transpose();
  const Vector3 m1 = second_.row(i + 1).transpose();
  const Vector3& y0 = poses_[i].position();
  const Vector3& y1 = poses_[i + 1].position();

  const Vector3 p = a * y0 + b * y1 + ((a * a * a - a) * m0 + (b * b * b - b) * m1) * (h * h / 6.0);
  out.twist.linear = (y1 - y0) / h + ((1.0 - 3.0 * a * a) * m0 + (3.0 * b * b - 1.0) * m1) * (h / 6.0);
  out.twist.angular = rotation_vector(poses_[i].orientation(), poses_[i + 1].orientation()) / h;
  const Eigen::Quaterniond q = poses_[i].orientation().slerp(b, poses_[i + 1].orientation());
  out.pose = Pose::normalized(p, q);
  // Gripper follows the waypoint most recently passed.
  out.gripper = b >= 1.0 ? grippers_[i + 1] : grippers_[i];
  return out;
}

ReferenceTrack fit_reference(const ActionChunk& chunk, double interval) {
  if (chunk.waypoints.size() < 2) throw InvalidInput("chunk needs at least two waypoints");
  if (!(interval > 0.0)) throw InvalidInput("interval must be positive");
  std::vector<double> times;
  std::vector<Pose> poses;
  std::vector<double> grippers;
  for (std::size_t i = 0; i < chunk.waypoints.size(); ++i) {
    times.push_back(static_cast<double>(i) * interval);
    poses.push_back(chunk.waypoints[i].pose);
    grippers.push_back(chunk.waypoints[i].gripper.command());
  }
  return ReferenceTrack(std::move(times), std::move(poses), std::move(grippers));
}

Wrench compute_wrench(const Pose& ref_pose, const Twist& ref_twist, const RobotState& state,
                      const GainProfile& gains, const DynamicsParams& params) {
  const Vector3 e_p = ref_pose.position() - state.pose.position();
  const Vector3 e_v = ref_twist.linear - state.twist.linear;
  const Vector3 e_o = rotation_vector(state.pose.orientation(), ref_pose.orientation());
  const Vector3 e_w = ref_twist.angular - state.twist.angular;
  Wrench w;
  w.head<3>() = params.mass * (gains.kp_pos * e_p + gains.kv_pos * e_v);
  w.tail<3>() = params.inertia * (gains.kp_ori * e_o + gains.kv_ori * e_w);
  return w;
}

TrackResult track(const WorldState& world, const ReferenceTrack& ref, const GainProfile& gains,
                  const DynamicsParams& params, double until) {
  TrackResult out{world, {}, {}};
  const double dt = params.physics_dt;
  while (out.world.sim_time + 0.5 * dt <= until) {
    const ReferenceSample r = ref.evaluate(out.world.sim_time);
    const Wrench u = compute_wrench(r.pose, r.twist, out.world.robot, gains, params);
    StepResult s = step(out.world, u, r.gripper, params);
    out.world = std::move(s.world);
    if (s.event != GripperEvent::kNone) out.events.emplace_back(out.world.sim_time, s.event);
    TraceSample sample;
    sample.time = out.world.sim_time;
    sample.reference = ref.evaluate(out.world.sim_time).pose;
    sample.state = out.world.robot.pose;
    sample.error = tracking_error(sample.reference, sample.state);
    sample.gripper = out.world.robot.gripper.command();
    out.trace.push_back(sample);
  }
  return out;
}

}  // namespace sailx
