#ifndef SAILX_CORE_HPP
#define SAILX_CORE_HPP

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <Eigen/Geometry>

namespace sailx {

// Error kinds shared by all modules.
struct InvalidInput : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct UndefinedMetric : std::domain_error {
  using std::domain_error::domain_error;
};

template <typename Scalar>
using Vec3 = Eigen::Matrix<Scalar, 3, 1>;
using Vector3 = Vec3<double>;
using Wrench = Eigen::Matrix<double, 6, 1>;

/// SE(3) pose: position plus a unit quaternion kept in the w >= 0 hemisphere.
template <typename Scalar>
class PoseT {
 public:
  using Quat = Eigen::Quaternion<Scalar>;
  static constexpr Scalar kUnitTolerance = Scalar(1e-9);

  PoseT() : position_(Vec3<Scalar>::Zero()), orientation_(Quat::Identity()) {}

  /// Throws InvalidInput when |q| differs from 1 by more than 1e-9.
  PoseT(const Vec3<Scalar>& position, const Quat& orientation)
      : position_(position), orientation_(orientation) {
    if (std::abs(orientation_.norm() - Scalar(1)) > kUnitTolerance) {
      throw InvalidInput("pose orientation is not a unit quaternion");
    }
    if (!position_.allFinite()) throw InvalidInput("pose position is not finite");
    canonicalize();
  }

  explicit PoseT(const Vec3<Scalar>& position) : PoseT(position, Quat::Identity()) {}

  /// Normalizes the quaternion first; for values produced by integration.
  static PoseT normalized(const Vec3<Scalar>& position, Quat orientation) {
    orientation.normalize();
    return PoseT(position, orientation);
  }

  const Vec3<Scalar>& position() const { return position_; }
  const Quat& orientation() const { return orientation_; }
  Eigen::Matrix<Scalar, 3, 3> rotation() const { return orientation_.toRotationMatrix(); }

  bool operator==(const PoseT& o) const {
    return position_ == o.position_ && orientation_.coeffs() == o.orientation_.coeffs();
  }

 private:
  void canonicalize() {
    if (orientation_.w() < Scalar(0)) orientation_.coeffs() = -orientation_.coeffs();
  }

  Vec3<Scalar> position_;
  Quat orientation_;
};

template <typename Scalar>
struct TwistT {
  Vec3<Scalar> linear = Vec3<Scalar>::Zero();
  Vec3<Scalar> angular = Vec3<Scalar>::Zero();

  bool allFinite() const { return linear.allFinite() && angular.allFinite(); }
};

template <typename Scalar>
struct TrackingErrorT {
  Scalar e_pos = Scalar(0);
  Scalar e_ori = Scalar(0);
};

using Pose = PoseT<double>;
using Twist = TwistT<double>;
using TrackingError = TrackingErrorT<double>;

/// Gripper command in [0, 1], 0 open and 1 closed.
class GripperState {
 public:
  GripperState() = default;
  explicit GripperState(double command) : command_(std::clamp(command, 0.0, 1.0)) {}
  double command() const { return command_; }
  bool closed() const { return command_ >= 0.5; }

 private:
  double command_ = 0.0;
};

/// Rotation vector (axis * angle) of the shortest rotation taking `from` onto `to`,
/// expressed in the world frame.
template <typename Scalar>
Vec3<Scalar> rotation_vector(const Eigen::Quaternion<Scalar>& from,
                             const Eigen::Quaternion<Scalar>& to) {
  Eigen::Quaternion<Scalar> delta = to * from.conjugate();
  if (delta.w() < Scalar(0)) delta.coeffs() = -delta.coeffs();
  const Scalar s = delta.vec().norm();
  if (s < Scalar(1e-15)) return Scalar(2) * delta.vec();
  const Scalar angle = Scalar(2) * std::atan2(s, delta.w());
  return delta.vec() * (angle / s);
}

template <typename Scalar>
Eigen::Quaternion<Scalar> quaternion_exp(const Vec3<Scalar>& rotvec) {
  const Scalar angle = rotvec.norm();
  if (angle < Scalar(1e-15)) {
    Eigen::Quaternion<Scalar> q(Scalar(1), rotvec.x() / 2, rotvec.y() / 2, rotvec.z() / 2);
    return q.normalized();
  }
  return Eigen::Quaternion<Scalar>(Eigen::AngleAxis<Scalar>(angle, rotvec / angle));
}

/// Position distance and geodesic angle between desired and current pose.
/// The angle is computed from the trace of R(desired)^T R(current).
template <typename Scalar>
TrackingErrorT<Scalar> tracking_error(const PoseT<Scalar>& desired, const PoseT<Scalar>& current) {
  TrackingErrorT<Scalar> err;
  err.e_pos = (desired.position() - current.position()).norm();
  const Eigen::Matrix<Scalar, 3, 3> delta = desired.rotation().transpose() * current.rotation();
  const Scalar c = std::clamp((delta.trace() - Scalar(1)) / Scalar(2), Scalar(-1), Scalar(1));
  err.e_ori = std::acos(c);
  return err;
}

/// Linear position blend and shortest-arc slerp; s = 0 and s = 1 return the endpoints.
template <typename Scalar>
PoseT<Scalar> interpolate_pose(const PoseT<Scalar>& a, const PoseT<Scalar>& b, Scalar s) {
  if (!(s >= Scalar(0) && s <= Scalar(1))) {
    throw InvalidInput("interpolation parameter outside [0, 1]");
  }
  if (s == Scalar(0)) return a;
  if (s == Scalar(1)) return b;
  const Vec3<Scalar> p = a.position() + s * (b.position() - a.position());
  return PoseT<Scalar>::normalized(p, a.orientation().slerp(s, b.orientation()));
}

/// Geodesic extrapolation along a -> b with unrestricted parameter.
template <typename Scalar>
Eigen::Quaternion<Scalar> geodesic(const Eigen::Quaternion<Scalar>& a,
                                   const Eigen::Quaternion<Scalar>& b, Scalar s) {
  return (quaternion_exp<Scalar>(s * rotation_vector(a, b)) * a).normalized();
}

}  // namespace sailx

#endif  // SAILX_CORE_HPP
