#include "doctest.h"
#include "sailx/core.hpp"

#include <cmath>
#include <random>

using namespace sailx;

namespace {
Eigen::Quaterniond yaw(double a) { return Eigen::Quaterniond(Eigen::AngleAxisd(a, Vector3::UnitZ())); }
}

TEST_CASE("tracking error of identical poses is zero") {
  const Pose p(Vector3(0.1, -0.2, 0.3), yaw(0.4));
  const TrackingError e = tracking_error(p, p);
  CHECK(e.e_pos == 0.0);
  CHECK(e.e_ori == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("tracking error separates translation and rotation") {
  const Pose a(Vector3(0.0, 0.0, 0.0));
  const Pose b(Vector3(0.03, 0.0, 0.0));
  CHECK(tracking_error(a, b).e_pos == doctest::Approx(0.03).epsilon(1e-12));
  CHECK(tracking_error(a, b).e_ori == doctest::Approx(0.0));

  const Pose r(Vector3::Zero(), yaw(M_PI / 2));
  const TrackingError e = tracking_error(a, r);
  CHECK(e.e_pos == 0.0);
  CHECK(e.e_ori == doctest::Approx(M_PI / 2).epsilon(1e-12));
}

TEST_CASE("orientation error matches the rotation-matrix trace formula") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const Eigen::Quaterniond qa = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    const Eigen::Quaterniond qb = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng)).normalized();
    const Eigen::Matrix3d d = qa.toRotationMatrix().transpose() * qb.toRotationMatrix();
    const double expect = std::acos(std::clamp((d.trace() - 1.0) / 2.0, -1.0, 1.0));
    CHECK(tracking_error(Pose(Vector3::Zero(), qa), Pose(Vector3::Zero(), qb)).e_ori ==
          doctest::Approx(expect).epsilon(1e-7));
  }
}

TEST_CASE("pose interpolation endpoints and midpoint") {
  const Pose a(Vector3::Zero(), yaw(0.2));
  const Pose b(Vector3(1.0, 0.0, 0.0), yaw(0.2));
  CHECK(interpolate_pose(a, b, 0.0) == a);
  CHECK(interpolate_pose(a, b, 1.0) == b);
  const Pose m = interpolate_pose(a, b, 0.5);
  CHECK((m.position() - Vector3(0.5, 0.0, 0.0)).norm() < 1e-15);
  CHECK(tracking_error(m, a).e_ori < 1e-9);
  CHECK_THROWS_AS(interpolate_pose(a, b, 1.5), InvalidInput);
}

TEST_CASE("slerp midpoint halves the angle") {
  const Pose a(Vector3::Zero(), yaw(0.0));
  const Pose b(Vector3::Zero(), yaw(1.0));
  CHECK(tracking_error(a, interpolate_pose(a, b, 0.5)).e_ori == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("gripper command is clamped") {
  CHECK(GripperState(1.7).command() == 1.0);
  CHECK(GripperState(-0.2).command() == 0.0);
  CHECK(GripperState(0.5).closed());
  CHECK_FALSE(GripperState(0.49).closed());
}

TEST_CASE("pose rejects non-finite and non-unit input") {
  CHECK_THROWS(Pose(Vector3(std::nan(""), 0.0, 0.0)));
  CHECK_THROWS(Pose(Vector3::Zero(), Eigen::Quaterniond(2.0, 0.0, 0.0, 0.0)));
}
