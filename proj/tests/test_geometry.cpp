#include "kdwbc/geometry.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace kdwbc;

TEST(Geometry, RotationZyxComposition) {
  const vector3_t e(0.3, -0.2, 0.5);
  const matrix3_t R = rotationZyx(e);
  EXPECT_NEAR((R * R.transpose() - matrix3_t::Identity()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-12);

  // pure yaw rotates x into y
  const matrix3_t Ry = rotationZyx(vector3_t(M_PI / 2.0, 0, 0));
  EXPECT_NEAR((Ry * vector3_t::UnitX() - vector3_t::UnitY()).norm(), 0.0, 1e-12);
}

TEST(Geometry, EulerRateMatrixMatchesFiniteDifference) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const vector3_t e(M_PI * u(rng), 1.2 * u(rng), M_PI * u(rng));
    const vector3_t edot(u(rng), u(rng), u(rng));
    const double h = 1e-7;
    const matrix3_t R0 = rotationZyx(e);
    const matrix3_t R1 = rotationZyx(e + h * edot);
    const matrix3_t omega_skew = (R1 - R0) * R0.transpose() / h;
    const vector3_t omega_fd(omega_skew(2, 1), omega_skew(0, 2), omega_skew(1, 0));
    const vector3_t omega = eulerRateMatrixZyx(e) * edot;
    EXPECT_NEAR((omega - omega_fd).norm(), 0.0, 1e-5);

    // inverse mapping round-trips
    const vector3_t back = eulerRatesFromAngularVelocity(e, omega);
    EXPECT_NEAR((back - edot).norm(), 0.0, 1e-9);
  }
}

TEST(Geometry, EulerRateSingularityRejected) {
  EXPECT_THROW(eulerRatesFromAngularVelocity(vector3_t(0, M_PI / 2.0, 0), vector3_t(1, 0, 0)), std::domain_error);
}

TEST(Geometry, RotationLogRoundTrip) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    vector3_t axis(u(rng), u(rng), u(rng));
    axis.normalize();
    const double angle = 0.5 * (u(rng) + 1.0) * (M_PI - 1e-3);
    const matrix3_t R = Eigen::AngleAxisd(angle, axis).toRotationMatrix();
    const vector3_t w = rotationLog(R);
    EXPECT_NEAR((w - angle * axis).norm(), 0.0, 1e-8) << "angle=" << angle;
  }
  EXPECT_NEAR(rotationLog(matrix3_t::Identity()).norm(), 0.0, 1e-14);
}

TEST(Geometry, PoseBoxMinusYawOffset) {
  vector6_t a, b;
  a << 1, 2, 3, 0.1, 0, 0;
  b << 1, 2, 3, 0, 0, 0;
  const vector6_t err = poseBoxMinus(a, b);
  EXPECT_NEAR(err.head<3>().norm(), 0.0, 1e-14);
  EXPECT_NEAR((err.tail<3>() - vector3_t(0, 0, 0.1)).norm(), 0.0, 1e-9);
}

TEST(Geometry, PoseBoxMinusIdentical) {
  vector6_t a;
  a << 0.4, -0.2, 0.9, 0.3, 0.2, -0.1;
  EXPECT_NEAR(poseBoxMinus(a, a).norm(), 0.0, 1e-14);
}
