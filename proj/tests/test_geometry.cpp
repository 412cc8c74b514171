#include <random>

#include <gtest/gtest.h>

#include "mvbev/geometry.hpp"
#include "test_util.hpp"

namespace mvbev {
namespace {

using testing::random_camera;
using testing::simple_camera;

TEST(ProjectPoint, MatrixArithmeticExample) {
  const auto px = project_point(simple_camera(), {1.0, 0.5, 2.0});
  // u = 100*1/2 + 160, v = 100*0.5/2 + 120
  EXPECT_NEAR(px.u, 210.0, 1e-12);
  EXPECT_NEAR(px.v, 145.0, 1e-12);
  EXPECT_EQ(px.w, 1.0);
}

TEST(ProjectPoint, PrincipalAxis) {
  CameraModel cam;
  const auto px = project_point(cam, {0, 0, 1});
  EXPECT_EQ(px.u, 0.0);
  EXPECT_EQ(px.v, 0.0);
}

TEST(ProjectPoint, BehindCamera) {
  EXPECT_MVBEV_ERROR(project_point(CameraModel{}, {0, 0, -1}), ErrorCode::DepthNonPositive);
  EXPECT_MVBEV_ERROR(project_point(CameraModel{}, {1, 1, 0}), ErrorCode::DepthNonPositive);
}

TEST(Backproject, InverseOfProjectionExample) {
  const auto p = backproject_to_plane(simple_camera(), {210.0, 145.0, 1.0}, 2.0);
  EXPECT_NEAR(p.x, 1.0, 1e-12);
  EXPECT_NEAR(p.y, 0.5, 1e-12);
  EXPECT_EQ(p.z, 2.0);
}

TEST(Backproject, HorizonPixelIsParallel) {
  // Camera looking along +x with world z up: the principal ray is horizontal.
  const CameraModel cam = look_at_camera({0, 0, 1}, {10, 0, 1}, 300, 640, 480, 0);
  const double cu = cam.K(0, 2);
  const double cv = cam.K(1, 2);
  EXPECT_MVBEV_ERROR(backproject_to_plane(cam, {cu, cv, 1.0}, 0.0), ErrorCode::RayParallelToPlane);
}

TEST(Backproject, PlaneBehindCamera) {
  // Looking down at z = 0 from z = 2; the plane z = 5 is behind.
  const CameraModel cam = look_at_camera({0, 0, 2}, {1, 0, 0}, 300, 640, 480, 0);
  EXPECT_MVBEV_ERROR(backproject_to_plane(cam, {cam.K(0, 2), cam.K(1, 2), 1.0}, 5.0),
                     ErrorCode::IntersectionBehindCamera);
}

TEST(Backproject, RoundTripRandomCameras) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    const double plane = -1.0 + 2.0 * u(rng);
    const CameraModel cam = random_camera(rng, plane);
    ASSERT_TRUE(validate_camera(cam).empty());
    const PixelHomogeneous px{u(rng) * cam.width, u(rng) * cam.height, 1.0};
    WorldPoint w;
    try {
      w = backproject_to_plane(cam, px, plane);
    } catch (const Error&) {
      continue;
    }
    EXPECT_LT(std::abs(w.z - plane), 1e-9);
    const auto back = project_point(cam, w);
    EXPECT_NEAR(back.u, px.u, 1e-6);
    EXPECT_NEAR(back.v, px.v, 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 400);
}

TEST(Backproject, WorldRoundTrip) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 300; ++i) {
    const CameraModel cam = random_camera(rng, 0.5);
    const WorldPoint p{u(rng), u(rng), 0.5};
    if (!((cam.R * p.vec() + cam.T).z() > 1e-3)) continue;
    const auto w = backproject_to_plane(cam, project_point(cam, p), 0.5);
    EXPECT_NEAR(w.x, p.x, 1e-7);
    EXPECT_NEAR(w.y, p.y, 1e-7);
    EXPECT_NEAR(w.z, p.z, 1e-9);
  }
}

TEST(ValidateCamera, Valid) { EXPECT_TRUE(validate_camera(simple_camera()).empty()); }

bool has(const std::vector<std::string>& v, const std::string& tag) {
  for (const auto& s : v)
    if (s.find(tag) != std::string::npos) return true;
  return false;
}

TEST(ValidateCamera, Reflection) {
  CameraModel cam = simple_camera();
  cam.R(2, 2) = -1.0;
  const auto v = validate_camera(cam);
  EXPECT_TRUE(has(v, "rotation determinant"));
  EXPECT_FALSE(has(v, "rotation orthonormality"));
}

TEST(ValidateCamera, ZeroFocal) {
  CameraModel cam = simple_camera();
  cam.K(0, 0) = 0.0;
  EXPECT_TRUE(has(validate_camera(cam), "focal length"));
}

TEST(ValidateCamera, OtherViolations) {
  CameraModel cam = simple_camera();
  cam.R(0, 1) = 0.1;
  EXPECT_TRUE(has(validate_camera(cam), "rotation orthonormality"));
  cam = simple_camera();
  cam.K(2, 0) = 0.5;
  EXPECT_TRUE(has(validate_camera(cam), "intrinsic shape"));
  cam = simple_camera();
  cam.width = 0;
  EXPECT_TRUE(has(validate_camera(cam), "image size"));
  cam = simple_camera();
  cam.T.x() = std::nan("");
  EXPECT_TRUE(has(validate_camera(cam), "non-finite"));
}

TEST(LookAt, TargetProjectsToPrincipalPoint) {
  const CameraModel cam = look_at_camera({-0.5, -0.5, 2.6}, {4.0, 2.25, 0.0}, 300, 640, 480, 3);
  EXPECT_TRUE(validate_camera(cam).empty());
  EXPECT_EQ(cam.view_id, 3);
  const auto px = project_point(cam, {4.0, 2.25, 0.0});
  EXPECT_NEAR(px.u, 319.5, 1e-9);
  EXPECT_NEAR(px.v, 239.5, 1e-9);
  EXPECT_NEAR((cam.center() - Eigen::Vector3d(-0.5, -0.5, 2.6)).norm(), 0.0, 1e-12);
  // World up maps to image up (smaller v).
  EXPECT_LT(project_point(cam, {4.0, 2.25, 0.5}).v, px.v);
}

}  // namespace
}  // namespace mvbev
