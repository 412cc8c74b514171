#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace mvbev {

/// Pinhole camera with world-to-camera extrinsics: x_cam = R * x_world + T.
struct CameraModel {
  Eigen::Matrix3d K = Eigen::Matrix3d::Identity();
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d T = Eigen::Vector3d::Zero();
  int width = 1;
  int height = 1;
  int view_id = 0;

  /// Optical center in world coordinates (-R^T T).
  Eigen::Vector3d center() const { return -R.transpose() * T; }
};

struct PixelHomogeneous {
  double u = 0.0;
  double v = 0.0;
  double w = 1.0;
};

struct WorldPoint {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Eigen::Vector3d vec() const { return {x, y, z}; }
  static WorldPoint from(const Eigen::Vector3d& p) { return {p.x(), p.y(), p.z()}; }
};

PixelHomogeneous project_point(const CameraModel& cam, const WorldPoint& p);

// Intersects the viewing ray through `pixel` with the plane z = plane_altitude.
WorldPoint backproject_to_plane(const CameraModel& cam, const PixelHomogeneous& pixel,
                                double plane_altitude);

/// Human-readable invariant violations; empty when the camera is valid.
/// Messages contain the stable tags "rotation orthonormality", "rotation determinant",
/// "intrinsic shape", "focal length", "image size", "non-finite".
std::vector<std::string> validate_camera(const CameraModel& cam);

/// Builds a camera at `position` looking at `target`, with world +z as the up reference.
CameraModel look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                           double focal_px, int width, int height, int view_id);

}  // namespace mvbev
