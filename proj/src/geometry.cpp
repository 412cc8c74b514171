#include "mvbev/geometry.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "mvbev/error.hpp"

namespace mvbev {

namespace {
constexpr double kMatrixTol = 1e-9;
}

PixelHomogeneous project_point(const CameraModel& cam, const WorldPoint& p) {
  const Eigen::Vector3d x_cam = cam.R * p.vec() + cam.T;
  if (!(x_cam.z() > 0.0)) {
    throw Error(ErrorCode::DepthNonPositive,
                "camera-frame depth " + std::to_string(x_cam.z()) + " for view " +
                    std::to_string(cam.view_id));
  }
  const Eigen::Vector3d h = cam.K * x_cam;
  return {h.x() / h.z(), h.y() / h.z(), 1.0};
}

WorldPoint backproject_to_plane(const CameraModel& cam, const PixelHomogeneous& pixel,
                                double plane_altitude) {
  const Eigen::Vector3d u(pixel.u / pixel.w, pixel.v / pixel.w, 1.0);
  // Ray: X(s) = C + s * d with d = R^T K^-1 u, C = -R^T T.
  const Eigen::Vector3d d = cam.R.transpose() * cam.K.partialPivLu().solve(u);
  const Eigen::Vector3d c = cam.center();
  if (std::abs(d.z()) <= 1e-12 * d.norm()) {
    throw Error(ErrorCode::RayParallelToPlane,
                "pixel (" + std::to_string(pixel.u) + ", " + std::to_string(pixel.v) + ")");
  }
  const double s = (plane_altitude - c.z()) / d.z();
  if (!(s > 0.0)) {
    throw Error(ErrorCode::IntersectionBehindCamera,
                "pixel (" + std::to_string(pixel.u) + ", " + std::to_string(pixel.v) + ")");
  }
  const Eigen::Vector3d x = c + s * d;
  return {x.x(), x.y(), plane_altitude};
}

std::vector<std::string> validate_camera(const CameraModel& cam) {
  std::vector<std::string> out;
  if (!cam.K.allFinite() || !cam.R.allFinite() || !cam.T.allFinite()) {
    out.emplace_back("non-finite camera parameters");
    return out;
  }
  const double ortho = (cam.R.transpose() * cam.R - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  if (ortho > kMatrixTol) {
    out.emplace_back("rotation orthonormality: max |R^T R - I| = " + std::to_string(ortho));
  }
  const double det = cam.R.determinant();
  if (std::abs(det - 1.0) > kMatrixTol) {
    out.emplace_back("rotation determinant: " + std::to_string(det));
  }
  if (cam.K(1, 0) != 0.0 || cam.K(2, 0) != 0.0 || cam.K(2, 1) != 0.0 || cam.K(2, 2) != 1.0) {
    out.emplace_back("intrinsic shape: K must be upper triangular with K[2][2] = 1");
  }
  if (!(cam.K(0, 0) > 0.0) || !(cam.K(1, 1) > 0.0)) {
    out.emplace_back("focal length: K[0][0] and K[1][1] must be positive");
  }
  if (cam.width <= 0 || cam.height <= 0) {
    out.emplace_back("image size: width and height must be positive");
  }
  return out;
}

CameraModel look_at_camera(const Eigen::Vector3d& position, const Eigen::Vector3d& target,
                           double focal_px, int width, int height, int view_id) {
  // Camera axes in world frame: z forward, x right, y down.
  const Eigen::Vector3d forward = (target - position).normalized();
  Eigen::Vector3d right = forward.cross(Eigen::Vector3d::UnitZ());
  if (right.norm() < 1e-9) right = Eigen::Vector3d::UnitX();
  right.normalize();
  const Eigen::Vector3d down = forward.cross(right);

  CameraModel cam;
  cam.R.row(0) = right.transpose();
  cam.R.row(1) = down.transpose();
  cam.R.row(2) = forward.transpose();
  cam.T = -cam.R * position;
  cam.K << focal_px, 0.0, 0.5 * (width - 1), 0.0, focal_px, 0.5 * (height - 1), 0.0, 0.0, 1.0;
  cam.width = width;
  cam.height = height;
  cam.view_id = view_id;
  return cam;
}

}  // namespace mvbev
