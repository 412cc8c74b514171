#pragma once

#include <array>
#include <utility>

#include "mvbev/boxes.hpp"
#include "mvbev/feature_grid.hpp"
#include "mvbev/geometry.hpp"

namespace mvbev {

/// 3D box; `center.z` is the box mid-height, `length` runs along `yaw`.
struct OrientedBox3D {
  WorldPoint center;
  double length = 1.0;
  double width = 1.0;
  double height = 1.0;
  double yaw = 0.0;
};

/// Pixel-space region for one view, clamped to [0, width-1] x [0, height-1].
struct ROI {
  int view_id = 0;
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  bool empty = false;    // projected rectangle lies entirely outside the image
  bool partial = false;  // some vertices were behind the camera and dropped

  ImageBox box() const { return {x_min, y_min, x_max, y_max}; }
};

/// Bottom face (z - h/2) counter-clockwise, then the top face in the same order.
std::array<WorldPoint, 8> box3d_vertices(const OrientedBox3D& box);

/// Minimum outer rectangle of the projected vertices that lie in front of the camera.
ROI project_roi(const OrientedBox3D& box, const CameraModel& cam);

struct PoolShape {
  int rows = 7;
  int cols = 7;
};

/// Classical ROI max pooling with integer bin edges. `spatial_scale` maps ROI pixel
/// coordinates into grid coordinates (grid cols / image width for a strided map).
/// Bins that cover no source cell output 0.
FeatureGrid roi_pool(const FeatureGrid& feat, const ROI& roi, PoolShape output,
                     double spatial_scale = 1.0);

/// (row, col) of the pooled bin that covers pixel (u, v) under the same partition
/// roi_pool uses; clamped to the output shape.
std::pair<int, int> pool_bin_of(const ROI& roi, PoolShape output, double spatial_scale, double u,
                                double v);

}  // namespace mvbev
