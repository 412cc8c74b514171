#pragma once

#include <optional>
#include <span>
#include <utility>

#include "mvbev/feature_grid.hpp"
#include "mvbev/geometry.hpp"

namespace mvbev {

/// Metric raster over the plane z = plane_altitude. Columns run along world x,
/// rows along world y; `origin` is the center of cell (0, 0).
struct BEVGridSpec {
  double origin_x = 0.025;
  double origin_y = 0.01875;
  double extent_x = 8.0;
  double extent_y = 4.5;
  int rows = 120;
  int cols = 160;
  double plane_altitude = 0.0;

  double cell_x() const { return extent_x / cols; }
  double cell_y() const { return extent_y / rows; }
  double cell_center_x(int c) const { return origin_x + c * cell_x(); }
  double cell_center_y(int r) const { return origin_y + r * cell_y(); }

  /// (row, col) of the cell containing (x, y), or nullopt outside the raster.
  std::optional<std::pair<int, int>> cell_of(double x, double y) const;

  /// Grid whose cells tile [x0, x0 + extent_x] x [y0, y0 + extent_y].
  static BEVGridSpec covering(double x0, double y0, double extent_x, double extent_y, int rows,
                              int cols, double plane_altitude);

  /// Throws InvalidArgument when shape or extent is non-positive.
  void validate() const;
};

struct WarpOptions {
  // Row-parallel workers; output is identical for any value.
  int threads = 1;
};

/// Inverse warp: every BEV cell center (x, y, z_P) is projected into the view and
/// the image grid is bilinearly sampled there. Cells behind the camera or outside
/// the image read 0. The grid may be coarser than the image (e.g. a strided
/// feature map); pixel coordinates are rescaled by grid size / image size.
FeatureGrid warp_view_to_bev(const FeatureGrid& feat, const CameraModel& cam,
                             const BEVGridSpec& grid, const WarpOptions& options = {});

/// Channel 0 = x of the cell center in meters, channel 1 = y.
FeatureGrid coordinate_maps(const BEVGridSpec& grid);

enum class FuseMode {
  Concat,  // all view channels in ascending view order, then coords
  Sum,     // channel-wise sum over views, then coords
  Max,     // channel-wise max over views, then coords
};

/// `warped` grids must be in the BEV frame with identical (rows, cols); for Sum and
/// Max their channel counts must match too. Views are ordered by ascending
/// `view_ids` (parallel to `warped`) before concatenation.
FeatureGrid fuse_views(std::span<const FeatureGrid> warped, std::span<const int> view_ids,
                       const FeatureGrid& coords, FuseMode mode = FuseMode::Concat);

}  // namespace mvbev
