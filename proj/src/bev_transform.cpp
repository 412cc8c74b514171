#include "mvbev/bev_transform.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <thread>
#include <vector>

#include "mvbev/error.hpp"
#include "mvbev/simd/warp_kernels.hpp"

namespace mvbev {

std::optional<std::pair<int, int>> BEVGridSpec::cell_of(double x, double y) const {
  const double c = std::floor((x - (origin_x - 0.5 * cell_x())) / cell_x());
  const double r = std::floor((y - (origin_y - 0.5 * cell_y())) / cell_y());
  if (!(c >= 0.0 && c < cols && r >= 0.0 && r < rows)) return std::nullopt;
  return std::make_pair(static_cast<int>(r), static_cast<int>(c));
}

BEVGridSpec BEVGridSpec::covering(double x0, double y0, double extent_x, double extent_y,
                                  int rows, int cols, double plane_altitude) {
  BEVGridSpec g;
  g.extent_x = extent_x;
  g.extent_y = extent_y;
  g.rows = rows;
  g.cols = cols;
  g.plane_altitude = plane_altitude;
  g.origin_x = x0 + 0.5 * g.cell_x();
  g.origin_y = y0 + 0.5 * g.cell_y();
  return g;
}

void BEVGridSpec::validate() const {
  if (rows <= 0 || cols <= 0) throw Error(ErrorCode::InvalidArgument, "BEV shape must be positive");
  if (!(extent_x > 0.0) || !(extent_y > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "BEV extent must be positive");
  }
  if (!std::isfinite(origin_x) || !std::isfinite(origin_y) || !std::isfinite(plane_altitude)) {
    throw Error(ErrorCode::InvalidArgument, "BEV origin/altitude must be finite");
  }
}

FeatureGrid warp_view_to_bev(const FeatureGrid& feat, const CameraModel& cam,
                             const BEVGridSpec& grid, const WarpOptions& options) {
  grid.validate();
  if (feat.frame() != GridFrame::image(cam.view_id)) {
    throw Error(ErrorCode::ShapeMismatch, "feature frame " + feat.frame().to_string() +
                                              " does not match camera view " +
                                              std::to_string(cam.view_id));
  }
  const long long src_len = static_cast<long long>(feat.rows()) * feat.cols() * feat.channels();
  if (src_len > std::numeric_limits<int>::max()) {
    throw Error(ErrorCode::ShapeMismatch, "source grid too large for 32-bit indexing");
  }

  // H = K [r1 r2 (z_P r3 + T)] maps (x, y, 1) on the plane to homogeneous pixels.
  Eigen::Matrix3d M;
  M.col(0) = cam.R.col(0);
  M.col(1) = cam.R.col(1);
  M.col(2) = grid.plane_altitude * cam.R.col(2) + cam.T;
  const Eigen::Matrix3d H = cam.K * M;

  simd::WarpParams p{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) p.H[3 * i + j] = H(i, j);
  p.origin_x = grid.origin_x;
  p.origin_y = grid.origin_y;
  p.cell_x = grid.cell_x();
  p.cell_y = grid.cell_y();
  p.out_rows = grid.rows;
  p.out_cols = grid.cols;
  p.scale_u = static_cast<double>(feat.cols()) / cam.width;
  p.scale_v = static_cast<double>(feat.rows()) / cam.height;
  p.src_rows = feat.rows();
  p.src_cols = feat.cols();
  p.channels = feat.channels();

  FeatureGrid out(grid.rows, grid.cols, feat.channels(), GridFrame::bev());
  const double* src = feat.data().data();
  double* dst = out.data().data();

  const int workers = std::clamp(options.threads, 1, grid.rows);
  if (workers == 1) {
    simd::warp_rows(p, src, dst, 0, grid.rows);
    return out;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  const int chunk = (grid.rows + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const int begin = w * chunk;
    const int end = std::min(grid.rows, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&p, src, dst, begin, end] { simd::warp_rows(p, src, dst, begin, end); });
  }
  for (auto& t : pool) t.join();
  return out;
}

FeatureGrid coordinate_maps(const BEVGridSpec& grid) {
  grid.validate();
  FeatureGrid out(grid.rows, grid.cols, 2, GridFrame::bev());
  for (int r = 0; r < grid.rows; ++r) {
    const double y = grid.cell_center_y(r);
    for (int c = 0; c < grid.cols; ++c) {
      out.at(r, c, 0) = grid.cell_center_x(c);
      out.at(r, c, 1) = y;
    }
  }
  return out;
}

FeatureGrid fuse_views(std::span<const FeatureGrid> warped, std::span<const int> view_ids,
                       const FeatureGrid& coords, FuseMode mode) {
  if (warped.empty()) throw Error(ErrorCode::ShapeMismatch, "fuse_views needs at least one view");
  if (warped.size() != view_ids.size()) {
    throw Error(ErrorCode::ShapeMismatch, "view_ids must parallel warped grids");
  }
  const int rows = coords.rows();
  const int cols = coords.cols();
  for (const auto& g : warped) {
    if (g.rows() != rows || g.cols() != cols) {
      throw Error(ErrorCode::ShapeMismatch, "warped grids and coordinate maps differ in shape");
    }
    if (g.frame() != GridFrame::bev()) {
      throw Error(ErrorCode::ShapeMismatch, "fuse_views expects BEV-frame grids");
    }
  }

  std::vector<std::size_t> order(warped.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return view_ids[a] < view_ids[b]; });

  int view_channels = 0;
  if (mode == FuseMode::Concat) {
    for (const auto& g : warped) view_channels += g.channels();
  } else {
    view_channels = warped.front().channels();
    for (const auto& g : warped) {
      if (g.channels() != view_channels) {
        throw Error(ErrorCode::ShapeMismatch, "sum/max fusion needs equal channel counts");
      }
    }
  }

  FeatureGrid out(rows, cols, view_channels + coords.channels(), GridFrame::bev());
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      int k = 0;
      if (mode == FuseMode::Concat) {
        for (std::size_t idx : order) {
          const auto& g = warped[idx];
          for (int ch = 0; ch < g.channels(); ++ch) out.at(r, c, k++) = g.at(r, c, ch);
        }
      } else {
        for (int ch = 0; ch < view_channels; ++ch) {
          double acc = warped[order[0]].at(r, c, ch);
          for (std::size_t i = 1; i < order.size(); ++i) {
            const double v = warped[order[i]].at(r, c, ch);
            acc = mode == FuseMode::Sum ? acc + v : std::max(acc, v);
          }
          out.at(r, c, k++) = acc;
        }
      }
      for (int ch = 0; ch < coords.channels(); ++ch) out.at(r, c, k++) = coords.at(r, c, ch);
    }
  }
  return out;
}

}  // namespace mvbev
