#include "mvbev/perspective_pool.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mvbev/error.hpp"

namespace mvbev {

std::array<WorldPoint, 8> box3d_vertices(const OrientedBox3D& box) {
  const double c = std::cos(box.yaw);
  const double s = std::sin(box.yaw);
  const double hl = 0.5 * box.length;
  const double hw = 0.5 * box.width;
  const std::array<std::array<double, 2>, 4> local{{{hl, -hw}, {hl, hw}, {-hl, hw}, {-hl, -hw}}};
  std::array<WorldPoint, 8> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    const double x = box.center.x + c * local[i][0] - s * local[i][1];
    const double y = box.center.y + s * local[i][0] + c * local[i][1];
    out[i] = {x, y, box.center.z - 0.5 * box.height};
    out[i + 4] = {x, y, box.center.z + 0.5 * box.height};
  }
  return out;
}

ROI project_roi(const OrientedBox3D& box, const CameraModel& cam) {
  ROI roi;
  roi.view_id = cam.view_id;
  double x_min = std::numeric_limits<double>::infinity();
  double y_min = std::numeric_limits<double>::infinity();
  double x_max = -std::numeric_limits<double>::infinity();
  double y_max = -std::numeric_limits<double>::infinity();
  int in_front = 0;
  for (const auto& v : box3d_vertices(box)) {
    const double depth = (cam.R * v.vec() + cam.T).z();
    if (!(depth > 0.0)) {
      roi.partial = true;
      continue;
    }
    const PixelHomogeneous px = project_point(cam, v);
    x_min = std::min(x_min, px.u);
    y_min = std::min(y_min, px.v);
    x_max = std::max(x_max, px.u);
    y_max = std::max(y_max, px.v);
    ++in_front;
  }
  if (in_front == 0) {
    throw Error(ErrorCode::AllVerticesBehindCamera, "view " + std::to_string(cam.view_id));
  }
  const double w_lim = cam.width - 1.0;
  const double h_lim = cam.height - 1.0;
  roi.empty = x_max < 0.0 || y_max < 0.0 || x_min > w_lim || y_min > h_lim;
  roi.x_min = std::clamp(x_min, 0.0, w_lim);
  roi.y_min = std::clamp(y_min, 0.0, h_lim);
  roi.x_max = std::clamp(x_max, 0.0, w_lim);
  roi.y_max = std::clamp(y_max, 0.0, h_lim);
  return roi;
}

FeatureGrid roi_pool(const FeatureGrid& feat, const ROI& roi, PoolShape output, double spatial_scale) {
  if (roi.empty) throw Error(ErrorCode::EmptyROI, "view " + std::to_string(roi.view_id));
  if (output.rows <= 0 || output.cols <= 0) {
    throw Error(ErrorCode::ShapeMismatch, "pooled shape must be positive");
  }
  const int start_x = static_cast<int>(std::round(roi.x_min * spatial_scale));
  const int start_y = static_cast<int>(std::round(roi.y_min * spatial_scale));
  const int end_x = static_cast<int>(std::round(roi.x_max * spatial_scale));
  const int end_y = static_cast<int>(std::round(roi.y_max * spatial_scale));
  const int roi_w = std::max(end_x - start_x + 1, 1);
  const int roi_h = std::max(end_y - start_y + 1, 1);
  const double bin_w = static_cast<double>(roi_w) / output.cols;
  const double bin_h = static_cast<double>(roi_h) / output.rows;

  FeatureGrid out(output.rows, output.cols, feat.channels(), feat.frame());
  for (int ph = 0; ph < output.rows; ++ph) {
    int h0 = static_cast<int>(std::floor(ph * bin_h)) + start_y;
    int h1 = static_cast<int>(std::ceil((ph + 1) * bin_h)) + start_y;
    h0 = std::clamp(h0, 0, feat.rows());
    h1 = std::clamp(h1, 0, feat.rows());
    for (int pw = 0; pw < output.cols; ++pw) {
      int w0 = static_cast<int>(std::floor(pw * bin_w)) + start_x;
      int w1 = static_cast<int>(std::ceil((pw + 1) * bin_w)) + start_x;
      w0 = std::clamp(w0, 0, feat.cols());
      w1 = std::clamp(w1, 0, feat.cols());
      const bool empty_bin = h1 <= h0 || w1 <= w0;
      for (int ch = 0; ch < feat.channels(); ++ch) {
        double best = empty_bin ? 0.0 : -std::numeric_limits<double>::infinity();
        for (int r = h0; r < h1; ++r)
          for (int c = w0; c < w1; ++c) best = std::max(best, feat.at(r, c, ch));
        out.at(ph, pw, ch) = best;
      }
    }
  }
  return out;
}

std::pair<int, int> pool_bin_of(const ROI& roi, PoolShape output, double spatial_scale, double u,
                                double v) {
  const int start_x = static_cast<int>(std::round(roi.x_min * spatial_scale));
  const int start_y = static_cast<int>(std::round(roi.y_min * spatial_scale));
  const int end_x = static_cast<int>(std::round(roi.x_max * spatial_scale));
  const int end_y = static_cast<int>(std::round(roi.y_max * spatial_scale));
  const double bin_w = static_cast<double>(std::max(end_x - start_x + 1, 1)) / output.cols;
  const double bin_h = static_cast<double>(std::max(end_y - start_y + 1, 1)) / output.rows;
  const double cx = std::floor((u + 0.5) * spatial_scale);
  const double cy = std::floor((v + 0.5) * spatial_scale);
  const int pw = static_cast<int>(std::floor((cx - start_x) / bin_w));
  const int ph = static_cast<int>(std::floor((cy - start_y) / bin_h));
  return {std::clamp(ph, 0, output.rows - 1), std::clamp(pw, 0, output.cols - 1)};
}

}  // namespace mvbev
