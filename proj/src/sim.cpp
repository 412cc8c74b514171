#include "mvbev/sim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "mvbev/boxes.hpp"
#include "mvbev/error.hpp"
#include "mvbev/orientation.hpp"

namespace mvbev {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Portable draws on top of mt19937_64 (the std distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    spare_ = r * std::sin(kTwoPi * u2);
    has_spare_ = true;
    return r * std::cos(kTwoPi * u2);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t stream_seed(std::uint64_t seed, int frame_id, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(static_cast<std::uint64_t>(frame_id) * 2 + stream));
}

bool segment_hits_box(const Eigen::Vector3d& a, const Eigen::Vector3d& b, const Eigen::Vector3d& lo,
                      const Eigen::Vector3d& hi) {
  double t0 = 0.0;
  double t1 = 1.0;
  const Eigen::Vector3d d = b - a;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (a[k] < lo[k] || a[k] > hi[k]) return false;
      continue;
    }
    double ta = (lo[k] - a[k]) / d[k];
    double tb = (hi[k] - a[k]) / d[k];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return false;
  }
  return true;
}

bool ground_center_in_frame(const CameraModel& cam, const WorldPoint& p) {
  const double depth = (cam.R * p.vec() + cam.T).z();
  if (!(depth > 0.0)) return false;
  const PixelHomogeneous px = project_point(cam, p);
  return px.u >= 0.0 && px.u < cam.width && px.v >= 0.0 && px.v < cam.height;
}

}  // namespace

SceneConfig SceneConfig::default_site(std::uint64_t seed) {
  SceneConfig cfg;
  cfg.seed = seed;
  const Eigen::Vector3d target(4.0, 2.25, 0.0);
  cfg.cameras.push_back(look_at_camera({-0.5, -0.5, 2.6}, target, 300.0, 640, 480, 0));
  cfg.cameras.push_back(look_at_camera({8.5, 5.0, 2.6}, target, 300.0, 640, 480, 1));
  cfg.obstacles = {
      {2.4, 1.0, 3.2, 1.6, 1.4},
      {4.9, 2.8, 5.7, 3.5, 1.6},
      {1.1, 3.0, 1.7, 3.7, 0.9},
      {6.2, 0.7, 6.9, 1.4, 1.1},
  };
  return cfg;
}

void SceneConfig::validate() const {
  if (!(site_x > 0.0) || !(site_y > 0.0)) throw Error(ErrorCode::InvalidArgument, "site extent must be positive");
  if (n_objects < 0) throw Error(ErrorCode::InvalidArgument, "n_objects must be >= 0");
  if (!(object_length > 0.0) || !(object_width > 0.0) || !(object_height > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "object size must be positive");
  }
  if (std::max(object_length, object_width) >= std::min(site_x, site_y)) {
    throw Error(ErrorCode::InvalidArgument, "objects do not fit in the site");
  }
  if (feature_stride < 1) throw Error(ErrorCode::InvalidArgument, "feature_stride must be >= 1");
  if (!(blob_sigma_px > 0.0)) throw Error(ErrorCode::InvalidArgument, "blob_sigma_px must be positive");
  if (noise.position_sigma < 0.0 || noise.yaw_sigma < 0.0 || noise.pixel_sigma < 0.0) {
    throw Error(ErrorCode::InvalidArgument, "noise sigmas must be >= 0");
  }
  for (const auto& o : obstacles) {
    if (!(o.x_max > o.x_min) || !(o.y_max > o.y_min) || !(o.height > 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "obstacle must have positive extent and height");
    }
  }
  for (const auto& cam : cameras) {
    const auto problems = validate_camera(cam);
    if (!problems.empty()) {
      throw Error(ErrorCode::InvalidArgument, "camera " + std::to_string(cam.view_id) + ": " + problems.front());
    }
    if (cam.width % feature_stride != 0 || cam.height % feature_stride != 0) {
      throw Error(ErrorCode::InvalidArgument, "image size not divisible by feature_stride");
    }
  }
}

bool Scene::has_occlusion() const {
  for (const auto& flags : visible)
    for (bool v : flags)
      if (!v) return true;
  return false;
}

bool occluded(const CameraModel& cam, const AnnotatedObject& object, std::span<const Obstacle> obstacles,
              double plane_altitude) {
  const Eigen::Vector3d c = cam.center();
  const Eigen::Vector3d top(object.position.x, object.position.y, plane_altitude + object.height);
  for (const auto& o : obstacles) {
    const Eigen::Vector3d lo(o.x_min, o.y_min, plane_altitude);
    const Eigen::Vector3d hi(o.x_max, o.y_max, plane_altitude + o.height);
    if (segment_hits_box(c, top, lo, hi)) return true;
  }
  return false;
}

Scene generate_scene(const SceneConfig& cfg, int frame_id) {
  cfg.validate();
  Rng rng(stream_seed(cfg.seed, frame_id, 0));
  Scene scene;
  scene.truth.frame_id = frame_id;

  const double clearance = std::max(cfg.object_length, cfg.object_width);
  const double margin = 0.5 * clearance;
  int rejections = 0;
  while (static_cast<int>(scene.truth.objects.size()) < cfg.n_objects) {
    AnnotatedObject obj;
    obj.position = {rng.uniform(margin, cfg.site_x - margin), rng.uniform(margin, cfg.site_y - margin),
                    cfg.plane_altitude};
    obj.yaw = rng.uniform(0.0, kTwoPi);
    obj.length = cfg.object_length;
    obj.width = cfg.object_width;
    obj.height = cfg.object_height;

    bool ok = true;
    for (const auto& other : scene.truth.objects) {
      if (std::hypot(other.position.x - obj.position.x, other.position.y - obj.position.y) < clearance) {
        ok = false;
        break;
      }
    }
    for (const auto& o : cfg.obstacles) {
      if (!ok) break;
      if (obj.position.x > o.x_min - margin && obj.position.x < o.x_max + margin &&
          obj.position.y > o.y_min - margin && obj.position.y < o.y_max + margin) {
        ok = false;
      }
    }
    std::vector<bool> flags(cfg.cameras.size(), false);
    if (ok) {
      bool any = false;
      for (std::size_t v = 0; v < cfg.cameras.size(); ++v) {
        flags[v] = ground_center_in_frame(cfg.cameras[v], obj.position) &&
                   !occluded(cfg.cameras[v], obj, cfg.obstacles, cfg.plane_altitude);
        any = any || flags[v];
      }
      if (cfg.require_visible && !cfg.cameras.empty() && !any) ok = false;
    }
    if (!ok) {
      if (++rejections >= 10000) {
        throw Error(ErrorCode::PlacementInfeasible,
                    "placed " + std::to_string(scene.truth.objects.size()) + " of " +
                        std::to_string(cfg.n_objects) + " objects");
      }
      continue;
    }
    scene.truth.objects.push_back(obj);
    scene.visible.push_back(std::move(flags));
  }
  scene.views = render_views(scene, cfg);
  return scene;
}

std::vector<FeatureGrid> render_views(const Scene& scene, const SceneConfig& cfg) {
  Rng rng(stream_seed(cfg.seed, scene.truth.frame_id, 1));
  const auto& objects = scene.truth.objects;

  // Per-object rendering perturbation, drawn once and shared by all views.
  std::vector<WorldPoint> pos(objects.size());
  std::vector<double> yaw(objects.size());
  for (std::size_t i = 0; i < objects.size(); ++i) {
    pos[i] = objects[i].position;
    yaw[i] = objects[i].yaw;
    if (cfg.noise.position_sigma > 0.0) {
      pos[i].x += cfg.noise.position_sigma * rng.normal();
      pos[i].y += cfg.noise.position_sigma * rng.normal();
    }
    if (cfg.noise.yaw_sigma > 0.0) yaw[i] += cfg.noise.yaw_sigma * rng.normal();
  }

  const double stride = cfg.feature_stride;
  const double sigma = cfg.blob_sigma_px / stride;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<FeatureGrid> views;
  views.reserve(cfg.cameras.size());
  for (std::size_t v = 0; v < cfg.cameras.size(); ++v) {
    const CameraModel& cam = cfg.cameras[v];
    FeatureGrid grid(cam.height / cfg.feature_stride, cam.width / cfg.feature_stride, 3,
                     GridFrame::image(cam.view_id));
    for (std::size_t i = 0; i < objects.size(); ++i) {
      if (v < scene.visible[i].size() && !scene.visible[i][v]) continue;
      const double depth = (cam.R * pos[i].vec() + cam.T).z();
      if (!(depth > 0.0)) continue;
      const PixelHomogeneous px = project_point(cam, pos[i]);
      const double gu = (px.u + 0.5) / stride - 0.5;
      const double gv = (px.v + 0.5) / stride - 0.5;
      const double alpha = global_to_local_yaw(cam, pos[i], yaw[i]).alpha;
      const double wc = 0.5 * (1.0 + std::cos(alpha));
      const double ws = 0.5 * (1.0 + std::sin(alpha));
      const int c0 = std::max(0, static_cast<int>(std::floor(gu)) - radius);
      const int c1 = std::min(grid.cols() - 1, static_cast<int>(std::ceil(gu)) + radius);
      const int r0 = std::max(0, static_cast<int>(std::floor(gv)) - radius);
      const int r1 = std::min(grid.rows() - 1, static_cast<int>(std::ceil(gv)) + radius);
      for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
          const double du = c - gu;
          const double dv = r - gv;
          const double g = std::exp(-(du * du + dv * dv) / (2.0 * sigma * sigma));
          grid.at(r, c, 0) += g;
          grid.at(r, c, 1) += g * wc;
          grid.at(r, c, 2) += g * ws;
        }
      }
    }
    if (cfg.noise.pixel_sigma > 0.0) {
      for (int r = 0; r < grid.rows(); ++r)
        for (int c = 0; c < grid.cols(); ++c) grid.at(r, c, 0) += cfg.noise.pixel_sigma * rng.normal();
    }
    views.push_back(std::move(grid));
  }
  return views;
}

PipelineParams pipeline_params_for(const SceneConfig& cfg) {
  PipelineParams p;
  p.grid = BEVGridSpec::covering(0.0, 0.0, cfg.site_x, cfg.site_y, 120, 160, cfg.plane_altitude);
  p.object_length = cfg.object_length;
  p.object_width = cfg.object_width;
  p.object_height = cfg.object_height;
  return p;
}

DetectionSet run_geometric_pipeline(std::span<const FeatureGrid> views,
                                    std::span<const CameraModel> cameras,
                                    const PipelineParams& params, int frame_id) {
  if (views.size() != cameras.size()) {
    throw Error(ErrorCode::ShapeMismatch, "views and cameras differ in count");
  }
  params.grid.validate();
  DetectionSet out;
  out.frame_id = frame_id;
  if (views.empty()) return out;

  const BEVGridSpec& grid = params.grid;
  const int n_views = static_cast<int>(views.size());
  std::vector<double> fused(static_cast<std::size_t>(grid.rows) * grid.cols, 0.0);
  for (int v = 0; v < n_views; ++v) {
    if (views[v].channels() < 3) throw Error(ErrorCode::ShapeMismatch, "view needs 3 channels");
    const FeatureGrid bev = warp_view_to_bev(views[v].channel(0), cameras[v], grid);
    const auto data = bev.data();
    for (std::size_t k = 0; k < fused.size(); ++k) fused[k] += data[k];
  }

  // 3x3 maxima; a plateau is resolved in favor of its first cell in raster order.
  const double threshold = params.peak_threshold * n_views;
  std::vector<BoxBEV> peaks;
  for (int r = 0; r < grid.rows; ++r) {
    for (int c = 0; c < grid.cols; ++c) {
      const std::size_t k = static_cast<std::size_t>(r) * grid.cols + c;
      const double val = fused[k];
      if (!(val > threshold)) continue;
      bool is_max = true;
      for (int dr = -1; dr <= 1 && is_max; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          if (dr == 0 && dc == 0) continue;
          const int rr = r + dr;
          const int cc = c + dc;
          if (rr < 0 || rr >= grid.rows || cc < 0 || cc >= grid.cols) continue;
          const double other = fused[static_cast<std::size_t>(rr) * grid.cols + cc];
          const bool before = dr < 0 || (dr == 0 && dc < 0);
          if (before ? other >= val : other > val) {
            is_max = false;
            break;
          }
        }
      }
      if (!is_max) continue;
      peaks.push_back({grid.cell_center_x(c), grid.cell_center_y(r), params.anchor_w, params.anchor_l,
                       std::min(1.0, val / n_views)});
    }
  }
  const auto kept = nms(std::span<const BoxBEV>(peaks), params.position_nms);

  for (std::size_t idx : kept) {
    const BoxBEV& peak = peaks[idx];
    Detection det;
    det.x = peak.cx;
    det.y = peak.cy;
    det.length = params.object_length;
    det.width = params.object_width;
    det.height = params.object_height;
    det.confidence = peak.score;

    const WorldPoint ground{peak.cx, peak.cy, grid.plane_altitude};
    const OrientedBox3D box{{peak.cx, peak.cy, grid.plane_altitude + 0.5 * params.object_height},
                            params.object_length, params.object_width, params.object_height,
                            params.predefined_yaw};
    std::vector<OrientationCandidate> candidates;
    for (int v = 0; v < n_views; ++v) {
      const CameraModel& cam = cameras[v];
      const double depth = (cam.R * ground.vec() + cam.T).z();
      if (!(depth > 0.0)) continue;
      ROI roi;
      try {
        roi = project_roi(box, cam);
      } catch (const Error&) {
        continue;
      }
      if (roi.empty) continue;
      const double scale = static_cast<double>(views[v].cols()) / cam.width;
      const FeatureGrid pooled = roi_pool(views[v], roi, params.pool, scale);
      const PixelHomogeneous px = project_point(cam, ground);
      const auto [ph, pw] = pool_bin_of(roi, params.pool, scale, px.u, px.v);
      const double g = pooled.at(ph, pw, 0);
      if (!(g >= params.min_view_confidence)) continue;
      const double cs = 2.0 * pooled.at(ph, pw, 1) / g - 1.0;
      const double sn = 2.0 * pooled.at(ph, pw, 2) / g - 1.0;
      const LocalYaw read{wrap_two_pi(std::atan2(sn, cs))};
      const double conf = std::min(1.0, g);
      const auto bins = OrientationBins::one_hot(encode_multibin(read, params.n_bins), params.n_bins, conf);
      const double beta = local_to_global_yaw(cam, ground, decode_multibin(bins));
      candidates.push_back(
          {footprint_box(peak.cx, peak.cy, beta, params.object_length, params.object_width), cam.view_id, conf});
    }
    if (!candidates.empty()) {
      const auto fused_yaw = fuse_multiview_orientations(candidates, params.fusion_nms);
      det.yaw = wrap_two_pi(fused_yaw.front().box.yaw);
    }
    out.detections.push_back(det);
  }
  return out;
}

}  // namespace mvbev
