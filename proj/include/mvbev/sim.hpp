#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "mvbev/bev_transform.hpp"
#include "mvbev/feature_grid.hpp"
#include "mvbev/geometry.hpp"
#include "mvbev/metrics.hpp"
#include "mvbev/perspective_pool.hpp"

namespace mvbev {

/// Axis-aligned obstacle standing on the ground plane.
struct Obstacle {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
  double height = 1.0;
};

struct NoiseConfig {
  double position_sigma = 0.0;  // meters, applied to rendered positions
  double yaw_sigma = 0.0;       // radians, applied to rendered yaw
  double pixel_sigma = 0.0;     // additive, intensity channel
};

struct SceneConfig {
  double site_x = 8.0;
  double site_y = 4.5;
  int n_objects = 4;
  double object_length = 0.6;
  double object_width = 0.45;
  double object_height = 0.5;
  double plane_altitude = 0.0;
  std::vector<Obstacle> obstacles;
  std::vector<CameraModel> cameras;
  std::uint64_t seed = 0;
  NoiseConfig noise;
  double blob_sigma_px = 3.0;
  int feature_stride = 1;  // rendered grid = image size / stride
  // Reject placements that no camera can see (out of frame or occluded everywhere).
  bool require_visible = true;

  /// Two cameras on opposite corners of the site, looking at its center, and a set
  /// of obstacles of different heights.
  static SceneConfig default_site(std::uint64_t seed = 0);
  /// Throws InvalidArgument on inconsistent settings or invalid cameras.
  void validate() const;
};

struct Scene {
  FrameAnnotations truth;
  std::vector<std::vector<bool>> visible;  // [object][camera index]
  std::vector<FeatureGrid> views;          // parallel to SceneConfig::cameras

  bool has_occlusion() const;
};

/// Deterministic in (cfg.seed, frame_id). Object centers are rejection-sampled with
/// pairwise clearance >= max(l, w) and at least half that distance from obstacles.
Scene generate_scene(const SceneConfig& cfg, int frame_id = 0);

/// Channel 0: sum of isotropic Gaussian blobs at the projected ground centers of
/// visible objects. Channels 1, 2: the same blobs weighted by (1 + cos a) / 2 and
/// (1 + sin a) / 2, where a is the object's yaw relative to that camera's line of sight.
std::vector<FeatureGrid> render_views(const Scene& scene, const SceneConfig& cfg);

/// True when the segment from the camera center to the object's top center passes
/// through an obstacle.
bool occluded(const CameraModel& cam, const AnnotatedObject& object, std::span<const Obstacle> obstacles,
              double plane_altitude);

struct PipelineParams {
  BEVGridSpec grid;
  double anchor_w = 0.60;
  double anchor_l = 0.45;
  double peak_threshold = 0.25;  // on the view-normalized fused intensity
  double position_nms = 0.3;
  int n_bins = 8;
  double fusion_nms = 0.3;
  PoolShape pool{7, 7};
  double min_view_confidence = 0.1;
  double object_length = 0.6;
  double object_width = 0.45;
  double object_height = 0.5;
  double predefined_yaw = 0.0;  // orientation used to build the pooling box
};

/// Geometric surrogate of the full inference path: warp every view's intensity to
/// BEV, sum, pick 3x3 local maxima, NMS; then per detection pool each view's ROI,
/// read the local yaw, pass it through the multi-bin codec, lift it to the global
/// frame and fuse views by confidence-ranked NMS. `views` parallels `cameras`.
DetectionSet run_geometric_pipeline(std::span<const FeatureGrid> views,
                                    std::span<const CameraModel> cameras,
                                    const PipelineParams& params, int frame_id = 0);

/// Pipeline parameters that match a scene configuration (grid over the site, sizes).
PipelineParams pipeline_params_for(const SceneConfig& cfg);

}  // namespace mvbev
