#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "mvbev/orientation.hpp"
#include "mvbev/sim.hpp"
#include "test_util.hpp"

namespace mvbev {
namespace {

bool all_zero(const FeatureGrid& g) {
  return std::all_of(g.values().begin(), g.values().end(), [](double v) { return v == 0.0; });
}

// Sub-pixel blob center: a sampled Gaussian is exactly quadratic in log space.
std::pair<double, double> blob_center(const FeatureGrid& g) {
  int br = 0, bc = 0;
  double best = -1.0;
  for (int r = 1; r + 1 < g.rows(); ++r)
    for (int c = 1; c + 1 < g.cols(); ++c)
      if (g.at(r, c, 0) > best) {
        best = g.at(r, c, 0);
        br = r;
        bc = c;
      }
  auto vertex = [](double a, double b, double c) {
    const double la = std::log(a), lb = std::log(b), lc = std::log(c);
    return 0.5 * (la - lc) / (la - 2 * lb + lc);
  };
  return {bc + vertex(g.at(br, bc - 1, 0), best, g.at(br, bc + 1, 0)),
          br + vertex(g.at(br - 1, bc, 0), best, g.at(br + 1, bc, 0))};
}

SceneConfig two_camera_open_site() {
  SceneConfig cfg = SceneConfig::default_site(3);
  cfg.obstacles.clear();
  return cfg;
}

Scene scene_with(const SceneConfig& cfg, std::vector<AnnotatedObject> objects) {
  Scene s;
  s.truth.frame_id = 0;
  for (auto& o : objects) {
    std::vector<bool> flags;
    for (const auto& cam : cfg.cameras) flags.push_back(!occluded(cam, o, cfg.obstacles, cfg.plane_altitude));
    s.visible.push_back(flags);
    s.truth.objects.push_back(o);
  }
  s.views = render_views(s, cfg);
  return s;
}

AnnotatedObject object_at(double x, double y, double yaw) {
  AnnotatedObject o;
  o.position = {x, y, 0.0};
  o.yaw = yaw;
  return o;
}

TEST(GenerateScene, EmptyScene) {
  SceneConfig cfg = SceneConfig::default_site(1);
  cfg.n_objects = 0;
  const Scene s = generate_scene(cfg);
  EXPECT_TRUE(s.truth.objects.empty());
  ASSERT_EQ(s.views.size(), 2u);
  for (const auto& v : s.views) {
    EXPECT_EQ(v.rows(), 480);
    EXPECT_EQ(v.cols(), 640);
    EXPECT_EQ(v.channels(), 3);
    EXPECT_TRUE(all_zero(v));
  }
}

TEST(GenerateScene, Deterministic) {
  const SceneConfig cfg = SceneConfig::default_site(99);
  const Scene a = generate_scene(cfg, 4);
  const Scene b = generate_scene(cfg, 4);
  ASSERT_EQ(a.truth.objects.size(), b.truth.objects.size());
  for (std::size_t i = 0; i < a.truth.objects.size(); ++i) {
    EXPECT_EQ(a.truth.objects[i].position.x, b.truth.objects[i].position.x);
    EXPECT_EQ(a.truth.objects[i].yaw, b.truth.objects[i].yaw);
  }
  EXPECT_EQ(a.visible, b.visible);
  ASSERT_EQ(a.views.size(), b.views.size());
  for (std::size_t v = 0; v < a.views.size(); ++v) EXPECT_TRUE(a.views[v] == b.views[v]);
  const Scene c = generate_scene(cfg, 5);
  EXPECT_NE(a.truth.objects[0].position.x, c.truth.objects[0].position.x);
}

TEST(GenerateScene, PlacementConstraints) {
  SceneConfig cfg = SceneConfig::default_site(5);
  for (int f = 0; f < 200; ++f) {
    const Scene s = generate_scene(cfg, f);
    ASSERT_EQ(s.truth.objects.size(), 4u);
    const auto& objs = s.truth.objects;
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const auto& p = objs[i].position;
      EXPECT_GE(p.x, 0.3);
      EXPECT_LE(p.x, cfg.site_x - 0.3);
      EXPECT_GE(p.y, 0.3);
      EXPECT_LE(p.y, cfg.site_y - 0.3);
      EXPECT_GE(objs[i].yaw, 0.0);
      EXPECT_LT(objs[i].yaw, kTwoPi);
      for (std::size_t j = i + 1; j < objs.size(); ++j) {
        EXPECT_GE(std::hypot(p.x - objs[j].position.x, p.y - objs[j].position.y), 0.6);
      }
      for (const auto& o : cfg.obstacles) {
        EXPECT_FALSE(p.x > o.x_min && p.x < o.x_max && p.y > o.y_min && p.y < o.y_max);
      }
      // Visibility flags agree with the ray test and at least one camera sees it.
      bool any = false;
      for (std::size_t v = 0; v < cfg.cameras.size(); ++v) {
        const auto px = project_point(cfg.cameras[v], p);
        const bool in_frame = px.u >= 0 && px.u < 640 && px.v >= 0 && px.v < 480;
        EXPECT_EQ(s.visible[i][v], in_frame && !occluded(cfg.cameras[v], objs[i], cfg.obstacles, 0.0));
        any = any || s.visible[i][v];
      }
      EXPECT_TRUE(any);
    }
  }
}

TEST(GenerateScene, YawBinsAreUniform) {
  // 10^4 yaws; each of 8 bins holds 12.5% +- 1.5%.
  SceneConfig cfg = SceneConfig::default_site(2024);
  std::vector<int> counts(8, 0);
  int total = 0;
  for (int f = 0; total < 10000; ++f) {
    for (const auto& o : generate_scene(cfg, f).truth.objects) {
      if (total == 10000) break;
      ++counts[encode_multibin({o.yaw}, 8).bin - 1];
      ++total;
    }
  }
  for (int c : counts) EXPECT_NEAR(c / 10000.0, 0.125, 0.015);
}

TEST(GenerateScene, InfeasiblePlacement) {
  SceneConfig cfg = SceneConfig::default_site(1);
  cfg.n_objects = 200;
  EXPECT_MVBEV_ERROR(generate_scene(cfg), ErrorCode::PlacementInfeasible);
}

TEST(GenerateScene, InvalidConfig) {
  SceneConfig cfg = SceneConfig::default_site(1);
  cfg.object_length = -1;
  EXPECT_MVBEV_ERROR(generate_scene(cfg), ErrorCode::InvalidArgument);
  cfg = SceneConfig::default_site(1);
  cfg.feature_stride = 7;
  EXPECT_MVBEV_ERROR(generate_scene(cfg), ErrorCode::InvalidArgument);
}

TEST(Occlusion, HandRayBoxCase) {
  SceneConfig cfg;
  cfg.cameras.push_back(look_at_camera({0, 0, 1}, {5, 0, 0}, 300, 640, 480, 0));
  cfg.cameras.push_back(look_at_camera({10, 0, 1}, {5, 0, 0}, 300, 640, 480, 1));
  // Segment (0,0,1) -> (5,0,0.5) is at z = 0.8..0.7 over x in [2, 3]: below 2.0, above 0.5.
  cfg.obstacles = {{2.0, -0.5, 3.0, 0.5, 2.0}};
  const AnnotatedObject o = object_at(5, 0, 0.0);
  EXPECT_TRUE(occluded(cfg.cameras[0], o, cfg.obstacles, 0.0));
  EXPECT_FALSE(occluded(cfg.cameras[1], o, cfg.obstacles, 0.0));
  cfg.obstacles[0].height = 0.5;
  EXPECT_FALSE(occluded(cfg.cameras[0], o, cfg.obstacles, 0.0));
  cfg.obstacles[0].height = 2.0;

  const Scene s = scene_with(cfg, {o});
  EXPECT_TRUE(all_zero(s.views[0]));
  EXPECT_FALSE(all_zero(s.views[1]));
}

TEST(Occlusion, RemovingObstaclesNeverHidesObjects) {
  const SceneConfig cfg = SceneConfig::default_site(8);
  for (int f = 0; f < 100; ++f) {
    const Scene s = generate_scene(cfg, f);
    for (std::size_t k = 0; k < cfg.obstacles.size(); ++k) {
      std::vector<Obstacle> fewer = cfg.obstacles;
      fewer.erase(fewer.begin() + static_cast<long>(k));
      for (std::size_t v = 0; v < cfg.cameras.size(); ++v) {
        int before = 0, after = 0;
        for (const auto& o : s.truth.objects) {
          before += !occluded(cfg.cameras[v], o, cfg.obstacles, 0.0);
          after += !occluded(cfg.cameras[v], o, fewer, 0.0);
        }
        EXPECT_GE(after, before);
      }
    }
  }
}

TEST(Render, BlobBackprojectionsAgreeAcrossViews) {
  const SceneConfig cfg = two_camera_open_site();
  const BEVGridSpec grid = pipeline_params_for(cfg).grid;
  for (const auto& p : {WorldPoint{2.0, 1.5, 0}, WorldPoint{4.1, 2.3, 0}, WorldPoint{6.3, 3.7, 0}}) {
    const Scene s = scene_with(cfg, {object_at(p.x, p.y, 1.0)});
    std::vector<WorldPoint> hits;
    for (std::size_t v = 0; v < 2; ++v) {
      const auto [u, w] = blob_center(s.views[v]);
      hits.push_back(backproject_to_plane(cfg.cameras[v], {u, w, 1.0}, 0.0));
    }
    EXPECT_LT(std::hypot(hits[0].x - hits[1].x, hits[0].y - hits[1].y), std::min(grid.cell_x(), grid.cell_y()));
    EXPECT_LT(std::hypot(hits[0].x - p.x, hits[0].y - p.y), 1e-3);
  }
}

TEST(Render, OrientationChannelsEncodeLocalYaw) {
  const SceneConfig cfg = two_camera_open_site();
  const AnnotatedObject o = object_at(3.0, 2.0, 2.2);
  const Scene s = scene_with(cfg, {o});
  for (std::size_t v = 0; v < 2; ++v) {
    const auto px = project_point(cfg.cameras[v], o.position);
    const int r = static_cast<int>(std::lround(px.v));
    const int c = static_cast<int>(std::lround(px.u));
    const double g = s.views[v].at(r, c, 0);
    const double alpha = global_to_local_yaw(cfg.cameras[v], o.position, o.yaw).alpha;
    EXPECT_NEAR(s.views[v].at(r, c, 1) / g, 0.5 * (1 + std::cos(alpha)), 1e-12);
    EXPECT_NEAR(s.views[v].at(r, c, 2) / g, 0.5 * (1 + std::sin(alpha)), 1e-12);
  }
}

TEST(Pipeline, SingleObjectTwoCleanViews) {
  const SceneConfig cfg = two_camera_open_site();
  const PipelineParams params = pipeline_params_for(cfg);
  const AnnotatedObject o = object_at(3.3, 2.1, 0.9);
  const Scene s = scene_with(cfg, {o});
  const DetectionSet d = run_geometric_pipeline(s.views, cfg.cameras, params, 0);
  ASSERT_EQ(d.detections.size(), 1u);
  EXPECT_LE(std::abs(d.detections[0].x - o.position.x), params.grid.cell_x());
  EXPECT_LE(std::abs(d.detections[0].y - o.position.y), params.grid.cell_y());
  ASSERT_TRUE(d.detections[0].yaw.has_value());
  EXPECT_LT(angle_distance(*d.detections[0].yaw, o.yaw), 0.05);
  EXPECT_GT(d.detections[0].confidence, 0.9);
  EXPECT_LE(d.detections[0].confidence, 1.0);
}

TEST(Pipeline, OccludedInOneViewStillDetected) {
  SceneConfig cfg = two_camera_open_site();
  const AnnotatedObject o = object_at(2.5, 1.8, 4.0);
  // Tall wall between camera 0 and the object.
  const Eigen::Vector3d c0 = cfg.cameras[0].center();
  const double mx = 0.5 * (c0.x() + o.position.x);
  const double my = 0.5 * (c0.y() + o.position.y);
  cfg.obstacles = {{mx - 0.2, my - 0.2, mx + 0.2, my + 0.2, 2.5}};
  ASSERT_TRUE(occluded(cfg.cameras[0], o, cfg.obstacles, 0.0));
  ASSERT_FALSE(occluded(cfg.cameras[1], o, cfg.obstacles, 0.0));
  const Scene s = scene_with(cfg, {o});
  EXPECT_TRUE(all_zero(s.views[0]));
  const PipelineParams params = pipeline_params_for(cfg);
  const DetectionSet d = run_geometric_pipeline(s.views, cfg.cameras, params, 0);
  ASSERT_EQ(d.detections.size(), 1u);
  EXPECT_LT(std::hypot(d.detections[0].x - o.position.x, d.detections[0].y - o.position.y), 0.07);
  ASSERT_TRUE(d.detections[0].yaw.has_value());
  EXPECT_LT(angle_distance(*d.detections[0].yaw, o.yaw), 0.05);
}

TEST(Pipeline, EmptyInputs) {
  const SceneConfig cfg = two_camera_open_site();
  const PipelineParams params = pipeline_params_for(cfg);
  const std::vector<FeatureGrid> none;
  const std::vector<CameraModel> no_cams;
  EXPECT_TRUE(run_geometric_pipeline(none, no_cams, params, 3).detections.empty());
  const Scene s = scene_with(cfg, {});
  EXPECT_TRUE(run_geometric_pipeline(s.views, cfg.cameras, params, 0).detections.empty());
  const std::vector<CameraModel> one_cam{cfg.cameras[0]};
  EXPECT_MVBEV_ERROR(run_geometric_pipeline(s.views, one_cam, params, 0), ErrorCode::ShapeMismatch);
}

TEST(Pipeline, RoundTripFidelityAtZeroNoise) {
  const SceneConfig cfg = SceneConfig::default_site(77);
  const PipelineParams params = pipeline_params_for(cfg);
  double sq = 0.0;
  int n = 0;
  for (int f = 0; f < 100; ++f) {
    SceneConfig c = cfg;
    c.n_objects = 1 + f % 4;
    const Scene s = generate_scene(c, f);
    const DetectionSet d = run_geometric_pipeline(s.views, c.cameras, params, f);
    for (const auto& o : s.truth.objects) {
      double best = 1e9;
      for (const auto& det : d.detections) best = std::min(best, std::hypot(det.x - o.position.x, det.y - o.position.y));
      ASSERT_LT(best, 0.5) << "frame " << f;  // recall 1 at the matching radius
      sq += best * best;
      ++n;
    }
  }
  EXPECT_LT(std::sqrt(sq / n), params.grid.cell_y());
}

TEST(Pipeline, DeterministicWithNoise) {
  SceneConfig cfg = SceneConfig::default_site(4);
  cfg.noise = {0.02, 0.05, 0.01};
  const PipelineParams params = pipeline_params_for(cfg);
  const Scene a = generate_scene(cfg, 2);
  const Scene b = generate_scene(cfg, 2);
  for (std::size_t v = 0; v < a.views.size(); ++v) EXPECT_TRUE(a.views[v] == b.views[v]);
  const auto da = run_geometric_pipeline(a.views, cfg.cameras, params, 2);
  const auto db = run_geometric_pipeline(b.views, cfg.cameras, params, 2);
  ASSERT_EQ(da.detections.size(), db.detections.size());
  for (std::size_t i = 0; i < da.detections.size(); ++i) {
    EXPECT_EQ(da.detections[i].x, db.detections[i].x);
    EXPECT_EQ(da.detections[i].yaw, db.detections[i].yaw);
    EXPECT_EQ(da.detections[i].confidence, db.detections[i].confidence);
  }
}

}  // namespace
}  // namespace mvbev
