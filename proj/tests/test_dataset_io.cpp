#include <cmath>
#include <filesystem>
#include <random>

#include <Eigen/LU>
#include <gtest/gtest.h>

#include "mvbev/config.hpp"
#include "mvbev/dataset_io.hpp"
#include "mvbev/orientation.hpp"
#include "test_util.hpp"

namespace fs = std::filesystem;

namespace mvbev {
namespace {

const fs::path kFixtures = MVBEV_FIXTURE_DIR;

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("mvbev_io_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string error_text(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

TEST(Calibration, LoadsFixture) {
  const CalibrationFile c = load_calibration_file(kFixtures / "calibration.json");
  ASSERT_EQ(c.cameras.size(), 2u);
  EXPECT_EQ(c.cameras[0].view_id, 0);
  EXPECT_EQ(c.cameras[1].view_id, 1);
  EXPECT_EQ(c.cameras[0].width, 640);
  EXPECT_EQ(c.cameras[0].height, 480);
  EXPECT_DOUBLE_EQ(c.site_x, 8.0);
  EXPECT_DOUBLE_EQ(c.site_y, 4.5);
  for (const auto& cam : c.cameras) {
    EXPECT_NEAR(cam.R.determinant(), 1.0, 1e-9);
    EXPECT_NEAR((cam.R * cam.R.transpose() - Eigen::Matrix3d::Identity()).norm(), 0.0, 1e-9);
  }
  EXPECT_EQ(load_calibration(kFixtures / "calibration.json").size(), 2u);
}

TEST(Calibration, ReflectionNamesView) {
  EXPECT_MVBEV_ERROR(load_calibration(kFixtures / "calibration_reflection.json"), ErrorCode::ValidationError);
  const std::string msg = error_text([] { load_calibration(kFixtures / "calibration_reflection.json"); });
  EXPECT_NE(msg.find("view_id 1"), std::string::npos) << msg;
  EXPECT_EQ(msg.find("view_id 0"), std::string::npos) << msg;
}

TEST(Calibration, MissingTranslationNamesField) {
  EXPECT_MVBEV_ERROR(load_calibration(kFixtures / "calibration_missing_t.json"), ErrorCode::ParseError);
  const std::string msg = error_text([] { load_calibration(kFixtures / "calibration_missing_t.json"); });
  EXPECT_NE(msg.find("cameras[1].T"), std::string::npos) << msg;
}

TEST(Calibration, OtherViolations) {
  CalibrationFile c = load_calibration_file(kFixtures / "calibration.json");
  const std::string good = calibration_to_json(c);

  CalibrationFile dup = c;
  dup.cameras[1].view_id = 0;
  EXPECT_MVBEV_ERROR(parse_calibration(calibration_to_json(dup)), ErrorCode::ValidationError);

  CalibrationFile badk = c;
  badk.cameras[0].K(0, 0) = -10;
  const std::string msg = error_text([&] { parse_calibration(calibration_to_json(badk)); });
  EXPECT_NE(msg.find("view_id 0"), std::string::npos) << msg;

  EXPECT_MVBEV_ERROR(parse_calibration("{not json"), ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(parse_calibration("{}"), ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(load_calibration(kFixtures / "does_not_exist.json"), ErrorCode::IOError);

  // Wrong array length.
  std::string shortk = good;
  const auto pos = shortk.find("\"K\"");
  ASSERT_NE(pos, std::string::npos);
  shortk.replace(pos, 3, "\"Kx\"");
  EXPECT_MVBEV_ERROR(parse_calibration(shortk), ErrorCode::ParseError);
}

TEST(Calibration, RoundTrip) {
  const CalibrationFile c = load_calibration_file(kFixtures / "calibration.json");
  const fs::path dir = scratch_dir("calib");
  write_calibration(dir / "c.json", c);
  const CalibrationFile d = load_calibration_file(dir / "c.json");
  ASSERT_EQ(d.cameras.size(), c.cameras.size());
  for (std::size_t i = 0; i < c.cameras.size(); ++i) {
    EXPECT_TRUE(d.cameras[i].K == c.cameras[i].K);
    EXPECT_TRUE(d.cameras[i].R == c.cameras[i].R);
    EXPECT_TRUE(d.cameras[i].T == c.cameras[i].T);
  }
  EXPECT_EQ(calibration_to_json(d), calibration_to_json(c));
}

TEST(Annotations, RoundTripIsExact) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> pos(0.0, 8.0), yaw(0.0, kTwoPi);
  std::vector<FrameAnnotations> frames;
  for (int f = 0; f < 5; ++f) {
    FrameAnnotations fa;
    fa.frame_id = 2 * f;
    for (int i = 0; i < f; ++i) {
      AnnotatedObject o;
      o.position = {pos(rng), pos(rng), i == 1 ? 0.25 : 0.0};
      o.yaw = yaw(rng);
      fa.objects.push_back(o);
    }
    frames.push_back(fa);
  }
  const auto back = parse_annotations(annotations_to_json(frames));
  ASSERT_EQ(back.size(), frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    EXPECT_EQ(back[f].frame_id, frames[f].frame_id);
    ASSERT_EQ(back[f].objects.size(), frames[f].objects.size());
    for (std::size_t i = 0; i < frames[f].objects.size(); ++i) {
      const auto& a = frames[f].objects[i];
      const auto& b = back[f].objects[i];
      EXPECT_EQ(a.position.x, b.position.x);
      EXPECT_EQ(a.position.y, b.position.y);
      EXPECT_EQ(a.position.z, b.position.z);
      EXPECT_EQ(a.yaw, b.yaw);
      EXPECT_EQ(a.length, b.length);
    }
  }
}

TEST(Annotations, EmptyAndInvalid) {
  EXPECT_TRUE(parse_annotations(R"({"frames": []})").empty());
  const auto one = parse_annotations(R"({"frames": [{"frame_id": 4, "objects": []}]})");
  ASSERT_EQ(one.size(), 1u);
  EXPECT_TRUE(one[0].objects.empty());

  EXPECT_MVBEV_ERROR(load_annotations(kFixtures / "gt_duplicate_frame.json"), ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(
      parse_annotations(R"({"frames": [{"frame_id": 3, "objects": []}, {"frame_id": 1, "objects": []}]})"),
      ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(parse_annotations(
                         R"({"frames": [{"frame_id": 0, "objects": [{"x": 1, "y": 1, "yaw": 7.0, "l": 1, "w": 1, "h": 1}]}]})"),
                     ErrorCode::ParseError);
  const std::string msg = error_text([] {
    parse_annotations(R"({"frames": [{"frame_id": 0, "objects": [{"x": 1, "yaw": 0, "l": 1, "w": 1, "h": 1}]}]})");
  });
  EXPECT_NE(msg.find("frames[0].objects[0].y"), std::string::npos) << msg;
}

TEST(Detections, NullYawAndOptionalSizes) {
  const auto d = parse_detections(
      R"({"frames": [{"frame_id": 0, "objects": [{"x": 1.5, "y": 2, "yaw": null, "confidence": 0.4}]}]})");
  ASSERT_EQ(d.size(), 1u);
  ASSERT_EQ(d[0].detections.size(), 1u);
  EXPECT_FALSE(d[0].detections[0].yaw.has_value());
  EXPECT_FALSE(d[0].detections[0].has_box());
  const auto back = parse_detections(detections_to_json(d));
  EXPECT_FALSE(back[0].detections[0].yaw.has_value());
  EXPECT_EQ(back[0].detections[0].confidence, 0.4);

  EXPECT_MVBEV_ERROR(
      parse_detections(R"({"frames": [{"frame_id": 0, "objects": [{"x": 1, "y": 2, "confidence": 1.5}]}]})"),
      ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(parse_detections(R"({"frames": [{"frame_id": 0, "objects": [{"x": 1, "y": 2}]}]})"),
                     ErrorCode::ParseError);
}

TEST(Detections, NonFiniteRefusedOnWrite) {
  DetectionSet s;
  Detection d;
  d.x = std::nan("");
  s.detections.push_back(d);
  const std::vector<DetectionSet> sets{s};
  EXPECT_THROW(detections_to_json(sets), Error);
}

TEST(Grid, RoundTripIsBitExact) {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n(0.0, 1e3);
  FeatureGrid g(7, 5, 3, GridFrame::image(4));
  for (double& v : g.data()) v = n(rng);
  g.at(0, 0, 0) = -0.0;
  g.at(1, 1, 1) = 5e-324;
  const fs::path dir = scratch_dir("grid");
  write_grid(dir / "g.json", g);
  EXPECT_TRUE(fs::exists(dir / "g.bin"));
  EXPECT_EQ(fs::file_size(dir / "g.bin"), 7u * 5u * 3u * 8u);
  const FeatureGrid back = read_grid(dir / "g.json");
  EXPECT_EQ(back.frame(), GridFrame::image(4));
  EXPECT_TRUE(back == g);
  EXPECT_TRUE(std::signbit(back.at(0, 0, 0)));

  // Truncated payload.
  fs::resize_file(dir / "g.bin", 16);
  EXPECT_THROW(read_grid(dir / "g.json"), Error);
}

TEST(Evaluate, FixtureFiles) {
  const MetricsReport perfect = evaluate_files(kFixtures / "gt_perfect.json", kFixtures / "det_perfect.json");
  EXPECT_DOUBLE_EQ(perfect.moda, 1.0);
  EXPECT_EQ(perfect.tp, 3);
  const MetricsReport oracle = evaluate_files(kFixtures / "gt_oracle.json", kFixtures / "det_oracle.json");
  EXPECT_EQ(oracle.tp, 2);
  EXPECT_EQ(oracle.fp, 1);
  EXPECT_EQ(oracle.fn, 1);
  EXPECT_NEAR(oracle.moda, 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(oracle.modp, 0.75, 1e-12);
  const std::string js = report_to_json(oracle);
  EXPECT_NE(js.find("\"moda\""), std::string::npos);
}

TEST(RunConfigFile, LoadsAndResolvesPaths) {
  const RunConfig cfg = load_run_config(kFixtures / "run.json");
  EXPECT_EQ(cfg.calibration, kFixtures / "calibration.json");
  EXPECT_EQ(cfg.n_bins, 12);
  EXPECT_DOUBLE_EQ(cfg.match_radius, 0.4);
  EXPECT_DOUBLE_EQ(cfg.anchor_w, 0.7);
  EXPECT_DOUBLE_EQ(cfg.anchor_l, 0.5);
  EXPECT_EQ(cfg.seed, 11u);
  EXPECT_DOUBLE_EQ(cfg.fusion_nms, 0.3);
  EXPECT_DOUBLE_EQ(cfg.lambda_ppn, 3.0);
  cfg.check_paths();

  const RunConfig again = parse_run_config(run_config_to_json(cfg), kFixtures);
  EXPECT_EQ(again.n_bins, cfg.n_bins);
  EXPECT_EQ(again.calibration, cfg.calibration);
}

TEST(RunConfigFile, Rejections) {
  EXPECT_MVBEV_ERROR(parse_run_config(R"({"bins": 8})"), ErrorCode::ParseError);
  EXPECT_MVBEV_ERROR(parse_run_config(R"({"n_bins": 1})").validate(), ErrorCode::InvalidArgument);
  EXPECT_MVBEV_ERROR(parse_run_config(R"({"match_radius": -1})").validate(), ErrorCode::InvalidArgument);
  EXPECT_MVBEV_ERROR(parse_run_config(R"({"calibration": "nope.json"})", kFixtures).check_paths(),
                     ErrorCode::IOError);
}

}  // namespace
}  // namespace mvbev
