#include "mvbev/cli.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>

#include <CLI11.hpp>

#include "mvbev/bev_transform.hpp"
#include "mvbev/config.hpp"
#include "mvbev/dataset_io.hpp"
#include "mvbev/error.hpp"
#include "mvbev/losses.hpp"
#include "mvbev/metrics.hpp"
#include "mvbev/sim.hpp"

namespace mvbev {
namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

const CameraModel& camera_by_id(const std::vector<CameraModel>& cams, int view_id) {
  for (const auto& c : cams)
    if (c.view_id == view_id) return c;
  throw Error(ErrorCode::InvalidArgument, "no camera with view_id " + std::to_string(view_id));
}

// Options shared by subcommands; each is applied over the config file only when given.
struct Common {
  std::string config;
  std::string calib;
  std::uint64_t seed = 0;
  double radius = 0.5;
  int n_bins = 8;
  double position_nms = 0.3;
  double fusion_nms = 0.3;
  std::vector<double> anchor;
  CLI::Option* seed_opt = nullptr;
  std::vector<CLI::Option*> calib_opts;  // one per subcommand taking --calib
  CLI::Option* radius_opt = nullptr;
  CLI::Option* bins_opt = nullptr;
  CLI::Option* pnms_opt = nullptr;
  CLI::Option* fnms_opt = nullptr;
  CLI::Option* anchor_opt = nullptr;

  RunConfig resolve() const {
    RunConfig cfg;
    if (!config.empty()) cfg = load_run_config(config);
    for (const auto* o : calib_opts)
      if (o->count()) cfg.calibration = calib;
    if (seed_opt && seed_opt->count()) cfg.seed = seed;
    if (radius_opt && radius_opt->count()) cfg.match_radius = radius;
    if (bins_opt && bins_opt->count()) cfg.n_bins = n_bins;
    if (pnms_opt && pnms_opt->count()) cfg.position_nms = position_nms;
    if (fnms_opt && fnms_opt->count()) cfg.fusion_nms = fusion_nms;
    if (anchor_opt && anchor_opt->count()) {
      cfg.anchor_w = anchor[0];
      cfg.anchor_l = anchor[1];
    }
    cfg.validate();
    cfg.check_paths();
    return cfg;
  }
};

PipelineParams pipeline_params(const RunConfig& cfg) {
  PipelineParams p;
  p.grid = cfg.grid;
  p.anchor_w = cfg.anchor_w;
  p.anchor_l = cfg.anchor_l;
  p.n_bins = cfg.n_bins;
  p.position_nms = cfg.position_nms;
  p.fusion_nms = cfg.fusion_nms;
  return p;
}

fs::path need(const fs::path& p, const char* what) {
  if (p.empty()) throw UsageError(std::string("missing ") + what);
  return p;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multi-view BEV geometry, codecs, metrics and simulator", "mvbev"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  Common common;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Run configuration JSON (flags override it)");
  };
  auto add_calib = [&](CLI::App* sub) {
    common.calib_opts.push_back(sub->add_option("--calib", common.calib, "Calibration JSON"));
  };

  // project
  auto* project = app.add_subcommand("project", "Project a world point, or back-project a pixel to the plane");
  add_config(project);
  add_calib(project);
  int view_id = 0;
  std::vector<double> point;
  std::vector<double> pixel;
  double plane = 0.0;
  project->add_option("--view", view_id, "Camera view_id");
  auto* point_opt = project->add_option("--point", point, "World point X Y Z")->expected(3);
  auto* pixel_opt = project->add_option("--pixel", pixel, "Pixel U V")->expected(2);
  auto* plane_opt = project->add_option("--plane", plane, "Plane altitude (default: calibration value)");
  point_opt->excludes(pixel_opt);

  // warp
  auto* warp = app.add_subcommand("warp", "Warp an image-frame grid onto the BEV plane");
  add_config(warp);
  add_calib(warp);
  std::string warp_in;
  std::string warp_out;
  int threads = 1;
  warp->add_option("--in", warp_in, "Input grid header (image frame)")->required();
  warp->add_option("--out", warp_out, "Output grid header")->required();
  warp->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Generate seeded scenes and run the geometric pipeline");
  add_config(simulate);
  common.seed_opt = simulate->add_option("--seed", common.seed, "Random seed");
  int frames = 10;
  int objects = 4;
  std::string sim_out;
  NoiseConfig noise;
  bool write_views = false;
  bool no_obstacles = false;
  std::vector<int> disable;
  simulate->add_option("--frames", frames, "Number of frames")->check(CLI::NonNegativeNumber);
  simulate->add_option("--objects", objects, "Objects per frame")->check(CLI::NonNegativeNumber);
  auto* sim_out_opt = simulate->add_option("--out", sim_out, "Output directory");
  simulate->add_option("--noise-pos", noise.position_sigma, "Position noise sigma (m)");
  simulate->add_option("--noise-yaw", noise.yaw_sigma, "Yaw noise sigma (rad)");
  simulate->add_option("--noise-pixel", noise.pixel_sigma, "Pixel noise sigma");
  simulate->add_option("--disable-view", disable, "Exclude these view_ids from the pipeline");
  simulate->add_flag("--views", write_views, "Also write the rendered view grids");
  simulate->add_flag("--no-obstacles", no_obstacles, "Remove all obstacles");

  // fuse
  auto* fuse = app.add_subcommand("fuse", "Warp and fuse view grids; optionally detect");
  add_config(fuse);
  add_calib(fuse);
  std::vector<std::string> fuse_views_in;
  std::string fuse_out;
  std::string fuse_det;
  std::string mode_name = "concat";
  int frame_id = 0;
  fuse->add_option("--views", fuse_views_in, "View grid headers")->required();
  fuse->add_option("--out", fuse_out, "Fused BEV grid header");
  fuse->add_option("--detections", fuse_det, "Write detections from the geometric pipeline");
  fuse->add_option("--mode", mode_name, "concat, sum or max")->check(CLI::IsMember({"concat", "sum", "max"}));
  fuse->add_option("--frame", frame_id, "Frame id for written detections");

  // eval
  auto* eval = app.add_subcommand("eval", "Evaluate detections against ground truth");
  add_config(eval);
  std::string gt_path;
  std::string det_path;
  std::string json_out;
  double iou = 0.0;
  bool ap40 = false;
  eval->add_option("--gt", gt_path, "Annotation JSON");
  eval->add_option("--det", det_path, "Detection JSON");
  common.radius_opt = eval->add_option("--radius", common.radius, "Match radius (m)")->check(CLI::PositiveNumber);
  auto* iou_opt = eval->add_option("--iou", iou, "Match on rotated IoU >= this instead of distance");
  iou_opt->excludes(common.radius_opt);
  eval->add_flag("--ap40", ap40, "40-point interpolated AP instead of 11-point");
  eval->add_option("--json", json_out, "Also write the report as JSON");

  // losscheck
  auto* losscheck = app.add_subcommand("losscheck", "Finite-difference gradient check of all losses");
  add_config(losscheck);
  std::uint64_t lc_seed = 0;
  int points = 100;
  double tol = 1e-5;
  auto* lc_seed_opt = losscheck->add_option("--seed", lc_seed, "Random seed");
  losscheck->add_option("--points", points, "Random points per loss")->check(CLI::PositiveNumber);
  losscheck->add_option("--tol", tol, "Pass threshold on max relative error");

  std::map<CLI::App*, std::array<CLI::Option*, 4>> pipeline_flags;
  for (auto* sub : {simulate, fuse}) {
    pipeline_flags[sub] = {
        sub->add_option("--bins", common.n_bins, "Orientation bins")->check(CLI::Range(2, 360)),
        sub->add_option("--position-nms", common.position_nms, "Position NMS threshold"),
        sub->add_option("--fusion-nms", common.fusion_nms, "Cross-view orientation NMS threshold"),
        sub->add_option("--anchor", common.anchor, "Anchor size W L")->expected(2)};
  }

  try {
    std::vector<std::string> rev(args.size() > 1 ? args.begin() + 1 : args.end(), args.end());
    std::reverse(rev.begin(), rev.end());
    app.name(args.empty() ? "mvbev" : fs::path(args[0]).filename().string());
    app.parse(rev);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "usage: " << e.what() << "\n";
    err << "usage: run with --help for the list of subcommands and flags\n";
    return kExitUsage;
  }
  for (const auto& [sub, opts] : pipeline_flags) {
    if (!sub->parsed()) continue;
    common.bins_opt = opts[0];
    common.pnms_opt = opts[1];
    common.fnms_opt = opts[2];
    common.anchor_opt = opts[3];
  }

  try {
    if (project->parsed()) {
      const RunConfig cfg = common.resolve();
      const CalibrationFile calib = load_calibration_file(need(cfg.calibration, "--calib"));
      const CameraModel& cam = camera_by_id(calib.cameras, view_id);
      if (point_opt->count()) {
        const PixelHomogeneous px = project_point(cam, {point[0], point[1], point[2]});
        out << fmt17(px.u) << " " << fmt17(px.v) << "\n";
      } else if (pixel_opt->count()) {
        const double z = plane_opt->count() ? plane : calib.plane_altitude;
        const WorldPoint w = backproject_to_plane(cam, {pixel[0], pixel[1], 1.0}, z);
        out << fmt17(w.x) << " " << fmt17(w.y) << " " << fmt17(w.z) << "\n";
      } else {
        throw UsageError("project needs --point or --pixel");
      }
    } else if (warp->parsed()) {
      const RunConfig cfg = common.resolve();
      const auto cams = load_calibration(need(cfg.calibration, "--calib"));
      const FeatureGrid feat = read_grid(warp_in);
      if (feat.frame().kind != GridFrame::Kind::Image) {
        throw Error(ErrorCode::ShapeMismatch, warp_in + ": expected an image-frame grid");
      }
      const FeatureGrid bev =
          warp_view_to_bev(feat, camera_by_id(cams, feat.frame().view_id), cfg.grid, WarpOptions{threads});
      write_grid(warp_out, bev);
    } else if (simulate->parsed()) {
      RunConfig cfg = common.resolve();
      if (sim_out_opt->count()) cfg.output_dir = sim_out;
      const fs::path dir = need(cfg.output_dir, "--out");
      SceneConfig scfg = SceneConfig::default_site(cfg.seed);
      scfg.n_objects = objects;
      scfg.noise = noise;
      scfg.plane_altitude = cfg.grid.plane_altitude;
      if (no_obstacles) scfg.obstacles.clear();
      scfg.validate();
      const PipelineParams params = pipeline_params(cfg);

      for (int id : disable) {
        if (std::none_of(scfg.cameras.begin(), scfg.cameras.end(), [&](const CameraModel& c) { return c.view_id == id; }))
          throw Error(ErrorCode::InvalidArgument, "--disable-view: no camera with view_id " + std::to_string(id));
      }
      std::vector<CameraModel> active;
      std::vector<std::size_t> active_idx;
      for (std::size_t v = 0; v < scfg.cameras.size(); ++v) {
        if (std::find(disable.begin(), disable.end(), scfg.cameras[v].view_id) != disable.end()) continue;
        active.push_back(scfg.cameras[v]);
        active_idx.push_back(v);
      }

      fs::create_directories(dir);
      if (write_views) fs::create_directories(dir / "views");
      std::vector<FrameAnnotations> truth;
      std::vector<DetectionSet> dets;
      for (int f = 0; f < frames; ++f) {
        Scene scene = generate_scene(scfg, f);
        std::vector<FeatureGrid> views;
        for (std::size_t k : active_idx) views.push_back(scene.views[k]);
        dets.push_back(run_geometric_pipeline(views, active, params, f));
        if (write_views) {
          for (std::size_t v = 0; v < scene.views.size(); ++v) {
            char name[64];
            std::snprintf(name, sizeof name, "frame_%06d_view_%d.json", f, scfg.cameras[v].view_id);
            write_grid(dir / "views" / name, scene.views[v]);
          }
        }
        truth.push_back(std::move(scene.truth));
      }
      CalibrationFile calib{scfg.cameras, scfg.site_x, scfg.site_y, scfg.plane_altitude};
      write_calibration(dir / "calibration.json", calib);
      write_annotations(dir / "annotations.json", truth);
      write_detections(dir / "detections.json", dets);
      out << "wrote " << frames << " frames to " << dir.string() << "\n";
    } else if (fuse->parsed()) {
      const RunConfig cfg = common.resolve();
      if (fuse_out.empty() && fuse_det.empty()) throw UsageError("fuse needs --out and/or --detections");
      const auto cams = load_calibration(need(cfg.calibration, "--calib"));
      std::vector<FeatureGrid> views;
      std::vector<CameraModel> view_cams;
      std::vector<int> ids;
      for (const auto& path : fuse_views_in) {
        FeatureGrid g = read_grid(path);
        if (g.frame().kind != GridFrame::Kind::Image) {
          throw Error(ErrorCode::ShapeMismatch, path + ": expected an image-frame grid");
        }
        view_cams.push_back(camera_by_id(cams, g.frame().view_id));
        ids.push_back(g.frame().view_id);
        views.push_back(std::move(g));
      }
      if (!fuse_out.empty()) {
        std::vector<FeatureGrid> warped;
        for (std::size_t i = 0; i < views.size(); ++i) {
          warped.push_back(warp_view_to_bev(views[i], view_cams[i], cfg.grid));
        }
        const std::map<std::string, FuseMode> modes{
            {"concat", FuseMode::Concat}, {"sum", FuseMode::Sum}, {"max", FuseMode::Max}};
        write_grid(fuse_out, fuse_views(warped, ids, coordinate_maps(cfg.grid), modes.at(mode_name)));
      }
      if (!fuse_det.empty()) {
        const std::vector<DetectionSet> sets{run_geometric_pipeline(views, view_cams, pipeline_params(cfg), frame_id)};
        write_detections(fuse_det, sets);
      }
    } else if (eval->parsed()) {
      RunConfig cfg = common.resolve();
      if (!gt_path.empty()) cfg.annotations = gt_path;
      if (!det_path.empty()) cfg.detections = det_path;
      EvalOptions opts;
      opts.criterion = iou_opt->count() ? MatchCriterion::rotated_iou(iou) : MatchCriterion::distance(cfg.match_radius);
      opts.iou_thresholds = cfg.iou_thresholds;
      opts.interpolation = ap40 ? ApInterpolation::Points40 : ApInterpolation::Points11;
      const MetricsReport report =
          evaluate_files(need(cfg.annotations, "--gt"), need(cfg.detections, "--det"), opts);
      out << format_table(report);
      if (!json_out.empty()) write_text_file(json_out, report_to_json(report));
    } else if (losscheck->parsed()) {
      RunConfig cfg = common.resolve();
      if (lc_seed_opt->count()) cfg.seed = lc_seed;
      const GradientCheckReport r = run_gradient_check(cfg.seed, points);
      out << "points " << r.points << "\n";
      out << "smooth_l1 " << fmt17(r.smooth_l1) << "\n";
      out << "softmax_ce " << fmt17(r.softmax_ce) << "\n";
      out << "cosine " << fmt17(r.cosine) << "\n";
      out << "ppn " << fmt17(r.ppn) << "\n";
      out << "mbon " << fmt17(r.mbon) << "\n";
      out << "max_rel_error " << fmt17(r.max()) << "\n";
      if (!(r.max() < tol)) {
        err << "error: gradient check exceeded tolerance " << fmt17(tol) << "\n";
        return kExitData;
      }
    }
  } catch (const UsageError& e) {
    err << "usage: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitOk;
}

int run_cli(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args, std::cout, std::cerr);
}

}  // namespace mvbev
