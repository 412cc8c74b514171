#include "mvbev/config.hpp"

#include <cmath>

#include <json.hpp>

#include "mvbev/dataset_io.hpp"
#include "mvbev/error.hpp"

namespace mvbev {
namespace {

using json = nlohmann::json;

[[noreturn]] void fail(const std::string& source, const std::string& key, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": " + key + ": " + what);
}

double num(const json& j, const std::string& source, const std::string& key) {
  if (!j.is_number()) fail(source, key, "expected number");
  return j.get<double>();
}

int integer(const json& j, const std::string& source, const std::string& key) {
  if (!j.is_number_integer()) fail(source, key, "expected integer");
  return j.get<int>();
}

std::filesystem::path path_value(const json& j, const std::filesystem::path& base, const std::string& source,
                                 const std::string& key) {
  if (!j.is_string()) fail(source, key, "expected string");
  std::filesystem::path p = j.get<std::string>();
  if (p.is_relative() && !base.empty()) p = base / p;
  return p;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorCode::InvalidArgument, what);
}

}  // namespace

void RunConfig::validate() const {
  grid.validate();
  require(anchor_w > 0.0 && anchor_l > 0.0, "anchor size must be positive");
  require(n_bins >= 2, "n_bins must be >= 2");
  require(position_nms >= 0.0 && position_nms <= 1.0, "position_nms must lie in [0, 1]");
  require(fusion_nms >= 0.0 && fusion_nms <= 1.0, "fusion_nms must lie in [0, 1]");
  require(match_radius > 0.0, "match_radius must be positive");
  for (double t : iou_thresholds) require(t > 0.0 && t <= 1.0, "iou_thresholds must lie in (0, 1]");
  require(lambda_ppn >= 0.0 && lambda_ppn_2d >= 0.0 && lambda_mbon >= 0.0, "loss weights must be >= 0");
}

void RunConfig::check_paths() const {
  for (const auto* p : {&calibration, &annotations, &detections}) {
    if (!p->empty() && !std::filesystem::exists(*p)) {
      throw Error(ErrorCode::IOError, "no such file: " + p->string());
    }
  }
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir,
                           const std::string& source) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
  if (!doc.is_object()) fail(source, "<root>", "expected object");
  RunConfig cfg;
  for (const auto& [key, v] : doc.items()) {
    if (key == "calibration") {
      cfg.calibration = path_value(v, base_dir, source, key);
    } else if (key == "annotations") {
      cfg.annotations = path_value(v, base_dir, source, key);
    } else if (key == "detections") {
      cfg.detections = path_value(v, base_dir, source, key);
    } else if (key == "output_dir") {
      cfg.output_dir = path_value(v, base_dir, source, key);
    } else if (key == "grid") {
      if (!v.is_object()) fail(source, key, "expected object");
      for (const auto& [gk, gv] : v.items()) {
        const std::string path = "grid." + gk;
        if (gk == "origin_x") cfg.grid.origin_x = num(gv, source, path);
        else if (gk == "origin_y") cfg.grid.origin_y = num(gv, source, path);
        else if (gk == "extent_x") cfg.grid.extent_x = num(gv, source, path);
        else if (gk == "extent_y") cfg.grid.extent_y = num(gv, source, path);
        else if (gk == "rows") cfg.grid.rows = integer(gv, source, path);
        else if (gk == "cols") cfg.grid.cols = integer(gv, source, path);
        else if (gk == "plane_altitude") cfg.grid.plane_altitude = num(gv, source, path);
        else fail(source, path, "unknown key");
      }
    } else if (key == "anchor") {
      if (!v.is_array() || v.size() != 2) fail(source, key, "expected [w, l]");
      cfg.anchor_w = num(v[0], source, "anchor[0]");
      cfg.anchor_l = num(v[1], source, "anchor[1]");
    } else if (key == "n_bins") {
      cfg.n_bins = integer(v, source, key);
    } else if (key == "position_nms") {
      cfg.position_nms = num(v, source, key);
    } else if (key == "fusion_nms") {
      cfg.fusion_nms = num(v, source, key);
    } else if (key == "match_radius") {
      cfg.match_radius = num(v, source, key);
    } else if (key == "iou_thresholds") {
      if (!v.is_array()) fail(source, key, "expected array");
      cfg.iou_thresholds.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        cfg.iou_thresholds.push_back(num(v[i], source, key + "[" + std::to_string(i) + "]"));
      }
    } else if (key == "lambda_ppn") {
      cfg.lambda_ppn = num(v, source, key);
    } else if (key == "lambda_ppn_2d") {
      cfg.lambda_ppn_2d = num(v, source, key);
    } else if (key == "lambda_mbon") {
      cfg.lambda_mbon = num(v, source, key);
    } else if (key == "seed") {
      if (!v.is_number_unsigned()) fail(source, key, "expected non-negative integer");
      cfg.seed = v.get<std::uint64_t>();
    } else {
      fail(source, key, "unknown key");
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  RunConfig cfg = parse_run_config(read_text_file(path), path.parent_path(), path.string());
  cfg.check_paths();
  return cfg;
}

std::string run_config_to_json(const RunConfig& cfg) {
  json doc;
  if (!cfg.calibration.empty()) doc["calibration"] = cfg.calibration.string();
  if (!cfg.annotations.empty()) doc["annotations"] = cfg.annotations.string();
  if (!cfg.detections.empty()) doc["detections"] = cfg.detections.string();
  if (!cfg.output_dir.empty()) doc["output_dir"] = cfg.output_dir.string();
  doc["grid"] = {{"origin_x", cfg.grid.origin_x}, {"origin_y", cfg.grid.origin_y},
                 {"extent_x", cfg.grid.extent_x}, {"extent_y", cfg.grid.extent_y},
                 {"rows", cfg.grid.rows},         {"cols", cfg.grid.cols},
                 {"plane_altitude", cfg.grid.plane_altitude}};
  doc["anchor"] = {cfg.anchor_w, cfg.anchor_l};
  doc["n_bins"] = cfg.n_bins;
  doc["position_nms"] = cfg.position_nms;
  doc["fusion_nms"] = cfg.fusion_nms;
  doc["match_radius"] = cfg.match_radius;
  doc["iou_thresholds"] = cfg.iou_thresholds;
  doc["lambda_ppn"] = cfg.lambda_ppn;
  doc["lambda_ppn_2d"] = cfg.lambda_ppn_2d;
  doc["lambda_mbon"] = cfg.lambda_mbon;
  doc["seed"] = cfg.seed;
  return doc.dump(2) + "\n";
}

}  // namespace mvbev
