#include "mvbev/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mvbev/error.hpp"
#include "mvbev/orientation.hpp"

namespace mvbev {
namespace {

using json = nlohmann::json;

[[noreturn]] void parse_fail(const std::string& source, const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, source + ": " + path + ": " + what);
}

json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, source + ": " + e.what());
  }
}

struct Reader {
  const std::string& source;

  const json& field(const json& obj, const std::string& path, const char* key) const {
    if (!obj.is_object()) parse_fail(source, path, "expected object");
    auto it = obj.find(key);
    if (it == obj.end()) parse_fail(source, join(path, key), "missing field");
    return *it;
  }
  const json* optional(const json& obj, const char* key) const {
    auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
  }
  double number(const json& j, const std::string& path) const {
    if (!j.is_number()) parse_fail(source, path, "expected number");
    const double v = j.get<double>();
    if (!std::isfinite(v)) parse_fail(source, path, "non-finite number");
    return v;
  }
  int integer(const json& j, const std::string& path) const {
    if (!j.is_number_integer()) parse_fail(source, path, "expected integer");
    return j.get<int>();
  }
  std::vector<double> numbers(const json& j, const std::string& path, std::size_t n) const {
    if (!j.is_array()) parse_fail(source, path, "expected array");
    if (j.size() != n) parse_fail(source, path, "expected " + std::to_string(n) + " numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < n; ++i) out.push_back(number(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
  }
  const json& array(const json& j, const std::string& path) const {
    if (!j.is_array()) parse_fail(source, path, "expected array");
    return j;
  }
  static std::string join(const std::string& path, const char* key) {
    return path.empty() ? std::string(key) : path + "." + key;
  }
  static std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }
};

template <typename Frame>
void check_frame_order(const std::vector<Frame>& frames, const std::string& source) {
  for (std::size_t i = 1; i < frames.size(); ++i) {
    if (frames[i].frame_id <= frames[i - 1].frame_id) {
      parse_fail(source, "frames[" + std::to_string(i) + "].frame_id",
                 "frame ids must be strictly increasing (got " + std::to_string(frames[i].frame_id) +
                     " after " + std::to_string(frames[i - 1].frame_id) + ")");
    }
  }
}

double checked_yaw(const Reader& rd, const json& j, const std::string& path) {
  const double yaw = rd.number(j, path);
  if (yaw < 0.0 || yaw >= kTwoPi) parse_fail(rd.source, path, "yaw must lie in [0, 2pi)");
  return yaw;
}

json matrix_json(const Eigen::Matrix3d& m) {
  json out = json::array();
  for (int r = 0; r < 3; ++r)
    for (int c = 0; c < 3; ++c) out.push_back(m(r, c));
  return out;
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, std::string("cannot serialize non-finite ") + what);
}

}  // namespace

CalibrationFile parse_calibration(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader rd{source};
  CalibrationFile out;
  const json& site = rd.field(doc, "", "site");
  out.site_x = rd.number(rd.field(site, "site", "x"), "site.x");
  out.site_y = rd.number(rd.field(site, "site", "y"), "site.y");
  out.plane_altitude = rd.number(rd.field(doc, "", "plane_altitude"), "plane_altitude");
  const json& cams = rd.array(rd.field(doc, "", "cameras"), "cameras");
  for (std::size_t i = 0; i < cams.size(); ++i) {
    const std::string path = Reader::at("cameras", i);
    const json& cj = cams[i];
    CameraModel cam;
    cam.view_id = rd.integer(rd.field(cj, path, "view_id"), path + ".view_id");
    const auto k = rd.numbers(rd.field(cj, path, "K"), path + ".K", 9);
    const auto r = rd.numbers(rd.field(cj, path, "R"), path + ".R", 9);
    const auto t = rd.numbers(rd.field(cj, path, "T"), path + ".T", 3);
    const json& size = rd.array(rd.field(cj, path, "image_size"), path + ".image_size");
    if (size.size() != 2) parse_fail(source, path + ".image_size", "expected [width, height]");
    cam.width = rd.integer(size[0], path + ".image_size[0]");
    cam.height = rd.integer(size[1], path + ".image_size[1]");
    for (int a = 0; a < 3; ++a) {
      for (int b = 0; b < 3; ++b) {
        cam.K(a, b) = k[a * 3 + b];
        cam.R(a, b) = r[a * 3 + b];
      }
      cam.T(a) = t[a];
    }
    out.cameras.push_back(cam);
  }
  std::stable_sort(out.cameras.begin(), out.cameras.end(),
                   [](const CameraModel& a, const CameraModel& b) { return a.view_id < b.view_id; });

  std::string violations;
  for (std::size_t i = 0; i < out.cameras.size(); ++i) {
    if (i > 0 && out.cameras[i].view_id == out.cameras[i - 1].view_id) {
      violations += "; view_id " + std::to_string(out.cameras[i].view_id) + ": duplicate view_id";
    }
    for (const auto& v : validate_camera(out.cameras[i])) {
      violations += "; view_id " + std::to_string(out.cameras[i].view_id) + ": " + v;
    }
  }
  if (!(out.site_x > 0.0) || !(out.site_y > 0.0)) violations += "; site extent must be positive";
  if (!violations.empty()) throw Error(ErrorCode::ValidationError, source + violations);
  return out;
}

std::vector<FrameAnnotations> parse_annotations(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader rd{source};
  const json& frames = rd.array(rd.field(doc, "", "frames"), "frames");
  std::vector<FrameAnnotations> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fpath = Reader::at("frames", f);
    FrameAnnotations fa;
    fa.frame_id = rd.integer(rd.field(frames[f], fpath, "frame_id"), fpath + ".frame_id");
    const json& objs = rd.array(rd.field(frames[f], fpath, "objects"), fpath + ".objects");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string p = Reader::at(fpath + ".objects", i);
      const json& o = objs[i];
      AnnotatedObject a;
      a.position.x = rd.number(rd.field(o, p, "x"), p + ".x");
      a.position.y = rd.number(rd.field(o, p, "y"), p + ".y");
      if (const json* z = rd.optional(o, "z")) a.position.z = rd.number(*z, p + ".z");
      a.yaw = checked_yaw(rd, rd.field(o, p, "yaw"), p + ".yaw");
      a.length = rd.number(rd.field(o, p, "l"), p + ".l");
      a.width = rd.number(rd.field(o, p, "w"), p + ".w");
      a.height = rd.number(rd.field(o, p, "h"), p + ".h");
      if (!(a.length > 0.0) || !(a.width > 0.0) || !(a.height > 0.0)) {
        parse_fail(source, p, "object size must be positive");
      }
      fa.objects.push_back(a);
    }
    out.push_back(std::move(fa));
  }
  check_frame_order(out, source);
  return out;
}

std::vector<DetectionSet> parse_detections(const std::string& text, const std::string& source) {
  const json doc = parse_json(text, source);
  const Reader rd{source};
  const json& frames = rd.array(rd.field(doc, "", "frames"), "frames");
  std::vector<DetectionSet> out;
  for (std::size_t f = 0; f < frames.size(); ++f) {
    const std::string fpath = Reader::at("frames", f);
    DetectionSet ds;
    ds.frame_id = rd.integer(rd.field(frames[f], fpath, "frame_id"), fpath + ".frame_id");
    const json& objs = rd.array(rd.field(frames[f], fpath, "objects"), fpath + ".objects");
    for (std::size_t i = 0; i < objs.size(); ++i) {
      const std::string p = Reader::at(fpath + ".objects", i);
      const json& o = objs[i];
      Detection d;
      d.x = rd.number(rd.field(o, p, "x"), p + ".x");
      d.y = rd.number(rd.field(o, p, "y"), p + ".y");
      if (const json* y = rd.optional(o, "yaw")) d.yaw = checked_yaw(rd, *y, p + ".yaw");
      if (const json* v = rd.optional(o, "l")) d.length = rd.number(*v, p + ".l");
      if (const json* v = rd.optional(o, "w")) d.width = rd.number(*v, p + ".w");
      if (const json* v = rd.optional(o, "h")) d.height = rd.number(*v, p + ".h");
      if (d.length < 0.0 || d.width < 0.0 || d.height < 0.0) parse_fail(source, p, "negative object size");
      d.confidence = rd.number(rd.field(o, p, "confidence"), p + ".confidence");
      if (d.confidence < 0.0 || d.confidence > 1.0) parse_fail(source, p + ".confidence", "must lie in [0, 1]");
      ds.detections.push_back(d);
    }
    out.push_back(std::move(ds));
  }
  check_frame_order(out, source);
  return out;
}

std::string calibration_to_json(const CalibrationFile& calib) {
  json doc;
  doc["site"] = {{"x", calib.site_x}, {"y", calib.site_y}};
  doc["plane_altitude"] = calib.plane_altitude;
  doc["cameras"] = json::array();
  for (const auto& cam : calib.cameras) {
    json cj;
    cj["view_id"] = cam.view_id;
    cj["K"] = matrix_json(cam.K);
    cj["R"] = matrix_json(cam.R);
    cj["T"] = {cam.T.x(), cam.T.y(), cam.T.z()};
    cj["image_size"] = {cam.width, cam.height};
    doc["cameras"].push_back(cj);
  }
  return doc.dump(2) + "\n";
}

std::string annotations_to_json(std::span<const FrameAnnotations> frames) {
  json doc;
  doc["frames"] = json::array();
  for (const auto& f : frames) {
    json fj;
    fj["frame_id"] = f.frame_id;
    fj["objects"] = json::array();
    for (const auto& o : f.objects) {
      for (double v : {o.position.x, o.position.y, o.position.z, o.yaw, o.length, o.width, o.height}) {
        check_finite(v, "annotation value");
      }
      json oj;
      oj["x"] = o.position.x;
      oj["y"] = o.position.y;
      if (o.position.z != 0.0) oj["z"] = o.position.z;
      oj["yaw"] = o.yaw;
      oj["l"] = o.length;
      oj["w"] = o.width;
      oj["h"] = o.height;
      fj["objects"].push_back(oj);
    }
    doc["frames"].push_back(fj);
  }
  return doc.dump(2) + "\n";
}

std::string detections_to_json(std::span<const DetectionSet> sets) {
  json doc;
  doc["frames"] = json::array();
  for (const auto& s : sets) {
    json fj;
    fj["frame_id"] = s.frame_id;
    fj["objects"] = json::array();
    for (const auto& d : s.detections) {
      for (double v : {d.x, d.y, d.yaw.value_or(0.0), d.length, d.width, d.height, d.confidence}) {
        check_finite(v, "detection value");
      }
      json oj;
      oj["x"] = d.x;
      oj["y"] = d.y;
      oj["yaw"] = d.yaw ? json(*d.yaw) : json(nullptr);
      oj["l"] = d.length;
      oj["w"] = d.width;
      oj["h"] = d.height;
      oj["confidence"] = d.confidence;
      fj["objects"].push_back(oj);
    }
    doc["frames"].push_back(fj);
  }
  return doc.dump(2) + "\n";
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IOError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + path.string());
  out << text;
  if (!out) throw Error(ErrorCode::IOError, "write failed for " + path.string());
}

CalibrationFile load_calibration_file(const std::filesystem::path& path) {
  return parse_calibration(read_text_file(path), path.string());
}

std::vector<CameraModel> load_calibration(const std::filesystem::path& path) {
  return load_calibration_file(path).cameras;
}

std::vector<FrameAnnotations> load_annotations(const std::filesystem::path& path) {
  return parse_annotations(read_text_file(path), path.string());
}

std::vector<DetectionSet> load_detections(const std::filesystem::path& path) {
  return parse_detections(read_text_file(path), path.string());
}

void write_calibration(const std::filesystem::path& path, const CalibrationFile& calib) {
  write_text_file(path, calibration_to_json(calib));
}

void write_annotations(const std::filesystem::path& path, std::span<const FrameAnnotations> frames) {
  write_text_file(path, annotations_to_json(frames));
}

void write_detections(const std::filesystem::path& path, std::span<const DetectionSet> sets) {
  write_text_file(path, detections_to_json(sets));
}

namespace {

void to_little_endian(std::vector<unsigned char>& bytes) {
  if constexpr (std::endian::native == std::endian::big) {
    for (std::size_t i = 0; i + 8 <= bytes.size(); i += 8) std::reverse(bytes.begin() + i, bytes.begin() + i + 8);
  }
}

}  // namespace

void write_grid(const std::filesystem::path& header_path, const FeatureGrid& grid) {
  std::filesystem::path bin = header_path;
  bin.replace_extension(".bin");
  json header;
  header["shape"] = {grid.rows(), grid.cols(), grid.channels()};
  header["frame"] = grid.frame().to_string();
  header["dtype"] = "float64";
  header["byte_order"] = "little";
  header["layout"] = "row-major";
  header["data"] = bin.filename().string();
  write_text_file(header_path, header.dump(2) + "\n");

  const auto data = grid.data();
  std::vector<unsigned char> bytes(data.size() * sizeof(double));
  if (!bytes.empty()) std::memcpy(bytes.data(), data.data(), bytes.size());
  to_little_endian(bytes);
  std::ofstream out(bin, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IOError, "cannot write " + bin.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::IOError, "write failed for " + bin.string());
}

FeatureGrid read_grid(const std::filesystem::path& header_path) {
  const std::string source = header_path.string();
  const json header = parse_json(read_text_file(header_path), source);
  const Reader rd{source};
  const json& shape = rd.array(rd.field(header, "", "shape"), "shape");
  if (shape.size() != 3) parse_fail(source, "shape", "expected [rows, cols, channels]");
  const int rows = rd.integer(shape[0], "shape[0]");
  const int cols = rd.integer(shape[1], "shape[1]");
  const int channels = rd.integer(shape[2], "shape[2]");
  const json& dtype = rd.field(header, "", "dtype");
  if (!dtype.is_string() || dtype.get<std::string>() != "float64") parse_fail(source, "dtype", "expected \"float64\"");
  if (const json* order = rd.optional(header, "byte_order")) {
    if (!order->is_string() || order->get<std::string>() != "little") {
      parse_fail(source, "byte_order", "expected \"little\"");
    }
  }
  const json& frame_j = rd.field(header, "", "frame");
  if (!frame_j.is_string()) parse_fail(source, "frame", "expected string");
  GridFrame frame;
  try {
    frame = GridFrame::parse(frame_j.get<std::string>());
  } catch (const Error& e) {
    parse_fail(source, "frame", e.what());
  }
  const json& data_j = rd.field(header, "", "data");
  if (!data_j.is_string()) parse_fail(source, "data", "expected file name");
  if (rows < 0 || cols < 0 || channels < 0) parse_fail(source, "shape", "negative dimension");

  const std::filesystem::path bin = header_path.parent_path() / data_j.get<std::string>();
  const std::string raw = read_text_file(bin);
  const std::size_t n = static_cast<std::size_t>(rows) * cols * channels;
  if (raw.size() != n * sizeof(double)) {
    throw Error(ErrorCode::ShapeMismatch, bin.string() + ": expected " + std::to_string(n * sizeof(double)) +
                                              " bytes, found " + std::to_string(raw.size()));
  }
  std::vector<unsigned char> bytes(raw.begin(), raw.end());
  to_little_endian(bytes);
  std::vector<double> values(n);
  if (n > 0) std::memcpy(values.data(), bytes.data(), bytes.size());
  return FeatureGrid(rows, cols, channels, frame, std::move(values));
}

std::string report_to_json(const MetricsReport& report) {
  json doc;
  doc["moda"] = report.moda;
  doc["modp"] = report.modp;
  doc["precision"] = report.precision;
  doc["recall"] = report.recall;
  doc["tp"] = report.tp;
  doc["fp"] = report.fp;
  doc["fn"] = report.fn;
  doc["num_gt"] = report.num_gt;
  doc["ap"] = json::array();
  for (const auto& a : report.ap) {
    doc["ap"].push_back({{"iou_threshold", a.iou_threshold},
                         {"ap3d", a.ap3d},
                         {"aos", a.aos_available ? json(a.aos) : json(nullptr)},
                         {"os", a.os_undefined ? json(nullptr) : json(a.os)},
                         {"tp", a.tp},
                         {"fp", a.fp},
                         {"num_gt", a.num_gt}});
  }
  doc["frames"] = json::array();
  for (const auto& f : report.frames) {
    doc["frames"].push_back({{"frame_id", f.frame_id}, {"gt", f.gt}, {"tp", f.tp}, {"fp", f.fp}, {"fn", f.fn}});
  }
  doc["flags"] = report.flags;
  return doc.dump(2) + "\n";
}

MetricsReport evaluate_files(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const EvalOptions& options) {
  const auto gt = load_annotations(gt_path);
  const auto det = load_detections(det_path);
  return evaluate(gt, det, options);
}

}  // namespace mvbev
