#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mvbev/feature_grid.hpp"
#include "mvbev/geometry.hpp"
#include "mvbev/metrics.hpp"

namespace mvbev {

struct CalibrationFile {
  std::vector<CameraModel> cameras;  // ascending view_id
  double site_x = 8.0;
  double site_y = 4.5;
  double plane_altitude = 0.0;
};

// Text-level parsers; `source` is used in error messages. Schema problems raise
// ParseError naming the field path (e.g. "cameras[1].T"); camera invariant
// violations raise ValidationError naming the view_id.
CalibrationFile parse_calibration(const std::string& text, const std::string& source = "<string>");
std::vector<FrameAnnotations> parse_annotations(const std::string& text, const std::string& source = "<string>");
std::vector<DetectionSet> parse_detections(const std::string& text, const std::string& source = "<string>");

std::string calibration_to_json(const CalibrationFile& calib);
std::string annotations_to_json(std::span<const FrameAnnotations> frames);
std::string detections_to_json(std::span<const DetectionSet> sets);

CalibrationFile load_calibration_file(const std::filesystem::path& path);
std::vector<CameraModel> load_calibration(const std::filesystem::path& path);
std::vector<FrameAnnotations> load_annotations(const std::filesystem::path& path);
std::vector<DetectionSet> load_detections(const std::filesystem::path& path);

void write_calibration(const std::filesystem::path& path, const CalibrationFile& calib);
void write_annotations(const std::filesystem::path& path, std::span<const FrameAnnotations> frames);
void write_detections(const std::filesystem::path& path, std::span<const DetectionSet> sets);

/// Raster = JSON header at `header_path` plus little-endian float64 payload in a
/// sibling file named by the header's "data" field (default: same stem, ".bin").
void write_grid(const std::filesystem::path& header_path, const FeatureGrid& grid);
FeatureGrid read_grid(const std::filesystem::path& header_path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

std::string report_to_json(const MetricsReport& report);

/// Loads both files and runs `evaluate`; this is what `eval` prints.
MetricsReport evaluate_files(const std::filesystem::path& gt_path, const std::filesystem::path& det_path,
                             const EvalOptions& options = {});

}  // namespace mvbev
