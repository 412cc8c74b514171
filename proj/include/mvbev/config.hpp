#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "mvbev/bev_transform.hpp"
#include "mvbev/losses.hpp"

namespace mvbev {

struct RunConfig {
  std::filesystem::path calibration;
  std::filesystem::path annotations;
  std::filesystem::path detections;
  std::filesystem::path output_dir;
  BEVGridSpec grid;
  double anchor_w = 0.60;
  double anchor_l = 0.45;
  int n_bins = 8;
  double position_nms = 0.3;
  double fusion_nms = 0.3;
  double match_radius = 0.5;
  std::vector<double> iou_thresholds{0.25, 0.5};
  double lambda_ppn = kDefaultLambdaPPN;
  double lambda_ppn_2d = kDefaultLambdaPPN2D;
  double lambda_mbon = kDefaultLambdaMBON;
  std::uint64_t seed = 0;

  /// Throws InvalidArgument naming the first offending field.
  void validate() const;
  /// Input paths that are set must exist (IOError otherwise).
  void check_paths() const;
};

/// Unknown keys are a ParseError. Relative paths resolve against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {},
                           const std::string& source = "<string>");
std::string run_config_to_json(const RunConfig& cfg);

}  // namespace mvbev
