#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mvbev/boxes.hpp"
#include "mvbev/geometry.hpp"

namespace mvbev {

struct AnnotatedObject {
  WorldPoint position;
  double yaw = 0.0;
  double length = 0.6;  // along the heading
  double width = 0.45;
  double height = 0.5;

  RotatedBoxBEV footprint() const { return footprint_box(position.x, position.y, yaw, length, width); }
};

struct FrameAnnotations {
  int frame_id = 0;
  std::vector<AnnotatedObject> objects;
};

struct Detection {
  double x = 0.0;
  double y = 0.0;
  std::optional<double> yaw;
  double length = 0.0;  // 0 for position-only detections
  double width = 0.0;
  double height = 0.0;
  double confidence = 1.0;

  bool has_box() const { return length > 0.0 && width > 0.0; }
  RotatedBoxBEV footprint() const { return footprint_box(x, y, yaw.value_or(0.0), length, width); }
};

struct DetectionSet {
  int frame_id = 0;
  std::vector<Detection> detections;
};

struct MatchCriterion {
  enum class Kind { Distance, RotatedIoU };
  Kind kind = Kind::Distance;
  double radius = 0.5;         // meters, Distance mode; pairs need d <= radius
  double iou_threshold = 0.5;  // RotatedIoU mode; pairs need IoU >= threshold

  static MatchCriterion distance(double r) { return {Kind::Distance, r, 0.5}; }
  static MatchCriterion rotated_iou(double t) { return {Kind::RotatedIoU, 0.5, t}; }
};

struct MatchResult {
  int frame_id = 0;
  std::vector<std::pair<int, int>> pairs;  // (gt index, detection index)
  std::vector<double> pair_values;         // distance (Distance) or IoU (RotatedIoU) per pair
  std::vector<int> false_positives;        // detection indices
  std::vector<int> false_negatives;        // gt indices
  int num_gt = 0;
};

/// Optimal one-to-one assignment (Hungarian): most admissible pairs, then least
/// total distance (or greatest total IoU).
MatchResult match_detections(const FrameAnnotations& gt, const DetectionSet& det,
                             const MatchCriterion& criterion);

struct ModaModp {
  double moda = 0.0;
  double modp = 0.0;
  bool modp_undefined = false;  // no matches at all; modp reported as 0
  bool moda_undefined = false;  // no ground truth at all; moda reported as 0
};

/// MODA = 1 - (sum FN + sum FP) / sum GT. MODP averages 1 - min(d, r) / r over
/// matches in Distance mode and the pair IoU in RotatedIoU mode.
ModaModp moda_modp(std::span<const MatchResult> matches, const MatchCriterion& criterion);

struct DetectionCounts {
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct PrecisionRecall {
  double precision = 1.0;
  double recall = 1.0;
  bool precision_undefined = false;  // TP + FP = 0
  bool recall_undefined = false;     // TP + FN = 0
};

PrecisionRecall precision_recall(const DetectionCounts& counts);

enum class ApInterpolation { Points11, Points40 };

struct ApResult {
  double iou_threshold = 0.5;
  double ap3d = 0.0;
  double aos = 0.0;
  double os = 0.0;
  int tp = 0;
  int fp = 0;
  int num_gt = 0;
  bool os_undefined = false;   // no true positives
  bool aos_available = true;   // false when some detection has no yaw
};

/// Confidence-sorted greedy matching on rotated BEV IoU (shared altitude, so
/// height overlap is trivial), then interpolated precision. AOS weights every TP
/// by (1 + cos dyaw) / 2; OS is the mean of that similarity over TPs.
ApResult average_precision_3d(std::span<const FrameAnnotations> gt, std::span<const DetectionSet> det,
                              double iou_threshold, ApInterpolation interp = ApInterpolation::Points11);

/// Mean of (1 + cos dyaw) / 2 over (gt yaw, detection yaw) pairs.
double orientation_score(std::span<const std::pair<double, double>> matched_yaws);

struct FrameReport {
  int frame_id = 0;
  int gt = 0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
};

struct EvalOptions {
  MatchCriterion criterion = MatchCriterion::distance(0.5);
  std::vector<double> iou_thresholds{0.25, 0.5};
  ApInterpolation interpolation = ApInterpolation::Points11;
};

struct MetricsReport {
  double moda = 0.0;
  double modp = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  int tp = 0;
  int fp = 0;
  int fn = 0;
  int num_gt = 0;
  std::vector<ApResult> ap;
  std::vector<FrameReport> frames;
  std::vector<std::string> flags;
};

/// Frames are aligned by frame_id; a missing detection frame means no detections,
/// a missing annotation frame means no ground truth. Frames with neither are skipped.
MetricsReport evaluate(std::span<const FrameAnnotations> gt, std::span<const DetectionSet> det,
                       const EvalOptions& options = {});

/// Aligned text table: MODA, MODP, Prec., Recall in percent, then AP3D/AOS/OS rows.
std::string format_table(const MetricsReport& report);

}  // namespace mvbev
