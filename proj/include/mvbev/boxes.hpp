#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "mvbev/bev_transform.hpp"

namespace mvbev {

// Extent convention shared by every box type here: `w` spans the box's local
// x axis and `l` its local y axis. Axis-aligned boxes have local x = world x;
// rotated boxes turn local x by `yaw` (so yaw = 0 reduces to BoxBEV).

struct BoxBEV {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double l = 1.0;
  double score = 0.0;
};

struct Anchor {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double l = 1.0;

  BoxBEV box() const { return {cx, cy, w, l, 0.0}; }
};

/// Faster R-CNN box parameterization: tx = (x - xa) / wa, ty = (y - ya) / la,
/// tw = log(w / wa), tl = log(l / la).
struct OffsetBEV {
  double tx = 0.0;
  double ty = 0.0;
  double tw = 0.0;
  double tl = 0.0;

  std::array<double, 4> as_array() const { return {tx, ty, tw, tl}; }
};

struct RotatedBoxBEV {
  double cx = 0.0;
  double cy = 0.0;
  double w = 1.0;
  double l = 1.0;
  double yaw = 0.0;  // radians, (-pi, pi]

  /// Corners in counter-clockwise order.
  std::array<std::array<double, 2>, 4> corners() const;
};

/// Footprint of an object whose `length` runs along its heading `yaw`.
RotatedBoxBEV footprint_box(double cx, double cy, double yaw, double length, double width);

/// Axis-aligned image-space box in pixels.
struct ImageBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double x_max = 0.0;
  double y_max = 0.0;
};

std::vector<Anchor> generate_anchors(const BEVGridSpec& grid, double anchor_w, double anchor_l);

OffsetBEV encode_offsets(const Anchor& anchor, const BoxBEV& gt);
BoxBEV decode_offsets(const Anchor& anchor, const OffsetBEV& off);

/// Same codec on image boxes (center / size form); used for the per-view 2D targets.
OffsetBEV encode_offsets(const ImageBox& anchor, const ImageBox& gt);
ImageBox decode_offsets(const ImageBox& anchor, const OffsetBEV& off);

double iou_axis_aligned(const BoxBEV& a, const BoxBEV& b);

/// Convex polygon clipping (Sutherland-Hodgman) plus shoelace area.
double iou_rotated_bev(const RotatedBoxBEV& a, const RotatedBoxBEV& b);

/// Area of the intersection of two convex CCW polygons.
double convex_intersection_area(std::span<const std::array<double, 2>> subject,
                                std::span<const std::array<double, 2>> clip);

double polygon_area(std::span<const std::array<double, 2>> poly);

/// Greedy NMS. Candidates are visited by descending score (ties: lower index
/// first); a candidate is dropped when its overlap with any kept candidate
/// exceeds `threshold`. Returns kept indices in visiting order.
std::vector<std::size_t> nms(std::span<const double> scores,
                             const std::function<double(std::size_t, std::size_t)>& overlap,
                             double threshold);
std::vector<std::size_t> nms(std::span<const BoxBEV> boxes, double threshold);
std::vector<std::size_t> nms(std::span<const RotatedBoxBEV> boxes, std::span<const double> scores,
                             double threshold);

enum class AnchorLabel : int { Ignore = -1, Negative = 0, Positive = 1 };

/// Training-time anchor labels: best IoU over ground truth > positive_iou is
/// positive, < negative_iou negative, otherwise ignored.
std::vector<AnchorLabel> label_anchors(std::span<const Anchor> anchors, std::span<const BoxBEV> gts,
                                       double positive_iou = 0.7, double negative_iou = 0.3);

/// Proposals whose best IoU with any ground truth is >= min_iou, highest score
/// first, at most `cap` of them.
std::vector<std::size_t> select_orientation_samples(std::span<const BoxBEV> proposals,
                                                    std::span<const BoxBEV> gts,
                                                    double min_iou = 0.5, std::size_t cap = 128);

}  // namespace mvbev
