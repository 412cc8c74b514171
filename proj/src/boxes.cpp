#include "mvbev/boxes.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mvbev/error.hpp"

namespace mvbev {

namespace {

using Point = std::array<double, 2>;

void require_positive(double w, double l, const char* what) {
  if (!(w > 0.0) || !(l > 0.0)) {
    throw Error(ErrorCode::NonPositiveSize, std::string(what) + " size must be positive (w=" +
                                                std::to_string(w) + ", l=" + std::to_string(l) + ")");
  }
}

double cross(const Point& o, const Point& a, const Point& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

Point line_intersection(const Point& p, const Point& q, const Point& a, const Point& b) {
  // Segment p->q against the infinite line a->b.
  const double cp = cross(a, b, p);
  const double cq = cross(a, b, q);
  const double t = cp / (cp - cq);
  return {p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])};
}

}  // namespace

std::array<std::array<double, 2>, 4> RotatedBoxBEV::corners() const {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  const double hw = 0.5 * w;
  const double hl = 0.5 * l;
  const std::array<Point, 4> local{{{hw, -hl}, {hw, hl}, {-hw, hl}, {-hw, -hl}}};
  std::array<Point, 4> out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = {cx + c * local[i][0] - s * local[i][1], cy + s * local[i][0] + c * local[i][1]};
  }
  return out;
}

RotatedBoxBEV footprint_box(double cx, double cy, double yaw, double length, double width) {
  return {cx, cy, length, width, yaw};
}

std::vector<Anchor> generate_anchors(const BEVGridSpec& grid, double anchor_w, double anchor_l) {
  grid.validate();
  require_positive(anchor_w, anchor_l, "anchor");
  std::vector<Anchor> anchors;
  anchors.reserve(static_cast<std::size_t>(grid.rows) * grid.cols);
  for (int r = 0; r < grid.rows; ++r)
    for (int c = 0; c < grid.cols; ++c)
      anchors.push_back({grid.cell_center_x(c), grid.cell_center_y(r), anchor_w, anchor_l});
  return anchors;
}

OffsetBEV encode_offsets(const Anchor& anchor, const BoxBEV& gt) {
  require_positive(anchor.w, anchor.l, "anchor");
  require_positive(gt.w, gt.l, "target");
  return {(gt.cx - anchor.cx) / anchor.w, (gt.cy - anchor.cy) / anchor.l, std::log(gt.w / anchor.w),
          std::log(gt.l / anchor.l)};
}

BoxBEV decode_offsets(const Anchor& anchor, const OffsetBEV& off) {
  require_positive(anchor.w, anchor.l, "anchor");
  return {anchor.cx + off.tx * anchor.w, anchor.cy + off.ty * anchor.l, anchor.w * std::exp(off.tw),
          anchor.l * std::exp(off.tl), 0.0};
}

OffsetBEV encode_offsets(const ImageBox& anchor, const ImageBox& gt) {
  const Anchor a{0.5 * (anchor.x_min + anchor.x_max), 0.5 * (anchor.y_min + anchor.y_max),
                 anchor.x_max - anchor.x_min, anchor.y_max - anchor.y_min};
  const BoxBEV g{0.5 * (gt.x_min + gt.x_max), 0.5 * (gt.y_min + gt.y_max), gt.x_max - gt.x_min,
                 gt.y_max - gt.y_min, 0.0};
  return encode_offsets(a, g);
}

ImageBox decode_offsets(const ImageBox& anchor, const OffsetBEV& off) {
  const Anchor a{0.5 * (anchor.x_min + anchor.x_max), 0.5 * (anchor.y_min + anchor.y_max),
                 anchor.x_max - anchor.x_min, anchor.y_max - anchor.y_min};
  const BoxBEV b = decode_offsets(a, off);
  return {b.cx - 0.5 * b.w, b.cy - 0.5 * b.l, b.cx + 0.5 * b.w, b.cy + 0.5 * b.l};
}

double iou_axis_aligned(const BoxBEV& a, const BoxBEV& b) {
  const double ix = std::min(a.cx + 0.5 * a.w, b.cx + 0.5 * b.w) - std::max(a.cx - 0.5 * a.w, b.cx - 0.5 * b.w);
  const double iy = std::min(a.cy + 0.5 * a.l, b.cy + 0.5 * b.l) - std::max(a.cy - 0.5 * a.l, b.cy - 0.5 * b.l);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.w * a.l + b.w * b.l - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

double polygon_area(std::span<const std::array<double, 2>> poly) {
  if (poly.size() < 3) return 0.0;
  double twice = 0.0;
  for (std::size_t i = 0, j = poly.size() - 1; i < poly.size(); j = i++) {
    twice += poly[j][0] * poly[i][1] - poly[i][0] * poly[j][1];
  }
  return 0.5 * std::abs(twice);
}

double convex_intersection_area(std::span<const std::array<double, 2>> subject,
                                std::span<const std::array<double, 2>> clip) {
  std::vector<Point> output(subject.begin(), subject.end());
  std::vector<Point> input;
  for (std::size_t e = 0; e < clip.size() && !output.empty(); ++e) {
    const Point& a = clip[e];
    const Point& b = clip[(e + 1) % clip.size()];
    input.swap(output);
    output.clear();
    for (std::size_t i = 0; i < input.size(); ++i) {
      const Point& cur = input[i];
      const Point& prev = input[(i + input.size() - 1) % input.size()];
      const bool cur_in = cross(a, b, cur) >= 0.0;
      const bool prev_in = cross(a, b, prev) >= 0.0;
      if (cur_in) {
        if (!prev_in) output.push_back(line_intersection(prev, cur, a, b));
        output.push_back(cur);
      } else if (prev_in) {
        output.push_back(line_intersection(prev, cur, a, b));
      }
    }
  }
  return polygon_area(output);
}

double iou_rotated_bev(const RotatedBoxBEV& a, const RotatedBoxBEV& b) {
  const auto pa = a.corners();
  const auto pb = b.corners();
  const double area_a = a.w * a.l;
  const double area_b = b.w * b.l;
  const double inter = std::min(convex_intersection_area(pa, pb), std::min(area_a, area_b));
  const double uni = area_a + area_b - inter;
  if (!(uni > 0.0)) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

std::vector<std::size_t> nms(std::span<const double> scores,
                             const std::function<double(std::size_t, std::size_t)>& overlap,
                             double threshold) {
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return scores[i] > scores[j]; });
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool suppressed = false;
    for (std::size_t k : kept) {
      if (overlap(k, idx) > threshold) {
        suppressed = true;
        break;
      }
    }
    if (!suppressed) kept.push_back(idx);
  }
  return kept;
}

std::vector<std::size_t> nms(std::span<const BoxBEV> boxes, double threshold) {
  std::vector<double> scores(boxes.size());
  for (std::size_t i = 0; i < boxes.size(); ++i) scores[i] = boxes[i].score;
  return nms(scores, [&](std::size_t i, std::size_t j) { return iou_axis_aligned(boxes[i], boxes[j]); },
             threshold);
}

std::vector<std::size_t> nms(std::span<const RotatedBoxBEV> boxes, std::span<const double> scores,
                             double threshold) {
  if (boxes.size() != scores.size()) {
    throw Error(ErrorCode::LengthMismatch, "nms: boxes and scores differ in length");
  }
  return nms(scores, [&](std::size_t i, std::size_t j) { return iou_rotated_bev(boxes[i], boxes[j]); },
             threshold);
}

std::vector<AnchorLabel> label_anchors(std::span<const Anchor> anchors, std::span<const BoxBEV> gts,
                                       double positive_iou, double negative_iou) {
  std::vector<AnchorLabel> labels(anchors.size(), AnchorLabel::Negative);
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    double best = 0.0;
    const BoxBEV a = anchors[i].box();
    for (const auto& g : gts) best = std::max(best, iou_axis_aligned(a, g));
    if (best > positive_iou) {
      labels[i] = AnchorLabel::Positive;
    } else if (best >= negative_iou) {
      labels[i] = AnchorLabel::Ignore;
    }
  }
  return labels;
}

std::vector<std::size_t> select_orientation_samples(std::span<const BoxBEV> proposals,
                                                    std::span<const BoxBEV> gts, double min_iou,
                                                    std::size_t cap) {
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    double best = 0.0;
    for (const auto& g : gts) best = std::max(best, iou_axis_aligned(proposals[i], g));
    if (best >= min_iou) picked.push_back(i);
  }
  std::stable_sort(picked.begin(), picked.end(), [&](std::size_t a, std::size_t b) {
    return proposals[a].score > proposals[b].score;
  });
  if (picked.size() > cap) picked.resize(cap);
  return picked;
}

}  // namespace mvbev
