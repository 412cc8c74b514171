#include "mvbev/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>
#include <sstream>

#include "mvbev/error.hpp"
#include "mvbev/hungarian.hpp"

namespace mvbev {

namespace {

double yaw_similarity(double a, double b) { return 0.5 * (1.0 + std::cos(a - b)); }

struct AlignedFrame {
  int frame_id = 0;
  const FrameAnnotations* gt = nullptr;
  const DetectionSet* det = nullptr;
};

std::vector<AlignedFrame> align(std::span<const FrameAnnotations> gt, std::span<const DetectionSet> det) {
  std::map<int, AlignedFrame> by_id;
  for (const auto& f : gt) {
    auto& slot = by_id[f.frame_id];
    if (slot.gt != nullptr) {
      throw Error(ErrorCode::InvalidArgument, "duplicate annotation frame " + std::to_string(f.frame_id));
    }
    slot.frame_id = f.frame_id;
    slot.gt = &f;
  }
  for (const auto& d : det) {
    auto& slot = by_id[d.frame_id];
    if (slot.det != nullptr) {
      throw Error(ErrorCode::InvalidArgument, "duplicate detection frame " + std::to_string(d.frame_id));
    }
    slot.frame_id = d.frame_id;
    slot.det = &d;
  }
  std::vector<AlignedFrame> out;
  out.reserve(by_id.size());
  for (auto& [id, f] : by_id) out.push_back(f);
  return out;
}

}  // namespace

MatchResult match_detections(const FrameAnnotations& gt, const DetectionSet& det,
                             const MatchCriterion& criterion) {
  const int n_gt = static_cast<int>(gt.objects.size());
  const int n_det = static_cast<int>(det.detections.size());
  MatchResult res;
  res.frame_id = gt.frame_id;
  res.num_gt = n_gt;

  std::vector<std::vector<double>> cost(n_gt, std::vector<double>(n_det, 0.0));
  std::vector<std::vector<double>> value(n_gt, std::vector<double>(n_det, 0.0));
  std::vector<std::vector<bool>> ok(n_gt, std::vector<bool>(n_det, false));
  for (int i = 0; i < n_gt; ++i) {
    const auto& g = gt.objects[i];
    for (int j = 0; j < n_det; ++j) {
      const auto& d = det.detections[j];
      if (criterion.kind == MatchCriterion::Kind::Distance) {
        const double dist = std::hypot(g.position.x - d.x, g.position.y - d.y);
        value[i][j] = dist;
        cost[i][j] = dist;
        ok[i][j] = dist <= criterion.radius;
      } else {
        if (!d.has_box()) {
          throw Error(ErrorCode::InvalidArgument, "IoU matching needs detection sizes");
        }
        const double iou = iou_rotated_bev(g.footprint(), d.footprint());
        value[i][j] = iou;
        cost[i][j] = 1.0 - iou;
        ok[i][j] = iou >= criterion.iou_threshold && iou > 0.0;
      }
    }
  }

  const std::vector<int> assign = solve_assignment(cost, ok);
  std::vector<bool> det_used(n_det, false);
  for (int i = 0; i < n_gt; ++i) {
    if (assign[i] >= 0) {
      res.pairs.emplace_back(i, assign[i]);
      res.pair_values.push_back(value[i][assign[i]]);
      det_used[assign[i]] = true;
    } else {
      res.false_negatives.push_back(i);
    }
  }
  for (int j = 0; j < n_det; ++j) {
    if (!det_used[j]) res.false_positives.push_back(j);
  }
  return res;
}

ModaModp moda_modp(std::span<const MatchResult> matches, const MatchCriterion& criterion) {
  long long gt = 0, fn = 0, fp = 0, tp = 0;
  double score = 0.0;
  for (const auto& m : matches) {
    gt += m.num_gt;
    fn += static_cast<long long>(m.false_negatives.size());
    fp += static_cast<long long>(m.false_positives.size());
    tp += static_cast<long long>(m.pairs.size());
    for (double v : m.pair_values) {
      score += criterion.kind == MatchCriterion::Kind::Distance
                   ? 1.0 - std::min(v, criterion.radius) / criterion.radius
                   : v;
    }
  }
  ModaModp out;
  if (gt > 0) {
    out.moda = 1.0 - static_cast<double>(fn + fp) / static_cast<double>(gt);
  } else {
    out.moda_undefined = true;
  }
  if (tp > 0) {
    out.modp = score / static_cast<double>(tp);
  } else {
    out.modp_undefined = true;
  }
  return out;
}

PrecisionRecall precision_recall(const DetectionCounts& c) {
  PrecisionRecall pr;
  if (c.tp + c.fp > 0) {
    pr.precision = static_cast<double>(c.tp) / (c.tp + c.fp);
  } else {
    pr.precision_undefined = true;
  }
  if (c.tp + c.fn > 0) {
    pr.recall = static_cast<double>(c.tp) / (c.tp + c.fn);
  } else {
    pr.recall_undefined = true;
  }
  return pr;
}

double orientation_score(std::span<const std::pair<double, double>> matched_yaws) {
  if (matched_yaws.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [a, b] : matched_yaws) sum += yaw_similarity(a, b);
  return sum / static_cast<double>(matched_yaws.size());
}

ApResult average_precision_3d(std::span<const FrameAnnotations> gt, std::span<const DetectionSet> det,
                              double iou_threshold, ApInterpolation interp) {
  ApResult res;
  res.iou_threshold = iou_threshold;
  const auto frames = align(gt, det);

  struct Candidate {
    std::size_t frame;
    int index;
    double confidence;
  };
  std::vector<Candidate> order;
  std::vector<std::vector<RotatedBoxBEV>> gt_boxes(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].gt != nullptr) {
      for (const auto& o : frames[f].gt->objects) gt_boxes[f].push_back(o.footprint());
      res.num_gt += static_cast<int>(frames[f].gt->objects.size());
    }
    if (frames[f].det != nullptr) {
      const auto& d = frames[f].det->detections;
      for (int j = 0; j < static_cast<int>(d.size()); ++j) {
        if (!d[j].has_box()) throw Error(ErrorCode::InvalidArgument, "AP3D needs detection sizes");
        if (!d[j].yaw.has_value()) res.aos_available = false;
        order.push_back({f, j, d[j].confidence});
      }
    }
  }
  std::stable_sort(order.begin(), order.end(),
                   [](const Candidate& a, const Candidate& b) { return a.confidence > b.confidence; });

  std::vector<std::vector<bool>> taken(frames.size());
  for (std::size_t f = 0; f < frames.size(); ++f) taken[f].assign(gt_boxes[f].size(), false);

  std::vector<double> precision, recall, similarity;
  precision.reserve(order.size());
  double sim_sum = 0.0;
  int tp = 0;
  for (std::size_t k = 0; k < order.size(); ++k) {
    const auto& c = order[k];
    const Detection& d = frames[c.frame].det->detections[c.index];
    const RotatedBoxBEV db = d.footprint();
    int best = -1;
    double best_iou = -1.0;
    for (int g = 0; g < static_cast<int>(gt_boxes[c.frame].size()); ++g) {
      if (taken[c.frame][g]) continue;
      const double iou = iou_rotated_bev(gt_boxes[c.frame][g], db);
      if (iou >= iou_threshold && iou > 0.0 && iou > best_iou) {
        best_iou = iou;
        best = g;
      }
    }
    if (best >= 0) {
      taken[c.frame][best] = true;
      ++tp;
      if (d.yaw.has_value()) sim_sum += yaw_similarity(frames[c.frame].gt->objects[best].yaw, *d.yaw);
    }
    const double n = static_cast<double>(k + 1);
    precision.push_back(tp / n);
    similarity.push_back(sim_sum / n);
    recall.push_back(res.num_gt > 0 ? static_cast<double>(tp) / res.num_gt : 0.0);
  }
  res.tp = tp;
  res.fp = static_cast<int>(order.size()) - tp;
  res.os_undefined = tp == 0;
  res.os = tp > 0 ? sim_sum / tp : 0.0;
  if (res.num_gt == 0) return res;

  std::vector<double> levels;
  if (interp == ApInterpolation::Points11) {
    for (int i = 0; i <= 10; ++i) levels.push_back(i / 10.0);
  } else {
    for (int i = 1; i <= 40; ++i) levels.push_back(i / 40.0);
  }
  // Suffix maxima give max precision over recall >= r in one pass.
  std::vector<double> best_p(precision.size() + 1, 0.0), best_s(precision.size() + 1, 0.0);
  for (std::size_t k = precision.size(); k-- > 0;) {
    best_p[k] = std::max(best_p[k + 1], precision[k]);
    best_s[k] = std::max(best_s[k + 1], similarity[k]);
  }
  double ap = 0.0, aos = 0.0;
  for (double r : levels) {
    // Recall is non-decreasing along the sweep.
    const auto it = std::lower_bound(recall.begin(), recall.end(), r - 1e-12);
    const std::size_t k = static_cast<std::size_t>(it - recall.begin());
    ap += best_p[k];
    aos += best_s[k];
  }
  res.ap3d = ap / levels.size();
  res.aos = res.aos_available ? aos / levels.size() : 0.0;
  return res;
}

MetricsReport evaluate(std::span<const FrameAnnotations> gt, std::span<const DetectionSet> det,
                       const EvalOptions& options) {
  MetricsReport rep;
  const auto frames = align(gt, det);
  const FrameAnnotations empty_gt;
  const DetectionSet empty_det;
  std::vector<MatchResult> matches;
  for (const auto& f : frames) {
    const FrameAnnotations& g = f.gt != nullptr ? *f.gt : empty_gt;
    const DetectionSet& d = f.det != nullptr ? *f.det : empty_det;
    if (g.objects.empty() && d.detections.empty()) continue;
    MatchResult m = match_detections(g, d, options.criterion);
    m.frame_id = f.frame_id;
    FrameReport fr{f.frame_id, m.num_gt, static_cast<int>(m.pairs.size()),
                   static_cast<int>(m.false_positives.size()),
                   static_cast<int>(m.false_negatives.size())};
    rep.frames.push_back(fr);
    rep.tp += fr.tp;
    rep.fp += fr.fp;
    rep.fn += fr.fn;
    rep.num_gt += fr.gt;
    matches.push_back(std::move(m));
  }
  const ModaModp mm = moda_modp(matches, options.criterion);
  rep.moda = mm.moda;
  rep.modp = mm.modp;
  if (mm.moda_undefined) rep.flags.emplace_back("moda_undefined_no_ground_truth");
  if (mm.modp_undefined) rep.flags.emplace_back("modp_undefined_no_matches");
  const PrecisionRecall pr = precision_recall({rep.tp, rep.fp, rep.fn});
  rep.precision = pr.precision;
  rep.recall = pr.recall;
  if (pr.precision_undefined) rep.flags.emplace_back("precision_undefined_no_detections");
  if (pr.recall_undefined) rep.flags.emplace_back("recall_undefined_no_ground_truth");

  bool boxes = true;
  for (const auto& d : det)
    for (const auto& x : d.detections) boxes = boxes && x.has_box();
  if (!boxes) {
    rep.flags.emplace_back("ap3d_unavailable_position_only_detections");
    return rep;
  }
  for (double t : options.iou_thresholds) {
    ApResult r = average_precision_3d(gt, det, t, options.interpolation);
    if (!r.aos_available) rep.flags.emplace_back("aos_unavailable_missing_yaw");
    rep.ap.push_back(r);
  }
  return rep;
}

std::string format_table(const MetricsReport& report) {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof(line), "%8s %8s %8s %8s\n", "MODA", "MODP", "Prec.", "Recall");
  os << line;
  std::snprintf(line, sizeof(line), "%8.1f %8.1f %8.1f %8.1f\n", 100.0 * report.moda,
                100.0 * report.modp, 100.0 * report.precision, 100.0 * report.recall);
  os << line;
  if (!report.ap.empty()) {
    std::snprintf(line, sizeof(line), "%8s %8s %8s %8s\n", "IoU", "AP3D", "AOS", "OS");
    os << line;
    for (const auto& r : report.ap) {
      std::snprintf(line, sizeof(line), "%8.2f %8.1f %8.1f %8.1f\n", r.iou_threshold, 100.0 * r.ap3d,
                    100.0 * r.aos, 100.0 * r.os);
      os << line;
    }
  }
  std::snprintf(line, sizeof(line), "TP %d  FP %d  FN %d  GT %d\n", report.tp, report.fp, report.fn,
                report.num_gt);
  os << line;
  for (const auto& f : report.flags) os << "flag: " << f << '\n';
  return os.str();
}

}  // namespace mvbev
