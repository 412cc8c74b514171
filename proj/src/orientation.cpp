#include "mvbev/orientation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "mvbev/error.hpp"

namespace mvbev {

double wrap_two_pi(double angle) {
  double a = std::fmod(angle, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  // fmod of a tiny negative value can round back up to exactly 2pi.
  if (a >= kTwoPi) a -= kTwoPi;
  return a;
}

double wrap_pi(double angle) {
  double a = wrap_two_pi(angle);
  if (a > kPi) a -= kTwoPi;
  return a;
}

double angle_distance(double a, double b) { return std::abs(wrap_pi(a - b)); }

double ray_azimuth(const CameraModel& cam, const WorldPoint& pos) {
  const Eigen::Vector3d c = cam.center();
  const double dx = pos.x - c.x();
  const double dy = pos.y - c.y();
  if (std::hypot(dx, dy) < 1e-9) {
    throw Error(ErrorCode::DegenerateRay, "object lies on the ground footprint of camera " +
                                              std::to_string(cam.view_id));
  }
  return std::atan2(dy, dx);
}

LocalYaw global_to_local_yaw(const CameraModel& cam, const WorldPoint& pos, double beta) {
  return {wrap_two_pi(beta - ray_azimuth(cam, pos))};
}

double local_to_global_yaw(const CameraModel& cam, const WorldPoint& pos, LocalYaw alpha) {
  return wrap_two_pi(alpha.alpha + ray_azimuth(cam, pos));
}

double bin_center(int bin, int n_bins) { return kPi / n_bins * (2.0 * bin - 1.0); }

MultiBinLabel encode_multibin(LocalYaw alpha, int n_bins) {
  if (n_bins < 2) throw Error(ErrorCode::BadBinCount, "need at least 2 bins, got " + std::to_string(n_bins));
  const double a = wrap_two_pi(alpha.alpha);
  const double width = kTwoPi / n_bins;
  int bin = static_cast<int>(std::floor(a / width)) + 1;
  bin = std::clamp(bin, 1, n_bins);
  return {bin, a - bin_center(bin, n_bins)};
}

OrientationBins OrientationBins::one_hot(const MultiBinLabel& label, int n_bins, double confidence) {
  if (n_bins < 2) throw Error(ErrorCode::BadBinCount, "need at least 2 bins, got " + std::to_string(n_bins));
  if (label.bin < 1 || label.bin > n_bins) {
    throw Error(ErrorCode::BadBinCount, "bin " + std::to_string(label.bin) + " outside 1.." +
                                            std::to_string(n_bins));
  }
  OrientationBins out;
  out.n_bins = n_bins;
  out.probs.assign(n_bins, 0.0);
  out.offsets.assign(n_bins, 0.0);
  out.probs[label.bin - 1] = 1.0;
  out.offsets[label.bin - 1] = label.offset;
  out.confidence = confidence;
  return out;
}

LocalYaw decode_multibin(const OrientationBins& bins) {
  if (bins.n_bins < 2) throw Error(ErrorCode::BadBinCount, "need at least 2 bins");
  if (bins.probs.size() != static_cast<std::size_t>(bins.n_bins) ||
      bins.offsets.size() != static_cast<std::size_t>(bins.n_bins)) {
    throw Error(ErrorCode::MalformedDistribution, "probs/offsets length differs from n_bins");
  }
  double total = 0.0;
  for (double p : bins.probs) {
    if (!(p >= 0.0)) throw Error(ErrorCode::MalformedDistribution, "negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw Error(ErrorCode::MalformedDistribution, "probabilities sum to " + std::to_string(total));
  }
  const auto best = std::max_element(bins.probs.begin(), bins.probs.end());
  const int idx = static_cast<int>(best - bins.probs.begin());
  return {wrap_two_pi(bin_center(idx + 1, bins.n_bins) + bins.offsets[idx])};
}

std::vector<OrientationCandidate> fuse_multiview_orientations(
    std::span<const OrientationCandidate> candidates, double nms_threshold) {
  std::vector<RotatedBoxBEV> boxes;
  std::vector<double> scores;
  boxes.reserve(candidates.size());
  scores.reserve(candidates.size());
  for (const auto& c : candidates) {
    boxes.push_back(c.box);
    scores.push_back(c.confidence);
  }
  std::vector<OrientationCandidate> out;
  for (std::size_t idx : nms(boxes, scores, nms_threshold)) out.push_back(candidates[idx]);
  return out;
}

}  // namespace mvbev
