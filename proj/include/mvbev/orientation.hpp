#pragma once

#include <span>
#include <vector>

#include "mvbev/boxes.hpp"
#include "mvbev/geometry.hpp"

namespace mvbev {

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Wraps to [0, 2pi).
double wrap_two_pi(double angle);
/// Wraps to (-pi, pi].
double wrap_pi(double angle);
/// Smallest absolute difference between two angles, in [0, pi].
double angle_distance(double a, double b);

/// Yaw measured from the camera-to-object ray azimuth, in [0, 2pi).
struct LocalYaw {
  double alpha = 0.0;
};

/// Azimuth of the ground-plane ray from the camera center to `pos`.
double ray_azimuth(const CameraModel& cam, const WorldPoint& pos);

LocalYaw global_to_local_yaw(const CameraModel& cam, const WorldPoint& pos, double beta);
/// Returns the global yaw in [0, 2pi).
double local_to_global_yaw(const CameraModel& cam, const WorldPoint& pos, LocalYaw alpha);

struct MultiBinLabel {
  int bin = 1;          // 1-based interval index
  double offset = 0.0;  // alpha minus the interval center, in [-pi/N, pi/N]
};

/// Interval i (1-based) covers [2pi/N (i-1), 2pi/N i); its center is (pi/N)(2i - 1).
double bin_center(int bin, int n_bins);

MultiBinLabel encode_multibin(LocalYaw alpha, int n_bins);

struct OrientationBins {
  int n_bins = 0;
  std::vector<double> probs;
  std::vector<double> offsets;
  double confidence = 1.0;

  /// One-hot distribution on `label.bin` with its offset; other offsets zero.
  static OrientationBins one_hot(const MultiBinLabel& label, int n_bins, double confidence = 1.0);
};

/// Center of the most probable bin (lowest index on ties) plus its offset.
LocalYaw decode_multibin(const OrientationBins& bins);

struct OrientationCandidate {
  RotatedBoxBEV box;  // yaw already in the global frame
  int view_id = 0;
  double confidence = 0.0;
};

/// Confidence-ranked NMS over rotated BEV IoU; each survivor keeps its own yaw
/// and position (no averaging across views).
std::vector<OrientationCandidate> fuse_multiview_orientations(
    std::span<const OrientationCandidate> candidates, double nms_threshold = 0.3);

}  // namespace mvbev
