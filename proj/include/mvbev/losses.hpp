#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "mvbev/boxes.hpp"

namespace mvbev {

/// Loss value with the gradient w.r.t. the prediction argument.
struct LossGrad {
  double value = 0.0;
  std::vector<double> grad;
};

/// Sum over components of 0.5 d^2 (|d| < 1) or |d| - 0.5, with d = pred - gt.
double smooth_l1(std::span<const double> pred, std::span<const double> gt);
LossGrad smooth_l1_grad(std::span<const double> pred, std::span<const double> gt);

/// -log softmax(logits)[label], computed through log-sum-exp.
double softmax_ce(std::span<const double> logits, int label);
LossGrad softmax_ce_grad(std::span<const double> logits, int label);

/// Mean of 1 - cos(pred - gt); in [0, 2] and 2pi-periodic in each argument.
double orientation_cosine_loss(std::span<const double> pred, std::span<const double> gt);
LossGrad orientation_cosine_loss_grad(std::span<const double> pred, std::span<const double> gt);

inline constexpr double kDefaultLambdaPPN = 3.0;
inline constexpr double kDefaultLambdaPPN2D = 1.0;
inline constexpr double kDefaultLambdaMBON = 0.4;

/// Position-proposal objective over one batch of anchors. Confidence terms take
/// two logits per anchor (background, object). Offset arrays may be left empty to
/// drop their term; when present they are parallel to `labels` and only anchors
/// with label 1 contribute.
struct PPNBatch {
  std::vector<int> labels;                          // ground-truth p-hat in {0, 1}
  std::vector<std::array<double, 2>> conf_logits;   // predicted confidence logits
  std::vector<OffsetBEV> bev_gt;
  std::vector<OffsetBEV> bev_pred;
  std::vector<std::vector<OffsetBEV>> view_gt;      // [view][anchor]
  std::vector<std::vector<OffsetBEV>> view_pred;    // [view][anchor]
  double lambda_ppn = kDefaultLambdaPPN;
  double lambda_ppn_2d = kDefaultLambdaPPN2D;

  int n_conf() const { return static_cast<int>(labels.size()); }
  int n_val() const;
};

struct PPNGrad {
  double value = 0.0;
  std::vector<std::array<double, 2>> d_conf_logits;
  std::vector<OffsetBEV> d_bev_pred;
  std::vector<std::vector<OffsetBEV>> d_view_pred;
};

double ppn_loss(const PPNBatch& batch);
PPNGrad ppn_loss_grad(const PPNBatch& batch);

/// Per-view orientation-branch data. `bin_labels` are 0-based interval indices;
/// `offset_gt[i]` is the offset label of box i's true interval and is compared
/// against `offset_pred[i][bin_labels[i]]`.
struct MBONView {
  std::vector<int> labels;
  std::vector<std::array<double, 2>> conf_logits;
  std::vector<int> bin_labels;
  std::vector<std::vector<double>> bin_logits;
  std::vector<double> offset_gt;
  std::vector<std::vector<double>> offset_pred;

  int n_conf() const { return static_cast<int>(labels.size()); }
  int n_val() const;
};

struct MBONBatch {
  std::vector<MBONView> views;
  double lambda_mbon = kDefaultLambdaMBON;
};

struct MBONViewGrad {
  std::vector<std::array<double, 2>> d_conf_logits;
  std::vector<std::vector<double>> d_bin_logits;
  std::vector<std::vector<double>> d_offset_pred;
};

struct MBONGrad {
  double value = 0.0;
  std::vector<MBONViewGrad> views;
};

double mbon_loss(const MBONBatch& batch);
MBONGrad mbon_loss_grad(const MBONBatch& batch);

/// Central finite differences (step h) against the analytic gradients at random
/// points away from the smooth-L1 kink and cosine stationary points. Relative error
/// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-3).
struct GradientCheckReport {
  double smooth_l1 = 0.0;
  double softmax_ce = 0.0;
  double cosine = 0.0;
  double ppn = 0.0;
  double mbon = 0.0;
  int points = 0;

  double max() const;
};

GradientCheckReport run_gradient_check(std::uint64_t seed, int points, double h = 1e-5);

}  // namespace mvbev
