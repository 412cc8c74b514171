#include <cmath>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "mvbev/losses.hpp"
#include "test_util.hpp"

namespace mvbev {
namespace {

const double kLn2 = std::log(2.0);

double smooth1(double d) { return std::abs(d) < 1.0 ? 0.5 * d * d : std::abs(d) - 0.5; }

TEST(SmoothL1, Examples) {
  const std::vector<double> z{0.0};
  EXPECT_EQ(smooth_l1(std::vector<double>{0.0}, z), 0.0);
  EXPECT_EQ(smooth_l1(std::vector<double>{0.5}, z), 0.125);
  EXPECT_EQ(smooth_l1(std::vector<double>{2.0}, z), 1.5);
  EXPECT_EQ(smooth_l1(std::vector<double>{-2.0, 0.5}, std::vector<double>{0.0, 0.0}), 1.625);
  EXPECT_MVBEV_ERROR(smooth_l1(std::vector<double>{1, 2}, z), ErrorCode::LengthMismatch);
}

TEST(SoftmaxCe, Examples) {
  EXPECT_NEAR(softmax_ce(std::vector<double>{0, 0}, 0), kLn2, 1e-15);
  EXPECT_LT(softmax_ce(std::vector<double>{10, -10}, 0), 1e-8);
  EXPECT_NEAR(softmax_ce(std::vector<double>{1, 0}, 1), std::log(1 + std::exp(1.0)), 1e-15);
  // Large logits stay finite.
  EXPECT_NEAR(softmax_ce(std::vector<double>{1000, 0}, 1), 1000.0, 1e-9);
  EXPECT_MVBEV_ERROR(softmax_ce(std::vector<double>{0, 0}, 2), ErrorCode::BadLabel);
  EXPECT_MVBEV_ERROR(softmax_ce(std::vector<double>{0}, 0), ErrorCode::BadLabel);
}

TEST(CosineLoss, ExamplesAndPeriodicity) {
  EXPECT_EQ(orientation_cosine_loss(std::vector<double>{0.3}, std::vector<double>{0.3}), 0.0);
  EXPECT_NEAR(orientation_cosine_loss(std::vector<double>{M_PI}, std::vector<double>{0.0}), 2.0, 1e-15);
  EXPECT_NEAR(orientation_cosine_loss(std::vector<double>{M_PI / 3}, std::vector<double>{0.0}), 0.5, 1e-15);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-4.0, 4.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = u(rng);
    const double b = u(rng);
    const double l = orientation_cosine_loss(std::vector<double>{a}, std::vector<double>{b});
    EXPECT_GE(l, 0.0);
    EXPECT_LE(l, 2.0);
    EXPECT_NEAR(orientation_cosine_loss(std::vector<double>{a + 2 * M_PI}, std::vector<double>{b}), l, 1e-14);
  }
  EXPECT_MVBEV_ERROR(orientation_cosine_loss(std::vector<double>{1}, std::vector<double>{}), ErrorCode::LengthMismatch);
}

TEST(PpnLoss, HandComposite) {
  PPNBatch b;
  b.labels = {1};
  b.conf_logits = {{0.0, 0.0}};
  b.bev_gt = {{0, 0, 0, 0}};
  b.bev_pred = {{0.5, 0, 0, 0}};
  EXPECT_EQ(b.lambda_ppn, 3.0);
  EXPECT_EQ(b.lambda_ppn_2d, 1.0);
  const double v = ppn_loss(b);
  EXPECT_NEAR(v, kLn2 + 3.0 * 0.125, 1e-9);
  EXPECT_NEAR(std::round(v * 1e4) / 1e4, 1.0681, 1e-12);
}

TEST(PpnLoss, PerfectPredictionAndGating) {
  PPNBatch b;
  b.labels = {1, 0, 0};
  b.conf_logits = {{-10, 10}, {10, -10}, {10, -10}};
  b.bev_gt = {{0.1, 0.2, 0.3, 0.4}, {0, 0, 0, 0}, {0, 0, 0, 0}};
  b.bev_pred = {{0.1, 0.2, 0.3, 0.4}, {9, 9, 9, 9}, {-9, 9, 0, 0}};  // negatives are gated out
  b.view_gt = {{{1, 1, 1, 1}, {0, 0, 0, 0}, {0, 0, 0, 0}}};
  b.view_pred = {{{1, 1, 1, 1}, {5, 5, 5, 5}, {5, 5, 5, 5}}};
  EXPECT_LT(ppn_loss(b), 1e-6);
  b.labels = {0, 0, 0};
  EXPECT_MVBEV_ERROR(ppn_loss(b), ErrorCode::NoPositivesWithOffsets);
}

TEST(PpnLoss, MatchesDirectFormula) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> n(0.0, 1.0);
  PPNBatch b;
  const int anchors = 7;
  const int views = 2;
  b.view_gt.resize(views);
  b.view_pred.resize(views);
  for (int i = 0; i < anchors; ++i) {
    b.labels.push_back(i % 3 == 0 ? 1 : 0);
    b.conf_logits.push_back({n(rng), n(rng)});
    b.bev_gt.push_back({n(rng), n(rng), n(rng), n(rng)});
    b.bev_pred.push_back({n(rng), n(rng), n(rng), n(rng)});
    for (int v = 0; v < views; ++v) {
      b.view_gt[v].push_back({n(rng), n(rng), n(rng), n(rng)});
      b.view_pred[v].push_back({n(rng), n(rng), n(rng), n(rng)});
    }
  }
  double conf = 0.0;
  double bev = 0.0;
  double twod = 0.0;
  int n_val = 0;
  for (int i = 0; i < anchors; ++i) {
    const auto& z = b.conf_logits[i];
    const double lse = std::log(std::exp(z[0]) + std::exp(z[1]));
    conf += lse - z[b.labels[i]];
    if (b.labels[i] != 1) continue;
    ++n_val;
    const auto p = b.bev_pred[i].as_array();
    const auto g = b.bev_gt[i].as_array();
    for (int k = 0; k < 4; ++k) bev += smooth1(p[k] - g[k]);
    for (int v = 0; v < views; ++v) {
      const auto pv = b.view_pred[v][i].as_array();
      const auto gv = b.view_gt[v][i].as_array();
      for (int k = 0; k < 4; ++k) twod += smooth1(pv[k] - gv[k]);
    }
  }
  const double expected = conf / anchors + 3.0 * bev / n_val + 1.0 * twod / n_val;
  EXPECT_NEAR(ppn_loss(b), expected, 1e-12);
}

TEST(MbonLoss, HandComposite) {
  MBONBatch b;
  EXPECT_EQ(b.lambda_mbon, 0.4);
  MBONView v;
  v.labels = {1};
  v.conf_logits = {{0.0, 0.0}};
  v.bin_labels = {2};
  v.bin_logits = {{0, 0, 60, 0, 0, 0, 0, 0}};
  v.offset_gt = {0.1};
  v.offset_pred = {{0, 0, 0.1 + M_PI / 3, 0, 0, 0, 0, 0}};
  b.views = {v};
  const double val = mbon_loss(b);
  EXPECT_NEAR(val, kLn2 + 0.4 * 0.5, 1e-9);
  EXPECT_NEAR(std::round(val * 1e4) / 1e4, 0.8931, 1e-12);
}

TEST(MbonLoss, PerfectAndErrors) {
  MBONView v;
  v.labels = {1, 0};
  v.conf_logits = {{-20, 20}, {20, -20}};
  v.bin_labels = {0, 3};
  v.bin_logits = {{40, 0, 0, 0}, {0, 0, 0, 0}};
  v.offset_gt = {0.2, 0.0};
  v.offset_pred = {{0.2, 0, 0, 0}, {1, 1, 1, 1}};
  MBONBatch b;
  b.views = {v, v};
  EXPECT_LT(mbon_loss(b), 1e-6);
  b.views[1].bin_labels[0] = 4;
  EXPECT_MVBEV_ERROR(mbon_loss(b), ErrorCode::BadLabel);
  b.views[1] = v;
  b.views[1].labels = {0, 0};
  EXPECT_MVBEV_ERROR(mbon_loss(b), ErrorCode::NoPositivesWithOffsets);
}

// Independent central differences over the public value functions.
double fd(const std::function<double()>& f, double& x, double h = 1e-6) {
  const double keep = x;
  x = keep + h;
  const double up = f();
  x = keep - h;
  const double down = f();
  x = keep;
  return (up - down) / (2 * h);
}

double rel(double a, double n) { return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-3}); }

TEST(Gradients, PpnAgainstTestSideDifferences) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.9, 0.9);
  PPNBatch b;
  b.view_gt.resize(1);
  b.view_pred.resize(1);
  for (int i = 0; i < 4; ++i) {
    b.labels.push_back(i % 2);
    b.conf_logits.push_back({u(rng), u(rng)});
    b.bev_gt.push_back({0, 0, 0, 0});
    // Offsets of magnitude < 0.9 or > 1.2 stay away from the kink.
    b.bev_pred.push_back({u(rng), u(rng), 1.5 + u(rng) * 0.3, u(rng)});
    b.view_gt[0].push_back({0, 0, 0, 0});
    b.view_pred[0].push_back({u(rng), -1.5 + u(rng) * 0.3, u(rng), u(rng)});
  }
  const PPNGrad g = ppn_loss_grad(b);
  EXPECT_NEAR(g.value, ppn_loss(b), 1e-15);
  auto f = [&] { return ppn_loss(b); };
  for (int i = 0; i < 4; ++i) {
    for (int k = 0; k < 2; ++k) EXPECT_LT(rel(g.d_conf_logits[i][k], fd(f, b.conf_logits[i][k])), 1e-6);
    EXPECT_LT(rel(g.d_bev_pred[i].tx, fd(f, b.bev_pred[i].tx)), 1e-6);
    EXPECT_LT(rel(g.d_bev_pred[i].tw, fd(f, b.bev_pred[i].tw)), 1e-6);
    EXPECT_LT(rel(g.d_view_pred[0][i].ty, fd(f, b.view_pred[0][i].ty)), 1e-6);
    EXPECT_LT(rel(g.d_view_pred[0][i].tl, fd(f, b.view_pred[0][i].tl)), 1e-6);
  }
}

TEST(Gradients, MbonAgainstTestSideDifferences) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MBONView v;
  for (int i = 0; i < 3; ++i) {
    v.labels.push_back(i == 1 ? 0 : 1);
    v.conf_logits.push_back({u(rng), u(rng)});
    v.bin_labels.push_back(i);
    v.bin_logits.push_back({u(rng), u(rng), u(rng), u(rng)});
    v.offset_gt.push_back(0.3 * u(rng));
    v.offset_pred.push_back({0.5 + u(rng) * 0.3, -0.5 + u(rng) * 0.3, 0.8, u(rng)});
  }
  MBONBatch b;
  b.views = {v};
  const MBONGrad g = mbon_loss_grad(b);
  auto f = [&] { return mbon_loss(b); };
  auto& bv = b.views[0];
  for (int i = 0; i < 3; ++i) {
    for (int k = 0; k < 2; ++k) EXPECT_LT(rel(g.views[0].d_conf_logits[i][k], fd(f, bv.conf_logits[i][k])), 1e-6);
    for (int k = 0; k < 4; ++k) {
      EXPECT_LT(rel(g.views[0].d_bin_logits[i][k], fd(f, bv.bin_logits[i][k])), 1e-6);
      EXPECT_LT(rel(g.views[0].d_offset_pred[i][k], fd(f, bv.offset_pred[i][k])), 1e-6);
    }
  }
}

TEST(Gradients, LibrarySuiteBelowTolerance) {
  const GradientCheckReport r = run_gradient_check(42, 100);
  EXPECT_EQ(r.points, 100);
  EXPECT_LT(r.max(), 1e-5);
  EXPECT_LT(r.smooth_l1, 1e-5);
  EXPECT_LT(r.softmax_ce, 1e-5);
  EXPECT_LT(r.cosine, 1e-5);
  EXPECT_LT(r.ppn, 1e-5);
  EXPECT_LT(r.mbon, 1e-5);
}

}  // namespace
}  // namespace mvbev
