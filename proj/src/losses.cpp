#include "mvbev/losses.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>

#include "mvbev/error.hpp"

namespace mvbev {

namespace {

void require_same_length(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::LengthMismatch, std::string(what) + ": lengths " + std::to_string(a) +
                                               " and " + std::to_string(b));
  }
}

double* field(OffsetBEV& o, int k) {
  switch (k) {
    case 0: return &o.tx;
    case 1: return &o.ty;
    case 2: return &o.tw;
    default: return &o.tl;
  }
}

double smooth_l1_offsets(const OffsetBEV& pred, const OffsetBEV& gt) {
  const auto p = pred.as_array();
  const auto g = gt.as_array();
  return smooth_l1(p, g);
}

void add_smooth_l1_grad(const OffsetBEV& pred, const OffsetBEV& gt, double scale, OffsetBEV& out) {
  const auto p = pred.as_array();
  const auto g = gt.as_array();
  const LossGrad lg = smooth_l1_grad(p, g);
  for (int k = 0; k < 4; ++k) *field(out, k) += scale * lg.grad[k];
}

void check_label(int label) {
  if (label != 0 && label != 1) {
    throw Error(ErrorCode::BadLabel, "confidence label must be 0 or 1, got " + std::to_string(label));
  }
}

}  // namespace

double smooth_l1(std::span<const double> pred, std::span<const double> gt) {
  require_same_length(pred.size(), gt.size(), "smooth_l1");
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    const double a = std::abs(d);
    sum += a < 1.0 ? 0.5 * d * d : a - 0.5;
  }
  return sum;
}

LossGrad smooth_l1_grad(std::span<const double> pred, std::span<const double> gt) {
  LossGrad out{smooth_l1(pred, gt), std::vector<double>(pred.size())};
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - gt[i];
    out.grad[i] = std::abs(d) < 1.0 ? d : (d > 0.0 ? 1.0 : -1.0);
  }
  return out;
}

double softmax_ce(std::span<const double> logits, int label) {
  if (logits.size() < 2) throw Error(ErrorCode::BadLabel, "softmax needs at least 2 logits");
  if (label < 0 || static_cast<std::size_t>(label) >= logits.size()) {
    throw Error(ErrorCode::BadLabel, "label " + std::to_string(label) + " out of range");
  }
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - m);
  return std::log(sum) + m - logits[label];
}

LossGrad softmax_ce_grad(std::span<const double> logits, int label) {
  LossGrad out{softmax_ce(logits, label), std::vector<double>(logits.size())};
  const double m = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.grad[k] = std::exp(logits[k] - m);
    sum += out.grad[k];
  }
  for (std::size_t k = 0; k < logits.size(); ++k) {
    out.grad[k] = out.grad[k] / sum - (static_cast<int>(k) == label ? 1.0 : 0.0);
  }
  return out;
}

double orientation_cosine_loss(std::span<const double> pred, std::span<const double> gt) {
  require_same_length(pred.size(), gt.size(), "orientation_cosine_loss");
  if (pred.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) sum += 1.0 - std::cos(pred[i] - gt[i]);
  return sum / static_cast<double>(pred.size());
}

LossGrad orientation_cosine_loss_grad(std::span<const double> pred, std::span<const double> gt) {
  LossGrad out{orientation_cosine_loss(pred, gt), std::vector<double>(pred.size())};
  const double n = static_cast<double>(pred.size());
  for (std::size_t i = 0; i < pred.size(); ++i) out.grad[i] = std::sin(pred[i] - gt[i]) / n;
  return out;
}

int PPNBatch::n_val() const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

void validate(const PPNBatch& b) {
  require_same_length(b.conf_logits.size(), b.labels.size(), "ppn confidence");
  for (int l : b.labels) check_label(l);
  if (b.labels.empty()) throw Error(ErrorCode::LengthMismatch, "ppn batch has no anchors");
  const bool has_bev = !b.bev_pred.empty() || !b.bev_gt.empty();
  const bool has_2d = !b.view_pred.empty() || !b.view_gt.empty();
  if (has_bev) {
    require_same_length(b.bev_pred.size(), b.labels.size(), "ppn BEV predictions");
    require_same_length(b.bev_gt.size(), b.labels.size(), "ppn BEV targets");
  }
  if (has_2d) {
    require_same_length(b.view_pred.size(), b.view_gt.size(), "ppn view count");
    for (std::size_t v = 0; v < b.view_pred.size(); ++v) {
      require_same_length(b.view_pred[v].size(), b.labels.size(), "ppn 2D predictions");
      require_same_length(b.view_gt[v].size(), b.labels.size(), "ppn 2D targets");
    }
  }
  if ((has_bev || has_2d) && b.n_val() == 0) {
    throw Error(ErrorCode::NoPositivesWithOffsets, "offset terms supplied but no positive anchors");
  }
}

}  // namespace

double ppn_loss(const PPNBatch& b) { return ppn_loss_grad(b).value; }

PPNGrad ppn_loss_grad(const PPNBatch& b) {
  validate(b);
  PPNGrad g;
  const double n_conf = b.n_conf();
  g.d_conf_logits.resize(b.labels.size());
  double conf = 0.0;
  for (std::size_t i = 0; i < b.labels.size(); ++i) {
    const LossGrad ce = softmax_ce_grad(b.conf_logits[i], b.labels[i]);
    conf += ce.value;
    g.d_conf_logits[i] = {ce.grad[0] / n_conf, ce.grad[1] / n_conf};
  }
  g.value = conf / n_conf;

  const double n_val = b.n_val();
  if (!b.bev_pred.empty()) {
    g.d_bev_pred.assign(b.labels.size(), OffsetBEV{});
    double sum = 0.0;
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      if (b.labels[i] != 1) continue;
      sum += smooth_l1_offsets(b.bev_pred[i], b.bev_gt[i]);
      add_smooth_l1_grad(b.bev_pred[i], b.bev_gt[i], b.lambda_ppn / n_val, g.d_bev_pred[i]);
    }
    g.value += b.lambda_ppn * sum / n_val;
  }
  if (!b.view_pred.empty()) {
    g.d_view_pred.assign(b.view_pred.size(), std::vector<OffsetBEV>(b.labels.size()));
    double sum = 0.0;
    for (std::size_t i = 0; i < b.labels.size(); ++i) {
      if (b.labels[i] != 1) continue;
      for (std::size_t v = 0; v < b.view_pred.size(); ++v) {
        sum += smooth_l1_offsets(b.view_pred[v][i], b.view_gt[v][i]);
        add_smooth_l1_grad(b.view_pred[v][i], b.view_gt[v][i], b.lambda_ppn_2d / n_val,
                           g.d_view_pred[v][i]);
      }
    }
    g.value += b.lambda_ppn_2d * sum / n_val;
  }
  return g;
}

int MBONView::n_val() const {
  return static_cast<int>(std::count(labels.begin(), labels.end(), 1));
}

namespace {

void validate(const MBONView& v) {
  require_same_length(v.conf_logits.size(), v.labels.size(), "mbon confidence");
  for (int l : v.labels) check_label(l);
  if (v.labels.empty()) throw Error(ErrorCode::LengthMismatch, "mbon view has no boxes");
  const bool has_bins = !v.bin_logits.empty() || !v.offset_pred.empty();
  if (!has_bins) return;
  require_same_length(v.bin_labels.size(), v.labels.size(), "mbon bin labels");
  require_same_length(v.bin_logits.size(), v.labels.size(), "mbon bin logits");
  require_same_length(v.offset_gt.size(), v.labels.size(), "mbon offset targets");
  require_same_length(v.offset_pred.size(), v.labels.size(), "mbon offset predictions");
  for (std::size_t i = 0; i < v.labels.size(); ++i) {
    require_same_length(v.offset_pred[i].size(), v.bin_logits[i].size(), "mbon offsets per bin");
    if (v.bin_labels[i] < 0 || static_cast<std::size_t>(v.bin_labels[i]) >= v.bin_logits[i].size()) {
      throw Error(ErrorCode::BadLabel, "bin label " + std::to_string(v.bin_labels[i]) + " out of range");
    }
  }
  if (v.n_val() == 0) {
    throw Error(ErrorCode::NoPositivesWithOffsets, "bin/offset terms supplied but no positive boxes");
  }
}

}  // namespace

double mbon_loss(const MBONBatch& b) { return mbon_loss_grad(b).value; }

MBONGrad mbon_loss_grad(const MBONBatch& b) {
  MBONGrad g;
  g.views.resize(b.views.size());
  for (std::size_t vi = 0; vi < b.views.size(); ++vi) {
    const MBONView& v = b.views[vi];
    validate(v);
    MBONViewGrad& vg = g.views[vi];
    const double n_conf = v.n_conf();
    vg.d_conf_logits.resize(v.labels.size());
    double conf = 0.0;
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      const LossGrad ce = softmax_ce_grad(v.conf_logits[i], v.labels[i]);
      conf += ce.value;
      vg.d_conf_logits[i] = {ce.grad[0] / n_conf, ce.grad[1] / n_conf};
    }
    g.value += conf / n_conf;
    if (v.bin_logits.empty()) continue;

    const double n_val = v.n_val();
    vg.d_bin_logits.resize(v.labels.size());
    vg.d_offset_pred.resize(v.labels.size());
    double cls = 0.0;
    std::vector<double> o_pred;
    std::vector<double> o_gt;
    std::vector<std::size_t> positives;
    for (std::size_t i = 0; i < v.labels.size(); ++i) {
      vg.d_bin_logits[i].assign(v.bin_logits[i].size(), 0.0);
      vg.d_offset_pred[i].assign(v.offset_pred[i].size(), 0.0);
      if (v.labels[i] != 1) continue;
      const LossGrad ce = softmax_ce_grad(v.bin_logits[i], v.bin_labels[i]);
      cls += ce.value;
      for (std::size_t k = 0; k < ce.grad.size(); ++k) vg.d_bin_logits[i][k] = ce.grad[k] / n_val;
      o_pred.push_back(v.offset_pred[i][v.bin_labels[i]]);
      o_gt.push_back(v.offset_gt[i]);
      positives.push_back(i);
    }
    // The mean inside the cosine loss already divides by N_val.
    const LossGrad ori = orientation_cosine_loss_grad(o_pred, o_gt);
    for (std::size_t k = 0; k < positives.size(); ++k) {
      const std::size_t i = positives[k];
      vg.d_offset_pred[i][v.bin_labels[i]] = b.lambda_mbon * ori.grad[k];
    }
    g.value += cls / n_val + b.lambda_mbon * ori.value;
  }
  return g;
}

double GradientCheckReport::max() const {
  return std::max({smooth_l1, softmax_ce, cosine, ppn, mbon});
}

namespace {

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-3});
}

// Max relative error over all parameters reachable through `params`.
double fd_check(const std::function<double()>& loss, const std::vector<double*>& params,
                const std::vector<double>& analytic, double h) {
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    double* p = params[k];
    const double saved = *p;
    *p = saved + h;
    const double up = loss();
    *p = saved - h;
    const double down = loss();
    *p = saved;
    worst = std::max(worst, relative_error(analytic[k], (up - down) / (2.0 * h)));
  }
  return worst;
}

// Draws a residual d with |d| away from the smooth-L1 kink at 1 and from 0.
double residual(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-2.5, 2.5);
  for (;;) {
    const double d = u(rng);
    if (std::abs(std::abs(d) - 1.0) > 0.05 && std::abs(d) > 0.05) return d;
  }
}

// Angle difference away from the cosine stationary points 0 and pi.
double angle_residual(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (;;) {
    const double d = u(rng);
    if (std::abs(std::sin(d)) > 0.05) return d;
  }
}

OffsetBEV random_offset(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  return {u(rng), u(rng), u(rng), u(rng)};
}

OffsetBEV shifted(const OffsetBEV& o, std::mt19937_64& rng) {
  return {o.tx + residual(rng), o.ty + residual(rng), o.tw + residual(rng), o.tl + residual(rng)};
}

}  // namespace

GradientCheckReport run_gradient_check(std::uint64_t seed, int points, double h) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> logit(-3.0, 3.0);
  std::uniform_int_distribution<int> small(1, 4);
  GradientCheckReport rep;
  rep.points = points;

  for (int pt = 0; pt < points; ++pt) {
    {
      std::vector<double> gt(6), pred(6);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        gt[i] = logit(rng);
        pred[i] = gt[i] + residual(rng);
      }
      const LossGrad lg = smooth_l1_grad(pred, gt);
      std::vector<double*> params;
      for (double& p : pred) params.push_back(&p);
      rep.smooth_l1 = std::max(rep.smooth_l1, fd_check([&] { return smooth_l1(pred, gt); }, params, lg.grad, h));
    }
    {
      const int n = small(rng) + 1;
      std::vector<double> z(n);
      for (double& v : z) v = logit(rng);
      const int label = std::uniform_int_distribution<int>(0, n - 1)(rng);
      const LossGrad lg = softmax_ce_grad(z, label);
      std::vector<double*> params;
      for (double& p : z) params.push_back(&p);
      rep.softmax_ce = std::max(rep.softmax_ce, fd_check([&] { return softmax_ce(z, label); }, params, lg.grad, h));
    }
    {
      std::vector<double> gt(5), pred(5);
      for (std::size_t i = 0; i < gt.size(); ++i) {
        gt[i] = logit(rng);
        pred[i] = gt[i] + angle_residual(rng);
      }
      const LossGrad lg = orientation_cosine_loss_grad(pred, gt);
      std::vector<double*> params;
      for (double& p : pred) params.push_back(&p);
      rep.cosine = std::max(rep.cosine, fd_check([&] { return orientation_cosine_loss(pred, gt); }, params, lg.grad, h));
    }
    {
      PPNBatch b;
      const int anchors = small(rng) + 2;
      const int views = small(rng) % 3 + 1;
      b.view_gt.resize(views);
      b.view_pred.resize(views);
      for (int i = 0; i < anchors; ++i) {
        b.labels.push_back(i == 0 ? 1 : static_cast<int>(rng() & 1U));
        b.conf_logits.push_back({logit(rng), logit(rng)});
        b.bev_gt.push_back(random_offset(rng));
        b.bev_pred.push_back(shifted(b.bev_gt.back(), rng));
        for (int v = 0; v < views; ++v) {
          b.view_gt[v].push_back(random_offset(rng));
          b.view_pred[v].push_back(shifted(b.view_gt[v].back(), rng));
        }
      }
      const PPNGrad g = ppn_loss_grad(b);
      std::vector<double*> params;
      std::vector<double> analytic;
      for (int i = 0; i < anchors; ++i) {
        for (int k = 0; k < 2; ++k) {
          params.push_back(&b.conf_logits[i][k]);
          analytic.push_back(g.d_conf_logits[i][k]);
        }
        for (int k = 0; k < 4; ++k) {
          params.push_back(field(b.bev_pred[i], k));
          analytic.push_back(g.d_bev_pred[i].as_array()[k]);
        }
        for (int v = 0; v < views; ++v) {
          for (int k = 0; k < 4; ++k) {
            params.push_back(field(b.view_pred[v][i], k));
            analytic.push_back(g.d_view_pred[v][i].as_array()[k]);
          }
        }
      }
      rep.ppn = std::max(rep.ppn, fd_check([&] { return ppn_loss(b); }, params, analytic, h));
    }
    {
      MBONBatch b;
      const int views = small(rng) % 3 + 1;
      const int n_bins = small(rng) + 1;
      b.views.resize(views);
      for (auto& v : b.views) {
        const int boxes = small(rng) + 1;
        for (int i = 0; i < boxes; ++i) {
          v.labels.push_back(i == 0 ? 1 : static_cast<int>(rng() & 1U));
          v.conf_logits.push_back({logit(rng), logit(rng)});
          v.bin_labels.push_back(std::uniform_int_distribution<int>(0, n_bins - 1)(rng));
          std::vector<double> zl(n_bins), op(n_bins);
          for (double& z : zl) z = logit(rng);
          const double og = logit(rng);
          for (double& o : op) o = og + angle_residual(rng);
          v.bin_logits.push_back(zl);
          v.offset_gt.push_back(og);
          v.offset_pred.push_back(op);
        }
      }
      const MBONGrad g = mbon_loss_grad(b);
      std::vector<double*> params;
      std::vector<double> analytic;
      for (std::size_t vi = 0; vi < b.views.size(); ++vi) {
        auto& v = b.views[vi];
        for (std::size_t i = 0; i < v.labels.size(); ++i) {
          for (int k = 0; k < 2; ++k) {
            params.push_back(&v.conf_logits[i][k]);
            analytic.push_back(g.views[vi].d_conf_logits[i][k]);
          }
          for (std::size_t k = 0; k < v.bin_logits[i].size(); ++k) {
            params.push_back(&v.bin_logits[i][k]);
            analytic.push_back(g.views[vi].d_bin_logits[i][k]);
            params.push_back(&v.offset_pred[i][k]);
            analytic.push_back(g.views[vi].d_offset_pred[i][k]);
          }
        }
      }
      rep.mbon = std::max(rep.mbon, fd_check([&] { return mbon_loss(b); }, params, analytic, h));
    }
  }
  return rep;
}

}  // namespace mvbev
