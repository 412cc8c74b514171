#include <algorithm>
#include <cmath>

#include "mvbev/simd/warp_kernels.hpp"

namespace mvbev::simd {

void warp_cell_scalar(const WarpParams& p, const double* src, int r, int c, double* out) {
  const int ch_count = p.channels;
  const double y = p.origin_y + static_cast<double>(r) * p.cell_y;
  const double x = p.origin_x + static_cast<double>(c) * p.cell_x;

  double hu = p.H[0] * x;
  hu = hu + p.H[1] * y;
  hu = hu + p.H[2];
  double hv = p.H[3] * x;
  hv = hv + p.H[4] * y;
  hv = hv + p.H[5];
  double hw = p.H[6] * x;
  hw = hw + p.H[7] * y;
  hw = hw + p.H[8];

  const double u = hu / hw;
  const double v = hv / hw;
  const double fu = (u + 0.5) * p.scale_u - 0.5;
  const double fv = (v + 0.5) * p.scale_v - 0.5;
  const bool inside = hw > 0.0 && fu >= -0.5 && fu < p.src_cols - 0.5 && fv >= -0.5 &&
                      fv < p.src_rows - 0.5;
  if (!inside) {
    std::fill(out, out + ch_count, 0.0);
    return;
  }

  const double x0f = std::floor(fu);
  const double y0f = std::floor(fv);
  const double ax = fu - x0f;
  const double ay = fv - y0f;
  const int x0 = std::clamp(static_cast<int>(x0f), 0, p.src_cols - 1);
  const int x1 = std::clamp(static_cast<int>(x0f) + 1, 0, p.src_cols - 1);
  const int y0 = std::clamp(static_cast<int>(y0f), 0, p.src_rows - 1);
  const int y1 = std::clamp(static_cast<int>(y0f) + 1, 0, p.src_rows - 1);

  const double one_ax = 1.0 - ax;
  const double one_ay = 1.0 - ay;
  const double w00 = one_ax * one_ay;
  const double w01 = ax * one_ay;
  const double w10 = one_ax * ay;
  const double w11 = ax * ay;

  const double* f00 = src + (static_cast<long>(y0) * p.src_cols + x0) * ch_count;
  const double* f01 = src + (static_cast<long>(y0) * p.src_cols + x1) * ch_count;
  const double* f10 = src + (static_cast<long>(y1) * p.src_cols + x0) * ch_count;
  const double* f11 = src + (static_cast<long>(y1) * p.src_cols + x1) * ch_count;
  for (int ch = 0; ch < ch_count; ++ch) {
    double val = w00 * f00[ch];
    val = val + w01 * f01[ch];
    val = val + w10 * f10[ch];
    val = val + w11 * f11[ch];
    out[ch] = val;
  }
}

void warp_rows_scalar(const WarpParams& p, const double* src, double* dst, int row_begin,
                      int row_end) {
  for (int r = row_begin; r < row_end; ++r) {
    double* out_row = dst + static_cast<long>(r) * p.out_cols * p.channels;
    for (int c = 0; c < p.out_cols; ++c) {
      warp_cell_scalar(p, src, r, c, out_row + static_cast<long>(c) * p.channels);
    }
  }
}

}  // namespace mvbev::simd
