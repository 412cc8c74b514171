#pragma once

// Inner loops of the ground-plane inverse warp. Every variant must produce
// bit-identical output to warp_rows_scalar: same operation order, no FMA
// contraction, floor/convert semantics matched lane-for-lane.

namespace mvbev::simd {

struct WarpParams {
  // Plane-induced homography (row-major): pixel_h = H * (x, y, 1).
  double H[9];
  double origin_x;
  double origin_y;
  double cell_x;
  double cell_y;
  int out_rows;
  int out_cols;
  // Pixel -> source-grid coordinate scale (grid cols / image width, rows / height).
  double scale_u;
  double scale_v;
  int src_rows;
  int src_cols;
  int channels;
};

/// Reference computation for one output cell (r, c); writes `channels` values.
void warp_cell_scalar(const WarpParams& p, const double* src, int r, int c, double* out);

void warp_rows_scalar(const WarpParams& p, const double* src, double* dst, int row_begin,
                      int row_end);

#if defined(MVBEV_HAVE_AVX2)
void warp_rows_avx2(const WarpParams& p, const double* src, double* dst, int row_begin,
                    int row_end);
#endif

/// Runs the kernel selected by active_isa().
void warp_rows(const WarpParams& p, const double* src, double* dst, int row_begin, int row_end);

}  // namespace mvbev::simd
