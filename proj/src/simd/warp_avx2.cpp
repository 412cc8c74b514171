// Compiled with -mavx2 only; never with -mfma, so products and sums round
// separately exactly as in the scalar kernel.
#include <immintrin.h>

#include "mvbev/simd/warp_kernels.hpp"

namespace mvbev::simd {

void warp_rows_avx2(const WarpParams& p, const double* src, double* dst, int row_begin,
                    int row_end) {
  const int ch_count = p.channels;
  const int vec_cols = p.out_cols & ~3;

  const __m256d h0 = _mm256_set1_pd(p.H[0]), h1 = _mm256_set1_pd(p.H[1]), h2 = _mm256_set1_pd(p.H[2]);
  const __m256d h3 = _mm256_set1_pd(p.H[3]), h4 = _mm256_set1_pd(p.H[4]), h5 = _mm256_set1_pd(p.H[5]);
  const __m256d h6 = _mm256_set1_pd(p.H[6]), h7 = _mm256_set1_pd(p.H[7]), h8 = _mm256_set1_pd(p.H[8]);
  const __m256d ox = _mm256_set1_pd(p.origin_x);
  const __m256d cx = _mm256_set1_pd(p.cell_x);
  const __m256d su = _mm256_set1_pd(p.scale_u);
  const __m256d sv = _mm256_set1_pd(p.scale_v);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d neg_half = _mm256_set1_pd(-0.5);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d zero = _mm256_setzero_pd();
  const __m256d u_lim = _mm256_set1_pd(p.src_cols - 0.5);
  const __m256d v_lim = _mm256_set1_pd(p.src_rows - 0.5);
  const __m128i col_max = _mm_set1_epi32(p.src_cols - 1);
  const __m128i row_max = _mm_set1_epi32(p.src_rows - 1);
  const __m128i izero = _mm_setzero_si128();
  const __m128i ione = _mm_set1_epi32(1);
  const __m128i src_cols = _mm_set1_epi32(p.src_cols);
  const __m128i channels = _mm_set1_epi32(ch_count);

  alignas(32) double lane[4];

  for (int r = row_begin; r < row_end; ++r) {
    const double y_s = p.origin_y + static_cast<double>(r) * p.cell_y;
    const __m256d y = _mm256_set1_pd(y_s);
    double* out_row = dst + static_cast<long>(r) * p.out_cols * ch_count;

    int c = 0;
    for (; c < vec_cols; c += 4) {
      const __m256d cidx = _mm256_set_pd(c + 3.0, c + 2.0, c + 1.0, static_cast<double>(c));
      const __m256d x = _mm256_add_pd(ox, _mm256_mul_pd(cidx, cx));

      __m256d hu = _mm256_mul_pd(h0, x);
      hu = _mm256_add_pd(hu, _mm256_mul_pd(h1, y));
      hu = _mm256_add_pd(hu, h2);
      __m256d hv = _mm256_mul_pd(h3, x);
      hv = _mm256_add_pd(hv, _mm256_mul_pd(h4, y));
      hv = _mm256_add_pd(hv, h5);
      __m256d hw = _mm256_mul_pd(h6, x);
      hw = _mm256_add_pd(hw, _mm256_mul_pd(h7, y));
      hw = _mm256_add_pd(hw, h8);

      const __m256d u = _mm256_div_pd(hu, hw);
      const __m256d v = _mm256_div_pd(hv, hw);
      const __m256d fu = _mm256_sub_pd(_mm256_mul_pd(_mm256_add_pd(u, half), su), half);
      const __m256d fv = _mm256_sub_pd(_mm256_mul_pd(_mm256_add_pd(v, half), sv), half);

      __m256d inside = _mm256_cmp_pd(hw, zero, _CMP_GT_OQ);
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(fu, neg_half, _CMP_GE_OQ));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(fu, u_lim, _CMP_LT_OQ));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(fv, neg_half, _CMP_GE_OQ));
      inside = _mm256_and_pd(inside, _mm256_cmp_pd(fv, v_lim, _CMP_LT_OQ));

      double* out = out_row + static_cast<long>(c) * ch_count;
      if (_mm256_movemask_pd(inside) == 0) {
        for (int k = 0; k < 4 * ch_count; ++k) out[k] = 0.0;
        continue;
      }

      const __m256d x0f = _mm256_floor_pd(fu);
      const __m256d y0f = _mm256_floor_pd(fv);
      const __m256d ax = _mm256_sub_pd(fu, x0f);
      const __m256d ay = _mm256_sub_pd(fv, y0f);

      // Out-of-view lanes may hold NaN/inf; the conversion yields INT_MIN and
      // the clamp keeps the gather in bounds. Their results are masked below.
      const __m128i x0i = _mm256_cvttpd_epi32(x0f);
      const __m128i y0i = _mm256_cvttpd_epi32(y0f);
      const __m128i x0 = _mm_min_epi32(_mm_max_epi32(x0i, izero), col_max);
      const __m128i x1 = _mm_min_epi32(_mm_max_epi32(_mm_add_epi32(x0i, ione), izero), col_max);
      const __m128i y0 = _mm_min_epi32(_mm_max_epi32(y0i, izero), row_max);
      const __m128i y1 = _mm_min_epi32(_mm_max_epi32(_mm_add_epi32(y0i, ione), izero), row_max);

      const __m128i i00 = _mm_mullo_epi32(_mm_add_epi32(_mm_mullo_epi32(y0, src_cols), x0), channels);
      const __m128i i01 = _mm_mullo_epi32(_mm_add_epi32(_mm_mullo_epi32(y0, src_cols), x1), channels);
      const __m128i i10 = _mm_mullo_epi32(_mm_add_epi32(_mm_mullo_epi32(y1, src_cols), x0), channels);
      const __m128i i11 = _mm_mullo_epi32(_mm_add_epi32(_mm_mullo_epi32(y1, src_cols), x1), channels);

      const __m256d one_ax = _mm256_sub_pd(one, ax);
      const __m256d one_ay = _mm256_sub_pd(one, ay);
      const __m256d w00 = _mm256_mul_pd(one_ax, one_ay);
      const __m256d w01 = _mm256_mul_pd(ax, one_ay);
      const __m256d w10 = _mm256_mul_pd(one_ax, ay);
      const __m256d w11 = _mm256_mul_pd(ax, ay);

      for (int ch = 0; ch < ch_count; ++ch) {
        const double* base = src + ch;
        const __m256d f00 = _mm256_i32gather_pd(base, i00, 8);
        const __m256d f01 = _mm256_i32gather_pd(base, i01, 8);
        const __m256d f10 = _mm256_i32gather_pd(base, i10, 8);
        const __m256d f11 = _mm256_i32gather_pd(base, i11, 8);
        __m256d val = _mm256_mul_pd(w00, f00);
        val = _mm256_add_pd(val, _mm256_mul_pd(w01, f01));
        val = _mm256_add_pd(val, _mm256_mul_pd(w10, f10));
        val = _mm256_add_pd(val, _mm256_mul_pd(w11, f11));
        val = _mm256_blendv_pd(zero, val, inside);
        _mm256_store_pd(lane, val);
        out[ch] = lane[0];
        out[ch_count + ch] = lane[1];
        out[2 * ch_count + ch] = lane[2];
        out[3 * ch_count + ch] = lane[3];
      }
    }

    for (; c < p.out_cols; ++c) {
      warp_cell_scalar(p, src, r, c, out_row + static_cast<long>(c) * ch_count);
    }
  }
}

}  // namespace mvbev::simd
