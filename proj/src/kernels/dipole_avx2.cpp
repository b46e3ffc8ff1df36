#include "ballchain/kernels.hpp"

#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

// Compiled with a function-level target so the rest of the TU (and any inline
// template instantiated here) stays baseline x86-64.
#define BALLCHAIN_AVX2 __attribute__((target("avx2,fma")))

namespace ballchain::kernels {

namespace {

BALLCHAIN_AVX2 inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d pair = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(pair, _mm_unpackhi_pd(pair, pair)));
}

}  // namespace

BALLCHAIN_AVX2 void dipole_sum_avx2(const SourceArrays& src, const double probe[3], double out[3]) {
  const __m256d px = _mm256_set1_pd(probe[0]);
  const __m256d py = _mm256_set1_pd(probe[1]);
  const __m256d pz = _mm256_set1_pd(probe[2]);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d three = _mm256_set1_pd(3.0);

  __m256d bx = _mm256_setzero_pd();
  __m256d by = _mm256_setzero_pd();
  __m256d bz = _mm256_setzero_pd();

  std::size_t i = 0;
  for (; i + 4 <= src.count; i += 4) {
    const __m256d rx = _mm256_sub_pd(px, _mm256_loadu_pd(src.x + i));
    const __m256d ry = _mm256_sub_pd(py, _mm256_loadu_pd(src.y + i));
    const __m256d rz = _mm256_sub_pd(pz, _mm256_loadu_pd(src.z + i));
    const __m256d mx = _mm256_loadu_pd(src.mx + i);
    const __m256d my = _mm256_loadu_pd(src.my + i);
    const __m256d mz = _mm256_loadu_pd(src.mz + i);

    const __m256d r2 = _mm256_fmadd_pd(rz, rz, _mm256_fmadd_pd(ry, ry, _mm256_mul_pd(rx, rx)));
    const __m256d inv_r = _mm256_div_pd(one, _mm256_sqrt_pd(r2));
    const __m256d inv_r2 = _mm256_mul_pd(inv_r, inv_r);
    const __m256d inv_r3 = _mm256_mul_pd(inv_r2, inv_r);
    const __m256d rdm = _mm256_fmadd_pd(rz, mz, _mm256_fmadd_pd(ry, my, _mm256_mul_pd(rx, mx)));
    const __m256d s = _mm256_mul_pd(_mm256_mul_pd(three, rdm), inv_r2);

    bx = _mm256_fmadd_pd(_mm256_fmsub_pd(s, rx, mx), inv_r3, bx);
    by = _mm256_fmadd_pd(_mm256_fmsub_pd(s, ry, my), inv_r3, by);
    bz = _mm256_fmadd_pd(_mm256_fmsub_pd(s, rz, mz), inv_r3, bz);
  }

  double sx = hsum(bx), sy = hsum(by), sz = hsum(bz);
  for (; i < src.count; ++i) {
    const double rx = probe[0] - src.x[i];
    const double ry = probe[1] - src.y[i];
    const double rz = probe[2] - src.z[i];
    const double r2 = rx * rx + ry * ry + rz * rz;
    const double inv_r = 1.0 / std::sqrt(r2);
    const double inv_r2 = inv_r * inv_r;
    const double inv_r3 = inv_r2 * inv_r;
    const double s = 3.0 * (rx * src.mx[i] + ry * src.my[i] + rz * src.mz[i]) * inv_r2;
    sx += (s * rx - src.mx[i]) * inv_r3;
    sy += (s * ry - src.my[i]) * inv_r3;
    sz += (s * rz - src.mz[i]) * inv_r3;
  }
  out[0] = sx;
  out[1] = sy;
  out[2] = sz;
}

}  // namespace ballchain::kernels

#endif
