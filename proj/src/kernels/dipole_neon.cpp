#include "ballchain/kernels.hpp"

#if defined(__aarch64__)

#include <arm_neon.h>

#include <cmath>

namespace ballchain::kernels {

void dipole_sum_neon(const SourceArrays& src, const double probe[3], double out[3]) {
  const float64x2_t px = vdupq_n_f64(probe[0]);
  const float64x2_t py = vdupq_n_f64(probe[1]);
  const float64x2_t pz = vdupq_n_f64(probe[2]);
  const float64x2_t one = vdupq_n_f64(1.0);
  const float64x2_t three = vdupq_n_f64(3.0);

  float64x2_t bx = vdupq_n_f64(0.0);
  float64x2_t by = vdupq_n_f64(0.0);
  float64x2_t bz = vdupq_n_f64(0.0);

  std::size_t i = 0;
  for (; i + 2 <= src.count; i += 2) {
    const float64x2_t rx = vsubq_f64(px, vld1q_f64(src.x + i));
    const float64x2_t ry = vsubq_f64(py, vld1q_f64(src.y + i));
    const float64x2_t rz = vsubq_f64(pz, vld1q_f64(src.z + i));
    const float64x2_t mx = vld1q_f64(src.mx + i);
    const float64x2_t my = vld1q_f64(src.my + i);
    const float64x2_t mz = vld1q_f64(src.mz + i);

    const float64x2_t r2 = vfmaq_f64(vfmaq_f64(vmulq_f64(rx, rx), ry, ry), rz, rz);
    const float64x2_t inv_r = vdivq_f64(one, vsqrtq_f64(r2));
    const float64x2_t inv_r2 = vmulq_f64(inv_r, inv_r);
    const float64x2_t inv_r3 = vmulq_f64(inv_r2, inv_r);
    const float64x2_t rdm = vfmaq_f64(vfmaq_f64(vmulq_f64(rx, mx), ry, my), rz, mz);
    const float64x2_t s = vmulq_f64(vmulq_f64(three, rdm), inv_r2);

    // s*r - m, then accumulate with a fused multiply-add.
    bx = vfmaq_f64(bx, vsubq_f64(vmulq_f64(s, rx), mx), inv_r3);
    by = vfmaq_f64(by, vsubq_f64(vmulq_f64(s, ry), my), inv_r3);
    bz = vfmaq_f64(bz, vsubq_f64(vmulq_f64(s, rz), mz), inv_r3);
  }

  double sx = vaddvq_f64(bx), sy = vaddvq_f64(by), sz = vaddvq_f64(bz);
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
