#include "ballchain/kernels.hpp"

#include <cmath>

namespace ballchain::kernels {

void dipole_sum_scalar(const SourceArrays& src, const double probe[3], double out[3]) {
  double bx = 0.0, by = 0.0, bz = 0.0;
  for (std::size_t i = 0; i < src.count; ++i) {
    const double rx = probe[0] - src.x[i];
    const double ry = probe[1] - src.y[i];
    const double rz = probe[2] - src.z[i];
    const double r2 = rx * rx + ry * ry + rz * rz;
    const double inv_r = 1.0 / std::sqrt(r2);
    const double inv_r2 = inv_r * inv_r;
    const double inv_r3 = inv_r2 * inv_r;
    const double rdm = rx * src.mx[i] + ry * src.my[i] + rz * src.mz[i];
    const double s = 3.0 * rdm * inv_r2;
    bx += (s * rx - src.mx[i]) * inv_r3;
    by += (s * ry - src.my[i]) * inv_r3;
    bz += (s * rz - src.mz[i]) * inv_r3;
  }
  out[0] = bx;
  out[1] = by;
  out[2] = bz;
}

}  // namespace ballchain::kernels
