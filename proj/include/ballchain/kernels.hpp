#pragma once

// Dipole superposition kernels.
//
// Every variant computes, for one probe point,
//   S = sum_i (3 (r_i . m_i) r_i / |r_i|^2 - m_i) / |r_i|^3,   r_i = probe - p_i
// over structure-of-arrays source buffers. The mu0/(4 pi) prefactor is left
// to the caller. Sources must not coincide with the probe; callers check this
// before dispatching.
//
// The scalar kernel is the reference. SIMD variants reorder the summation
// (lane-wise partial sums) and may use fused multiply-add, so they agree with
// the reference to rounding, not bit-for-bit.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace ballchain::kernels {

struct SourceArrays {
  const double* x = nullptr;
  const double* y = nullptr;
  const double* z = nullptr;
  const double* mx = nullptr;
  const double* my = nullptr;
  const double* mz = nullptr;
  std::size_t count = 0;
};

/// Owning SoA buffer for a set of dipoles.
class SourceBuffer {
 public:
  void resize(std::size_t count);
  void set(std::size_t i, const double position[3], const double moment[3]);
  SourceArrays view() const;
  std::size_t size() const { return x_.size(); }

 private:
  std::vector<double> x_, y_, z_, mx_, my_, mz_;
};

enum class Backend { scalar, avx2, neon };

std::string_view backend_name(Backend backend);
bool parse_backend(std::string_view name, Backend& out);

void dipole_sum_scalar(const SourceArrays& src, const double probe[3], double out[3]);
#if defined(__x86_64__) || defined(_M_X64)
void dipole_sum_avx2(const SourceArrays& src, const double probe[3], double out[3]);
#endif
#if defined(__aarch64__)
void dipole_sum_neon(const SourceArrays& src, const double probe[3], double out[3]);
#endif

/// True when the variant was compiled in and the running CPU supports it.
bool backend_supported(Backend backend);
std::vector<Backend> supported_backends();

/// Widest supported backend, unless BALLCHAIN_KERNEL names another one.
Backend active_backend();

/// Forces a backend. Throws std::invalid_argument if it is unsupported.
/// Not synchronised with concurrent dipole_sum calls.
void set_backend(Backend backend);

void dipole_sum(const SourceArrays& src, const double probe[3], double out[3]);

}  // namespace ballchain::kernels
