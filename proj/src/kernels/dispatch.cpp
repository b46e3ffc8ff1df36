#include "ballchain/kernels.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace ballchain::kernels {

void SourceBuffer::resize(std::size_t count) {
  x_.assign(count, 0.0);
  y_.assign(count, 0.0);
  z_.assign(count, 0.0);
  mx_.assign(count, 0.0);
  my_.assign(count, 0.0);
  mz_.assign(count, 0.0);
}

void SourceBuffer::set(std::size_t i, const double position[3], const double moment[3]) {
  x_[i] = position[0];
  y_[i] = position[1];
  z_[i] = position[2];
  mx_[i] = moment[0];
  my_[i] = moment[1];
  mz_[i] = moment[2];
}

SourceArrays SourceBuffer::view() const {
  return {x_.data(), y_.data(), z_.data(), mx_.data(), my_.data(), mz_.data(), x_.size()};
}

std::string_view backend_name(Backend backend) {
  switch (backend) {
    case Backend::scalar: return "scalar";
    case Backend::avx2: return "avx2";
    case Backend::neon: return "neon";
  }
  return "unknown";
}

bool parse_backend(std::string_view name, Backend& out) {
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (name == backend_name(b)) {
      out = b;
      return true;
    }
  }
  return false;
}

bool backend_supported(Backend backend) {
  switch (backend) {
    case Backend::scalar:
      return true;
    case Backend::avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
      return false;
#endif
    case Backend::neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

std::vector<Backend> supported_backends() {
  std::vector<Backend> out;
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    if (backend_supported(b)) out.push_back(b);
  }
  return out;
}

namespace {

Backend detect() {
  if (const char* env = std::getenv("BALLCHAIN_KERNEL")) {
    Backend requested;
    if (parse_backend(env, requested) && backend_supported(requested)) return requested;
  }
  if (backend_supported(Backend::avx2)) return Backend::avx2;
  if (backend_supported(Backend::neon)) return Backend::neon;
  return Backend::scalar;
}

using KernelFn = void (*)(const SourceArrays&, const double*, double*);

KernelFn kernel_for(Backend backend) {
  switch (backend) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::avx2: return &dipole_sum_avx2;
#endif
#if defined(__aarch64__)
    case Backend::neon: return &dipole_sum_neon;
#endif
    default: return &dipole_sum_scalar;
  }
}

struct Dispatch {
  std::atomic<Backend> backend;
  std::atomic<KernelFn> fn;
  Dispatch() : backend(detect()), fn(kernel_for(backend.load())) {}
};

Dispatch& dispatch() {
  static Dispatch instance;
  return instance;
}

}  // namespace

Backend active_backend() { return dispatch().backend.load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!backend_supported(backend)) {
    throw std::invalid_argument("kernel backend not supported here: " +
                                std::string(backend_name(backend)));
  }
  dispatch().backend.store(backend, std::memory_order_relaxed);
  dispatch().fn.store(kernel_for(backend), std::memory_order_relaxed);
}

void dipole_sum(const SourceArrays& src, const double probe[3], double out[3]) {
  dispatch().fn.load(std::memory_order_relaxed)(src, probe, out);
}

}  // namespace ballchain::kernels
