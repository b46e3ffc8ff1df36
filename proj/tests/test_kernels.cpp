#include "ballchain/kernels.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <stdexcept>

using namespace ballchain::kernels;

namespace {

struct BackendGuard {
  Backend saved = active_backend();
  ~BackendGuard() { set_backend(saved); }
};

SourceBuffer random_sources(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> pos(-0.1, 0.1), mom(-0.2, 0.2);
  SourceBuffer buf;
  buf.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const double p[3] = {pos(rng), pos(rng), pos(rng) + 0.3};
    const double m[3] = {mom(rng), mom(rng), mom(rng)};
    buf.set(i, p, m);
  }
  return buf;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("scalar kernel single axial dipole") {
  SourceBuffer buf;
  buf.resize(1);
  const double p[3] = {0, 0, 0}, m[3] = {0, 0, 2.0};
  buf.set(0, p, m);
  const double probe[3] = {0, 0, 0.5};
  double out[3];
  dipole_sum_scalar(buf.view(), probe, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);
  CHECK(out[2] == doctest::Approx(2.0 * 2.0 / 0.125));
}

TEST_CASE("every supported backend matches the scalar reference") {
  std::mt19937_64 rng(7);
  const auto backends = supported_backends();
  CHECK(std::find(backends.begin(), backends.end(), Backend::scalar) != backends.end());
  for (std::size_t count : {0u, 1u, 3u, 4u, 5u, 8u, 10u, 17u, 64u}) {
    const SourceBuffer buf = random_sources(count, rng);
    for (int t = 0; t < 20; ++t) {
      const double probe[3] = {std::uniform_real_distribution<double>(-0.05, 0.05)(rng),
                               std::uniform_real_distribution<double>(-0.05, 0.05)(rng), 0.0};
      double ref[3];
      dipole_sum_scalar(buf.view(), probe, ref);
      const double scale = std::sqrt(ref[0] * ref[0] + ref[1] * ref[1] + ref[2] * ref[2]);
      for (Backend b : backends) {
        BackendGuard guard;
        set_backend(b);
        double got[3];
        dipole_sum(buf.view(), probe, got);
        for (int a = 0; a < 3; ++a) {
          CAPTURE(backend_name(b));
          CAPTURE(count);
          CHECK(std::abs(got[a] - ref[a]) <= 1e-13 * std::max(scale, 1e-300) + 1e-300);
        }
      }
    }
  }
}

TEST_CASE("backend names round trip") {
  for (Backend b : {Backend::scalar, Backend::avx2, Backend::neon}) {
    Backend parsed = Backend::scalar;
    CHECK(parse_backend(backend_name(b), parsed));
    CHECK(parsed == b);
  }
  Backend unused;
  CHECK_FALSE(parse_backend("sse9", unused));
}

TEST_CASE("selecting an unsupported backend throws") {
  for (Backend b : {Backend::avx2, Backend::neon}) {
    if (!backend_supported(b)) CHECK_THROWS_AS(set_backend(b), std::invalid_argument);
  }
  BackendGuard guard;
  set_backend(Backend::scalar);
  CHECK(active_backend() == Backend::scalar);
}

}  // TEST_SUITE
