#include "ballchain/geometry.hpp"

#include "ballchain/errors.hpp"

#include <cmath>
#include <Eigen/LU>

namespace ballchain {

namespace {
constexpr double kMu0 = 1.25663706212e-6;  // CODATA 2018
constexpr double kAngleEpsilon = 1e-9;
constexpr double kTaylorThreshold = 1e-8;
}  // namespace

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * kPi);  // [-pi, pi]
  if (wrapped <= -kPi) wrapped += 2.0 * kPi;
  return wrapped;
}

BendConfig BendConfig::canonical() const {
  const double psi = gamma_.norm();
  if (is_canonical()) return *this;
  return BendConfig(gamma_ * (kPi / psi));
}

BendConfig bend_from_angles(double psi, double phi) {
  if (psi < 0.0) {
    psi = -psi;
    phi += kPi;
  }
  if (psi == 0.0) return BendConfig();
  psi = std::min(psi, kPi);
  phi = wrap_angle(phi);
  return BendConfig(-psi * std::sin(phi), psi * std::cos(phi));
}

BendAngles angles_from_bend(const BendConfig& gamma) {
  const double psi = gamma.psi();
  if (psi <= kAngleEpsilon) return {psi, 0.0};
  return {psi, wrap_angle(std::atan2(-gamma.vector()[0], gamma.vector()[1]))};
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Mat3 bend_twist_matrix(const BendConfig& gamma) {
  return skew(Vec3(gamma.vector()[0], gamma.vector()[1], 0.0));
}

Mat3 rotation_exp(const Vec3& axis_angle) {
  const double theta = axis_angle.norm();
  const Mat3 w = skew(axis_angle);
  if (theta < kTaylorThreshold) {
    return Mat3::Identity() + w + 0.5 * w * w;
  }
  const Mat3 k = w / theta;
  return Mat3::Identity() + std::sin(theta) * k + (1.0 - std::cos(theta)) * k * k;
}

void ChainSpec::validate() const {
  if (n < 1) throw ConfigError("chain.n must be >= 1");
  if (!(d > 0.0) || !std::isfinite(d)) throw ConfigError("chain.d must be a positive length");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw ConfigError("chain.mu must be finite and >= 0");
}

double sphere_dipole_moment(double remanence_tesla, double diameter) {
  const double volume = kPi / 6.0 * diameter * diameter * diameter;
  return remanence_tesla * volume / kMu0;
}

ChainSpec default_chain() {
  ChainSpec spec;
  spec.n = 10;
  spec.d = 6.35e-3;
  spec.mu = sphere_dipole_moment(kN42Remanence, spec.d);
  return spec;
}

bool is_rotation(const Mat3& r, double tol) {
  if (!r.allFinite()) return false;
  if ((r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(r.determinant() - 1.0) <= tol;
}

void FramePose::validate(const char* field) const {
  if (!position.allFinite()) throw ConfigError(std::string(field) + ": position must be finite");
  if (!is_rotation(rotation)) {
    throw ConfigError(std::string(field) + " is not a proper rotation (orthonormal, det +1)");
  }
}

ChainState chain_state(const ChainSpec& spec, const FramePose& base, const BendConfig& gamma) {
  spec.validate();
  base.validate();

  const Vec3 axis(gamma.vector()[0], gamma.vector()[1], 0.0);
  const Vec3 e3 = Vec3::UnitZ();
  const auto count = static_cast<std::size_t>(spec.n);

  ChainState state;
  state.positions.reserve(count);
  state.moments.reserve(count);

  Vec3 offset = Vec3::Zero();
  for (int k = 1; k <= spec.n; ++k) {
    const Mat3 segment = rotation_exp(axis * (static_cast<double>(k) / spec.n));
    offset += segment * (spec.d * e3);
    state.positions.push_back(base.position + base.rotation * offset);
    state.moments.push_back(base.rotation * (segment * (spec.mu * e3)));
  }
  return state;
}

Vec3 tip_position(const ChainSpec& spec, const FramePose& base, const BendConfig& gamma) {
  return chain_state(spec, base, gamma).positions.back();
}

}  // namespace ballchain
