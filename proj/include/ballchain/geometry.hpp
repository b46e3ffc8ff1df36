#pragma once

// Constant-curvature kinematics of a magnetic ball chain.
//
// A single bending section is described by the bend vector
//   gamma = psi * (-sin(phi), cos(phi))
// where psi is the total bend angle and phi the bending-plane angle. Ball i
// (1-based) sits at
//   p_i = p0 + R_B * sum_{k=1..i} exp([gamma]^ k/n) * d * e3
// and carries a dipole of constant magnitude tangent to the curve,
//   mu_i = R_B * exp([gamma]^ i/n) * mu * e3.
//
// All quantities are SI: metres, radians, A*m^2.

#include <Eigen/Core>

#include <numbers>
#include <vector>

namespace ballchain {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Two-parameter bending state. The stored vector may lie outside the
/// canonical disc (|gamma| <= pi) while a solver or finite-difference probe
/// is working with it; canonical() projects it back.
class BendConfig {
 public:
  BendConfig() = default;
  explicit BendConfig(const Vec2& gamma) : gamma_(gamma) {}
  BendConfig(double gamma1, double gamma2) : gamma_(gamma1, gamma2) {}

  const Vec2& vector() const { return gamma_; }
  double psi() const { return gamma_.norm(); }

  /// Same bend with |gamma| clamped to pi.
  BendConfig canonical() const;
  bool is_canonical() const { return psi() <= kPi * (1.0 + 4e-16); }

  friend bool operator==(const BendConfig&, const BendConfig&) = default;

 private:
  Vec2 gamma_ = Vec2::Zero();
};

struct BendAngles {
  double psi = 0.0;
  double phi = 0.0;
};

/// (psi, phi) -> canonical gamma. Negative psi maps to (-psi, phi + pi),
/// psi above pi is clamped to pi.
BendConfig bend_from_angles(double psi, double phi);

/// gamma -> (psi, phi) with phi in (-pi, pi]; phi is 0 for the straight chain.
BendAngles angles_from_bend(const BendConfig& gamma);

Mat3 skew(const Vec3& v);

/// Cross-product matrix of the extended vector (gamma1, gamma2, 0).
Mat3 bend_twist_matrix(const BendConfig& gamma);

/// exp([w]^) by the Rodrigues formula. Below 1e-8 rad the second-order
/// Taylor expansion I + W + W^2/2 is used.
Mat3 rotation_exp(const Vec3& axis_angle);

struct ChainSpec {
  int n = 10;         // ball count
  double d = 6.35e-3; // ball diameter [m]
  double mu = 0.0;    // dipole magnitude per ball [A m^2]

  double total_length() const { return n * d; }
  /// Throws ConfigError naming the offending field.
  void validate() const;
};

/// Dipole moment of a uniformly magnetised sphere, B_r * V / mu0.
double sphere_dipole_moment(double remanence_tesla, double diameter);

/// N42 remanence used for the default chain.
inline constexpr double kN42Remanence = 1.32;

/// Ten 6.35 mm N42 spheres.
ChainSpec default_chain();

struct FramePose {
  Vec3 position = Vec3::Zero();
  Mat3 rotation = Mat3::Identity();

  /// Throws ConfigError unless rotation is orthonormal with det +1 (1e-12).
  void validate(const char* field = "base.rotation") const;
};

bool is_rotation(const Mat3& r, double tol = 1e-12);

struct ChainState {
  std::vector<Vec3> positions; // ball centres, proximal first
  std::vector<Vec3> moments;
};

ChainState chain_state(const ChainSpec& spec, const FramePose& base, const BendConfig& gamma);

/// Position of the distal ball.
Vec3 tip_position(const ChainSpec& spec, const FramePose& base, const BendConfig& gamma);

inline double deg_to_rad(double deg) { return deg * kPi / 180.0; }
inline double rad_to_deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace ballchain
