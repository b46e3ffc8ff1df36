#pragma once

// Forward measurement model: the field of every ball, treated as a point
// dipole, summed at each 3-axis sensor and expressed in the sensor frame.

#include "ballchain/geometry.hpp"

#include <Eigen/Core>

#include <vector>

namespace ballchain {

/// mu0 / (4 pi) in T m / A.
inline constexpr double kMu0Over4Pi = 1.25663706212e-6 / (4.0 * kPi);

struct SensorSpec {
  Vec3 position = Vec3::Zero();    // global frame [m]
  Mat3 rotation = Mat3::Identity(); // sensor frame -> global frame
};

struct SceneSpec {
  FramePose base;
  std::vector<SensorSpec> sensors;
  ChainSpec chain;

  std::size_t channel_count() const { return 3 * sensors.size(); }
  /// Structural checks: m >= 1, distinct sensor positions, proper rotations,
  /// valid chain. Throws ConfigError.
  void validate() const;
};

/// Stacked sensor readings (q_1; ...; q_m), Tesla.
using MeasurementVector = Eigen::VectorXd;

/// 3m x 2 matrix, Tesla per radian.
using Jacobian = Eigen::Matrix<double, Eigen::Dynamic, 2>;

/// Point-dipole field at probe_pos, mu0/(4 pi |r|^3) (3 r^ r^T - I) m.
/// Throws ModelError when source and probe coincide.
Vec3 dipole_field(const Vec3& source_pos, const Vec3& moment, const Vec3& probe_pos);

/// q(gamma). Throws ModelError naming the ball and sensor if any coincide.
MeasurementVector forward_measurement(const SceneSpec& scene, const BendConfig& gamma);

/// Readings for an already-evaluated chain state (same conventions as above).
MeasurementVector measurement_from_state(const SceneSpec& scene, const ChainState& state);

inline constexpr double kJacobianStep = 1e-6;

/// J(gamma) = -dq/dgamma by central differences with step h [rad].
Jacobian measurement_jacobian(const SceneSpec& scene, const BendConfig& gamma,
                              double h = kJacobianStep);

/// Smallest ball-to-sensor distance over the given bend configurations.
double min_ball_sensor_distance(const SceneSpec& scene, const std::vector<BendConfig>& workspace);

/// Throws ModelError if some ball comes within d/2 of a sensor anywhere in
/// the workspace.
void validate_workspace(const SceneSpec& scene, const std::vector<BendConfig>& workspace);

}  // namespace ballchain
