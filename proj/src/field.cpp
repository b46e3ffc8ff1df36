#include "ballchain/field.hpp"

#include "ballchain/errors.hpp"
#include "ballchain/kernels.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace ballchain {

void SceneSpec::validate() const {
  chain.validate();
  base.validate("base.rotation");
  if (sensors.empty()) throw ConfigError("sensors: at least one sensor is required");
  for (std::size_t j = 0; j < sensors.size(); ++j) {
    const std::string field = "sensors[" + std::to_string(j) + "]";
    if (!sensors[j].position.allFinite()) throw ConfigError(field + ".position must be finite");
    if (!is_rotation(sensors[j].rotation)) {
      throw ConfigError(field + ".rotation is not a proper rotation (orthonormal, det +1)");
    }
    for (std::size_t k = 0; k < j; ++k) {
      if (sensors[k].position == sensors[j].position) {
        throw ConfigError(field + ".position duplicates sensors[" + std::to_string(k) + "]");
      }
    }
  }
}

Vec3 dipole_field(const Vec3& source_pos, const Vec3& moment, const Vec3& probe_pos) {
  const Vec3 r = probe_pos - source_pos;
  const double dist = r.norm();
  if (!(dist > 0.0)) throw ModelError("dipole_field: source and probe coincide");
  const Vec3 r_hat = r / dist;
  return kMu0Over4Pi / (dist * dist * dist) * (3.0 * r_hat * r_hat.dot(moment) - moment);
}

MeasurementVector measurement_from_state(const SceneSpec& scene, const ChainState& state) {
  const std::size_t n = state.positions.size();
  const std::size_t m = scene.sensors.size();

  kernels::SourceBuffer sources;
  sources.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    sources.set(i, state.positions[i].data(), state.moments[i].data());
  }
  const kernels::SourceArrays view = sources.view();

  MeasurementVector q(3 * m);
  for (std::size_t j = 0; j < m; ++j) {
    const Vec3& probe = scene.sensors[j].position;
    for (std::size_t i = 0; i < n; ++i) {
      if (!((state.positions[i] - probe).squaredNorm() > 0.0)) {
        throw ModelError("ball " + std::to_string(i + 1) + " coincides with sensor " +
                         std::to_string(j));
      }
    }
    Vec3 global;
    kernels::dipole_sum(view, probe.data(), global.data());
    q.segment<3>(static_cast<Eigen::Index>(3 * j)) =
        scene.sensors[j].rotation.transpose() * (kMu0Over4Pi * global);
  }
  return q;
}

MeasurementVector forward_measurement(const SceneSpec& scene, const BendConfig& gamma) {
  return measurement_from_state(scene, chain_state(scene.chain, scene.base, gamma));
}

Jacobian measurement_jacobian(const SceneSpec& scene, const BendConfig& gamma, double h) {
  Jacobian jac(static_cast<Eigen::Index>(scene.channel_count()), 2);
  for (int a = 0; a < 2; ++a) {
    Vec2 step = Vec2::Zero();
    step[a] = h;
    const MeasurementVector plus = forward_measurement(scene, BendConfig(gamma.vector() + step));
    const MeasurementVector minus = forward_measurement(scene, BendConfig(gamma.vector() - step));
    jac.col(a) = -(plus - minus) / (2.0 * h);
  }
  return jac;
}

double min_ball_sensor_distance(const SceneSpec& scene, const std::vector<BendConfig>& workspace) {
  double best = std::numeric_limits<double>::infinity();
  for (const BendConfig& gamma : workspace) {
    const ChainState state = chain_state(scene.chain, scene.base, gamma);
    for (const Vec3& p : state.positions) {
      for (const SensorSpec& s : scene.sensors) best = std::min(best, (p - s.position).norm());
    }
  }
  return best;
}

void validate_workspace(const SceneSpec& scene, const std::vector<BendConfig>& workspace) {
  const double closest = min_ball_sensor_distance(scene, workspace);
  if (!(closest > 0.5 * scene.chain.d)) {
    throw ModelError("a ball comes within d/2 of a sensor in the declared workspace (closest " +
                     std::to_string(closest * 1e3) + " mm)");
  }
}

}  // namespace ballchain
