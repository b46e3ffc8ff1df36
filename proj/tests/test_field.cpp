#include "ballchain/errors.hpp"
#include "ballchain/field.hpp"
#include "ballchain/presets.hpp"

#include <doctest.h>

#include <Eigen/Geometry>
#include <Eigen/SVD>

#include <cmath>

using namespace ballchain;

namespace {

constexpr double kMu0 = 1.25663706212e-6;

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

SceneSpec scaled(const SceneSpec& s, double k) {
  SceneSpec out = s;
  out.base.position *= k;
  out.chain.d *= k;
  for (auto& sensor : out.sensors) sensor.position *= k;
  return out;
}

SceneSpec rotated(const SceneSpec& s, const Mat3& r) {
  SceneSpec out = s;
  out.base.position = r * s.base.position;
  out.base.rotation = r * s.base.rotation;
  for (auto& sensor : out.sensors) {
    sensor.position = r * sensor.position;
    sensor.rotation = r * sensor.rotation;
  }
  return out;
}

// Second, independent Jacobian: one-sided differences.
Jacobian forward_difference_jacobian(const SceneSpec& scene, const BendConfig& g, double h) {
  const MeasurementVector q0 = forward_measurement(scene, g);
  Jacobian j(q0.size(), 2);
  for (int a = 0; a < 2; ++a) {
    Vec2 v = g.vector();
    v[a] += h;
    j.col(a) = -(forward_measurement(scene, BendConfig(v)) - q0) / h;
  }
  return j;
}

}  // namespace

TEST_SUITE("field") {

TEST_CASE("axial and equatorial dipole oracles") {
  const double m = 0.141;
  const double z = 0.15;
  const Vec3 axial = dipole_field(Vec3::Zero(), Vec3(0, 0, m), Vec3(0, 0, z));
  const double axial_oracle = kMu0 * 2.0 * m / (4.0 * kPi * z * z * z);
  CHECK(axial.x() == 0.0);
  CHECK(axial.y() == 0.0);
  CHECK(std::abs(axial.z() - axial_oracle) <= 1e-12 * axial_oracle);
  CHECK(axial.z() == doctest::Approx(8.36e-6).epsilon(1e-3));

  const Vec3 equatorial = dipole_field(Vec3::Zero(), Vec3(0, 0, m), Vec3(z, 0, 0));
  const double eq_oracle = -kMu0 * m / (4.0 * kPi * z * z * z);
  CHECK(std::abs(equatorial.z() - eq_oracle) <= 1e-12 * std::abs(eq_oracle));
  CHECK(std::abs(equatorial.x()) <= 1e-12 * std::abs(eq_oracle));

  // Off-axis source, oblique moment: compare with the textbook vector form.
  const Vec3 src(0.01, -0.02, 0.03), mom(0.05, -0.1, 0.07), probe(-0.04, 0.06, -0.02);
  const Vec3 r = probe - src;
  const Vec3 textbook = kMu0 / (4 * kPi) * (3.0 * r * r.dot(mom) / std::pow(r.norm(), 5) - mom / std::pow(r.norm(), 3));
  CHECK(rel(dipole_field(src, mom, probe), textbook) < 1e-12);
}

TEST_CASE("dipole field symmetries and errors") {
  CHECK(dipole_field(Vec3(1, 2, 3), Vec3::Zero(), Vec3(0, 0, 0)).isZero(0.0));
  const Vec3 src(0.01, 0.0, -0.02), m(0.1, 0.02, -0.05), r(0.03, -0.04, 0.05);
  CHECK((dipole_field(src, m, src + r) - dipole_field(src, m, src - r)).norm() == doctest::Approx(0.0));
  CHECK_THROWS_AS(dipole_field(src, m, src), ModelError);
}

TEST_CASE("zero moment and single ball") {
  SceneSpec scene = config_one_scene();
  scene.chain.mu = 0.0;
  CHECK(forward_measurement(scene, bend_from_angles(1.0, 0.5)).isZero(0.0));

  SceneSpec one = config_one_scene();
  one.chain.n = 1;
  const BendConfig g = bend_from_angles(0.8, -1.0);
  const ChainState state = chain_state(one.chain, one.base, g);
  const MeasurementVector q = forward_measurement(one, g);
  for (std::size_t j = 0; j < one.sensors.size(); ++j) {
    const Vec3 b = dipole_field(state.positions[0], state.moments[0], one.sensors[j].position);
    CHECK(rel(q.segment<3>(3 * static_cast<Eigen::Index>(j)), b) < 1e-14);
  }
}

TEST_CASE("superposition of single-ball contributions") {
  const SceneSpec scene = config_two_scene();
  const BendConfig g = bend_from_angles(1.3, 2.2);
  const ChainState state = chain_state(scene.chain, scene.base, g);
  MeasurementVector sum = MeasurementVector::Zero(static_cast<Eigen::Index>(scene.channel_count()));
  for (std::size_t i = 0; i < state.positions.size(); ++i) {
    ChainState single;
    single.positions = {state.positions[i]};
    single.moments = {state.moments[i]};
    sum += measurement_from_state(scene, single);
  }
  CHECK(rel(forward_measurement(scene, g), sum) < 1e-15 * 10);
}

TEST_CASE("straight chain over the array gives four equal magnitudes") {
  const SceneSpec scene = config_one_scene();
  const MeasurementVector q = forward_measurement(scene, BendConfig());
  const double m0 = q.segment<3>(0).norm();
  for (int j = 1; j < 4; ++j) CHECK(q.segment<3>(3 * j).norm() == doctest::Approx(m0).epsilon(1e-13));
  // Direct summation of the ten dipoles at sensor 0.
  const ChainState state = chain_state(scene.chain, scene.base, BendConfig());
  Vec3 b = Vec3::Zero();
  for (int i = 0; i < 10; ++i) b += dipole_field(state.positions[i], state.moments[i], scene.sensors[0].position);
  CHECK(rel(q.segment<3>(0), b) < 1e-13);
  // Regression value for the default scene (T).
  CHECK(m0 == doctest::Approx(1.0322e-5).epsilon(2e-3));
}

TEST_CASE("far-field scaling is s^-3") {
  const SceneSpec scene = config_one_scene();
  const BendConfig g = bend_from_angles(0.9, 0.4);
  const MeasurementVector q = forward_measurement(scene, g);
  for (double s : {0.5, 2.0, 3.0}) {
    CHECK(rel(forward_measurement(scaled(scene, s), g) * (s * s * s), q) < 1e-12);
  }
}

TEST_CASE("rotating the whole scene leaves sensor-frame readings unchanged") {
  const Mat3 r = Eigen::AngleAxisd(0.9, Vec3(1, -2, 0.5).normalized()).toRotationMatrix();
  for (const SceneSpec& scene : {config_one_scene(), config_two_scene()}) {
    const BendConfig g = bend_from_angles(2.0, -0.6);
    const MeasurementVector a = forward_measurement(scene, g);
    const MeasurementVector b = forward_measurement(rotated(scene, r), g);
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("sensor rotation expresses the field in the sensor frame") {
  SceneSpec scene = config_one_scene();
  const BendConfig g = bend_from_angles(0.7, 1.1);
  const MeasurementVector global = forward_measurement(scene, g);
  const Mat3 r = Eigen::AngleAxisd(kPi / 3, Vec3::UnitZ()).toRotationMatrix();
  scene.sensors[2].rotation = r;
  const MeasurementVector local = forward_measurement(scene, g);
  CHECK(rel(local.segment<3>(6), r.transpose() * global.segment<3>(6)) < 1e-14);
  CHECK(local.segment<3>(0) == global.segment<3>(0));
}

TEST_CASE("coincident ball and sensor is reported with indices") {
  SceneSpec scene = config_one_scene();
  const ChainState state = chain_state(scene.chain, scene.base, BendConfig());
  scene.sensors[1].position = state.positions[3];  // fourth ball, numbered from 1
  CHECK_THROWS_WITH_AS(forward_measurement(scene, BendConfig()), doctest::Contains("ball 4"), ModelError);
  CHECK_THROWS_WITH_AS(forward_measurement(scene, BendConfig()), doctest::Contains("sensor 1"), ModelError);
}

TEST_CASE("scene validation") {
  SceneSpec scene = config_one_scene();
  CHECK_NOTHROW(scene.validate());
  SceneSpec empty = scene;
  empty.sensors.clear();
  CHECK_THROWS_AS(empty.validate(), ConfigError);
  SceneSpec dup = scene;
  dup.sensors[1].position = dup.sensors[0].position;
  CHECK_THROWS_AS(dup.validate(), ConfigError);
  SceneSpec badrot = scene;
  badrot.sensors[2].rotation(0, 1) = 1e-6;
  CHECK_THROWS_WITH_AS(badrot.validate(), doctest::Contains("sensors[2].rotation"), ConfigError);
}

TEST_CASE("workspace clearance") {
  const SceneSpec scene = config_one_scene();
  std::vector<BendConfig> ws;
  for (int k = 0; k <= 6; ++k) ws.push_back(bend_from_angles(deg_to_rad(30.0 * k), 0.0));
  CHECK(min_ball_sensor_distance(scene, ws) > 0.05);
  CHECK_NOTHROW(validate_workspace(scene, ws));
  SceneSpec close = scene;
  close.sensors[0].position = Vec3::Zero();
  close.base.position.z() = 0.065;  // straight-chain tip 1.5 mm above sensor 0
  CHECK_THROWS_AS(validate_workspace(close, {BendConfig()}), ModelError);
}

TEST_CASE("finite-difference Jacobian consistency") {
  for (const SceneSpec& scene : {config_one_scene(), config_two_scene()}) {
    for (int i = 0; i < 12; i += 3) {
      for (int k = 1; k <= 5; k += 2) {
        const BendConfig g = bend_from_angles(deg_to_rad(30.0 * k), deg_to_rad(30.0 * i));
        const Jacobian j = measurement_jacobian(scene, g);
        CHECK(rel(measurement_jacobian(scene, g, 5e-7), j) < 1e-6);
        CHECK(rel(measurement_jacobian(scene, g, 1e-4), j) < 1e-4);
        CHECK(rel(forward_difference_jacobian(scene, g, 1e-7), j) < 1e-4);
      }
    }
  }
}

TEST_CASE("Jacobian is identical for equivalent angle representations") {
  const SceneSpec scene = config_two_scene();
  const BendConfig a = bend_from_angles(1.1, 0.5);
  const BendConfig b = bend_from_angles(1.1, 0.5 + 2 * kPi);
  CHECK((a.vector() - b.vector()).norm() < 1e-15);
  CHECK(rel(measurement_jacobian(scene, b), measurement_jacobian(scene, a)) < 1e-9);
  CHECK(measurement_jacobian(scene, a) == measurement_jacobian(scene, BendConfig(a.vector())));
}

TEST_CASE("straight chain facing the array is fully observable") {
  const Jacobian j = measurement_jacobian(config_one_scene(), BendConfig());
  const Eigen::Vector2d sv = Eigen::JacobiSVD<Jacobian>(j).singularValues();
  CHECK(sv[1] > 0.0);
  CHECK(sv[1] / sv[0] > 0.9);
}

}  // TEST_SUITE
