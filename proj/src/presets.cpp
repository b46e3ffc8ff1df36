#include "ballchain/presets.hpp"

#include <cmath>

namespace ballchain {

namespace {

constexpr double kStandoff = 150e-3;

// Base position such that the proximal ball of the straight chain sits at
// the anchor point.
FramePose base_for_proximal_ball(const Vec3& anchor, const Mat3& rotation, double d) {
  FramePose pose;
  pose.rotation = rotation;
  pose.position = anchor - rotation * (d * Vec3::UnitZ());
  return pose;
}

}  // namespace

std::vector<SensorSpec> square_sensor_array(double radius) {
  std::vector<SensorSpec> sensors;
  // Exact quarter turns keep the coordinates symmetric to the last bit.
  const double cs[4][2] = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  for (const auto& c : cs) {
    SensorSpec s;
    s.position = Vec3(radius * c[0], radius * c[1], 0.0);
    sensors.push_back(s);
  }
  return sensors;
}

SceneSpec config_one_scene() {
  SceneSpec scene;
  scene.chain = default_chain();
  scene.sensors = square_sensor_array();
  Mat3 r;
  r << 1.0, 0.0, 0.0,
       0.0, -1.0, 0.0,
       0.0, 0.0, -1.0;
  scene.base = base_for_proximal_ball(Vec3(0.0, 0.0, kStandoff), r, scene.chain.d);
  return scene;
}

SceneSpec config_two_scene() {
  SceneSpec scene;
  scene.chain = default_chain();
  scene.sensors = square_sensor_array();
  Mat3 r;
  // columns: base e1 -> -z (toward the sensors), e2 -> +y, e3 -> +x
  r << 0.0, 0.0, 1.0,
       0.0, 1.0, 0.0,
       -1.0, 0.0, 0.0;
  scene.base = base_for_proximal_ball(Vec3(0.0, 0.0, kStandoff), r, scene.chain.d);
  return scene;
}

std::optional<SceneSpec> preset_scene(std::string_view name) {
  if (name == "config-I") return config_one_scene();
  if (name == "config-II") return config_two_scene();
  return std::nullopt;
}

}  // namespace ballchain
