#pragma once

#include "ballchain/field.hpp"

#include <optional>
#include <string_view>

namespace ballchain {

/// Four sensors at 40.5 mm * rot_z(j * 90 deg) * e1 in the z = 0 plane,
/// axis-aligned.
std::vector<SensorSpec> square_sensor_array(double radius = 40.5e-3);

/// Straight chain pointing at the sensor plane (-z); the proximal ball sits
/// 150 mm above the array centre.
SceneSpec config_one_scene();

/// Straight chain parallel to the sensor plane (+x) at 150 mm height,
/// proximal ball above the array centre. phi = 0 bends toward the sensors,
/// phi = 180 deg away, phi = +-90 deg parallel to the plane.
SceneSpec config_two_scene();

/// "config-I" / "config-II".
std::optional<SceneSpec> preset_scene(std::string_view name);

}  // namespace ballchain
