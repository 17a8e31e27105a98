#pragma once

// JSON round-trips for the wire formats: cameras, rigs, scenes, reports.

#include <json.hpp>

#include "splatfit/camera.hpp"
#include "splatfit/rig.hpp"
#include "splatfit/scene.hpp"

namespace splatfit {

/// {width, height, fov_y_deg, rotation: 9 row-major reals, position: [x,y,z]}
nlohmann::json camera_to_json(const Camera& cam);
Camera camera_from_json(const nlohmann::json& j);

nlohmann::json rig_spec_to_json(const RigSpec& spec);
RigSpec rig_spec_from_json(const nlohmann::json& j);

nlohmann::json rig_to_json(const CameraRig& rig);

nlohmann::json scene_to_json(const CapsuleScene& scene);
CapsuleScene scene_from_json(const nlohmann::json& j);

}  // namespace splatfit
