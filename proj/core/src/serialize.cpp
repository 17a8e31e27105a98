#include "splatfit/serialize.hpp"

namespace splatfit {

nlohmann::json camera_to_json(const Camera& cam) {
  std::vector<Real> rot;
  rot.reserve(9);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) rot.push_back(cam.rotation(i, j));
  return {{"width", cam.intrinsics.width},
          {"height", cam.intrinsics.height},
          {"fov_y_deg", cam.intrinsics.fov_y_deg},
          {"rotation", rot},
          {"position", {cam.position.x, cam.position.y, cam.position.z}}};
}

Camera camera_from_json(const nlohmann::json& j) {
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(j.at("fov_y_deg").get<Real>(),
                                       j.at("width").get<int>(),
                                       j.at("height").get<int>());
  const auto rot = j.at("rotation").get<std::vector<Real>>();
  if (rot.size() != 9)
    throw std::invalid_argument("camera rotation must hold 9 row-major reals");
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) cam.rotation(i, k) = rot[i * 3 + k];
  if (orthonormality_residual(cam.rotation) > 1e-6 ||
      std::abs(cam.rotation.det() - 1.0) > 1e-6)
    throw std::invalid_argument("camera rotation is not a proper rotation");
  const auto pos = j.at("position").get<std::vector<Real>>();
  if (pos.size() != 3)
    throw std::invalid_argument("camera position must hold 3 reals");
  cam.position = {pos[0], pos[1], pos[2]};
  return cam;
}

nlohmann::json rig_spec_to_json(const RigSpec& spec) {
  return {{"n_views", spec.n_views},
          {"radius", spec.radius},
          {"elevation_deg", spec.elevation_deg},
          {"fov_y_deg", spec.fov_y_deg},
          {"width", spec.width},
          {"height", spec.height},
          {"azimuth_offset_deg", spec.azimuth_offset_deg}};
}

RigSpec rig_spec_from_json(const nlohmann::json& j) {
  RigSpec spec;
  spec.n_views = j.value("n_views", spec.n_views);
  spec.radius = j.value("radius", spec.radius);
  spec.elevation_deg = j.value("elevation_deg", spec.elevation_deg);
  spec.fov_y_deg = j.value("fov_y_deg", spec.fov_y_deg);
  spec.width = j.value("width", spec.width);
  spec.height = j.value("height", spec.height);
  spec.azimuth_offset_deg = j.value("azimuth_offset_deg", spec.azimuth_offset_deg);
  spec.validate();
  return spec;
}

nlohmann::json rig_to_json(const CameraRig& rig) {
  nlohmann::json cams = nlohmann::json::array();
  for (const Camera& c : rig.cameras) cams.push_back(camera_to_json(c));
  return {{"spec", rig_spec_to_json(rig.spec)}, {"cameras", cams}};
}

nlohmann::json scene_to_json(const CapsuleScene& scene) {
  nlohmann::json bones = nlohmann::json::array();
  for (const Bone& b : scene.bones)
    bones.push_back({{"a", {b.a.x, b.a.y, b.a.z}},
                     {"b", {b.b.x, b.b.y, b.b.z}},
                     {"radius", b.radius},
                     {"color", {b.color.x, b.color.y, b.color.z}}});
  return {{"bones", bones}};
}

CapsuleScene scene_from_json(const nlohmann::json& j) {
  CapsuleScene scene;
  for (const auto& bj : j.at("bones")) {
    const auto a = bj.at("a").get<std::vector<Real>>();
    const auto b = bj.at("b").get<std::vector<Real>>();
    const auto c = bj.at("color").get<std::vector<Real>>();
    if (a.size() != 3 || b.size() != 3 || c.size() != 3)
      throw std::invalid_argument("bone fields must hold 3 reals each");
    scene.bones.push_back({{a[0], a[1], a[2]},
                           {b[0], b[1], b[2]},
                           bj.at("radius").get<Real>(),
                           {c[0], c[1], c[2]}});
  }
  scene.validate();
  return scene;
}

}  // namespace splatfit
