#include "splatfit/rig.hpp"

#include <stdexcept>

namespace splatfit {

void RigSpec::validate() const {
  if (n_views < 1) throw std::invalid_argument("rig needs at least one view");
  if (!(radius > 0)) throw std::invalid_argument("rig radius must be positive");
  if (!(std::abs(elevation_deg) < 90))
    throw std::invalid_argument("rig elevation must satisfy |e| < 90 degrees");
  intrinsics_from_fov(fov_y_deg, width, height);  // validates fov and size
}

Camera orbit_camera(const RigSpec& spec, Real azimuth_deg) {
  const Real az = deg_to_rad(azimuth_deg);
  const Real el = deg_to_rad(spec.elevation_deg);
  const Vec3 pos{spec.radius * std::cos(el) * std::sin(az),
                 spec.radius * std::sin(el),
                 spec.radius * std::cos(el) * std::cos(az)};
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(spec.fov_y_deg, spec.width, spec.height);
  cam.position = pos;
  cam.rotation = make_look_at(pos, Vec3{0, 0, 0});
  return cam;
}

CameraRig build_rig(const RigSpec& spec) {
  spec.validate();
  CameraRig rig;
  rig.spec = spec;
  rig.cameras.reserve(spec.n_views);
  const Real step = 360.0 / spec.n_views;
  for (int k = 0; k < spec.n_views; ++k)
    rig.cameras.push_back(orbit_camera(spec, spec.azimuth_offset_deg + k * step));
  return rig;
}

CameraRig canonical_four(const RigSpec& spec) {
  RigSpec four = spec;
  four.n_views = 4;
  return build_rig(four);
}

InputTargets input_plus_targets(const RigSpec& spec, Real input_azimuth_deg) {
  RigSpec anchored = spec;
  anchored.azimuth_offset_deg = input_azimuth_deg;
  const CameraRig four = canonical_four(anchored);
  return {four.cameras[0], four.cameras};
}

}  // namespace splatfit
