#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "splatfit/rig.hpp"

using namespace splatfit;

namespace {

Real azimuth_of(const Camera& cam) {
  return rad_to_deg(std::atan2(cam.position.x, cam.position.z));
}

Real lookat_residual_rad(const Camera& cam) {
  const Vec3 to_origin = (Vec3{0, 0, 0} - cam.position).normalized();
  const Real c = std::clamp<Real>(cam.forward().dot(to_origin), -1.0, 1.0);
  return std::acos(c);
}

}  // namespace

TEST_CASE("default 16-view rig geometry") {
  const CameraRig rig = build_rig(RigSpec{});
  REQUIRE(rig.cameras.size() == 16);
  for (size_t k = 0; k < 16; ++k) {
    const Camera& cam = rig.cameras[k];
    CHECK(std::abs(cam.position.norm() - 2.7) < 1e-9);
    CHECK(lookat_residual_rad(cam) < 1e-6);
  }
  for (size_t k = 0; k + 1 < 16; ++k) {
    Real gap = azimuth_of(rig.cameras[k + 1]) - azimuth_of(rig.cameras[k]);
    while (gap < 0) gap += 360;
    while (gap >= 360) gap -= 360;
    CHECK(gap == doctest::Approx(22.5).epsilon(1e-9));
  }
  // camera 8 sits exactly opposite camera 0
  const Vec3 sum = rig.cameras[0].position + rig.cameras[8].position;
  CHECK(sum.norm() < 1e-9);
}

TEST_CASE("rig with elevation keeps radius and look-at") {
  RigSpec spec;
  spec.elevation_deg = 10;
  spec.radius = 2.5;
  const CameraRig rig = build_rig(spec);
  for (const Camera& cam : rig.cameras) {
    CHECK(std::abs(cam.position.norm() - 2.5) < 1e-9);
    CHECK(lookat_residual_rad(cam) < 1e-6);
    CHECK(std::abs(cam.rotation.det() - 1.0) < 1e-9);
    CHECK(orthonormality_residual(cam.rotation) < 1e-9);
  }
}

TEST_CASE("rig rejects degenerate specs") {
  RigSpec spec;
  spec.elevation_deg = 90;
  CHECK_THROWS(build_rig(spec));
  spec.elevation_deg = 0;
  spec.n_views = 0;
  CHECK_THROWS(build_rig(spec));
  spec.n_views = 4;
  spec.radius = 0;
  CHECK_THROWS(build_rig(spec));
}

TEST_CASE("canonical four azimuths") {
  RigSpec spec;
  const CameraRig four = canonical_four(spec);
  REQUIRE(four.cameras.size() == 4);
  const Real want[4] = {0, 90, 180, 270};
  for (int k = 0; k < 4; ++k) {
    Real az = azimuth_of(four.cameras[k]);
    if (az < -1e-9) az += 360;
    CHECK(az == doctest::Approx(want[k]).epsilon(1e-9));
  }

  spec.azimuth_offset_deg = 45;
  const CameraRig shifted = canonical_four(spec);
  for (int k = 0; k < 4; ++k) {
    Real az = azimuth_of(shifted.cameras[k]);
    if (az < -1e-9) az += 360;
    CHECK(az == doctest::Approx(std::fmod(45 + want[k], 360.0)).epsilon(1e-9));
  }
}

TEST_CASE("canonical four is a subset of the 16-view rig") {
  const CameraRig rig16 = build_rig(RigSpec{});
  const CameraRig four = canonical_four(RigSpec{});
  for (int k = 0; k < 4; ++k) {
    const Camera& want = rig16.cameras[4 * k];
    const Camera& got = four.cameras[k];
    CHECK((got.position - want.position).norm() < 1e-9);
  }
}

TEST_CASE("input_plus_targets anchoring") {
  const InputTargets layout = input_plus_targets(RigSpec{}, 0.0);
  REQUIRE(layout.targets.size() == 4);
  CHECK((layout.input.position - layout.targets[0].position).norm() < 1e-12);

  const InputTargets stereo_base = input_plus_targets(RigSpec{}, 0.0);
  const Camera second = orbit_camera(RigSpec{}, 90.0);
  CHECK((second.position - stereo_base.targets[1].position).norm() < 1e-9);
}

TEST_CASE("orbit positions sum to zero in the horizontal plane") {
  for (int n : {2, 3, 5, 16}) {
    RigSpec spec;
    spec.n_views = n;
    spec.elevation_deg = 15;
    const CameraRig rig = build_rig(spec);
    Vec3 sum{};
    for (const Camera& cam : rig.cameras) sum += cam.position;
    CHECK(std::abs(sum.x) < 1e-9);
    CHECK(std::abs(sum.z) < 1e-9);
  }
}

TEST_CASE("rig pose set is invariant under one-step rotation") {
  RigSpec spec;
  spec.n_views = 8;
  const CameraRig a = build_rig(spec);
  spec.azimuth_offset_deg = 360.0 / 8;
  const CameraRig b = build_rig(spec);
  for (const Camera& cb : b.cameras) {
    Real best = 1e9;
    for (const Camera& ca : a.cameras)
      best = std::min(best, (ca.position - cb.position).norm());
    CHECK(best < 1e-9);
  }
}
