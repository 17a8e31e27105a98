#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "splatfit/camera.hpp"
#include "splatfit/quat.hpp"

using namespace splatfit;

namespace {

// Oracle: rotate v by the quaternion sandwich q * (0, v) * q^-1 using a
// standalone Hamilton product (independent of quat_to_rotmat).
Vec3 sandwich_rotate(const UnitQuat& q, const Vec3& v) {
  const Real a[4] = {q.w, q.x, q.y, q.z};
  const Real b[4] = {0, v.x, v.y, v.z};
  Real ab[4] = {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
                a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
                a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
                a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
  const Real c[4] = {a[0], -a[1], -a[2], -a[3]};
  return {ab[0] * c[1] + ab[1] * c[0] + ab[2] * c[3] - ab[3] * c[2],
          ab[0] * c[2] - ab[1] * c[3] + ab[2] * c[0] + ab[3] * c[1],
          ab[0] * c[3] + ab[1] * c[2] - ab[2] * c[1] + ab[3] * c[0]};
}

UnitQuat random_unit_quat(std::mt19937_64& rng) {
  std::normal_distribution<Real> g(0.0, 1.0);
  return UnitQuat::from(g(rng), g(rng), g(rng), g(rng));
}

Camera random_camera(std::mt19937_64& rng) {
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(30 + 60 * u(rng), 64, 48);
  const Real az = 2 * kPi * u(rng);
  const Real el = (u(rng) - 0.5) * 2.0;
  const Real r = 1.5 + 2 * u(rng);
  cam.position = {r * std::cos(el) * std::sin(az), r * std::sin(el),
                  r * std::cos(el) * std::cos(az)};
  cam.rotation = make_look_at(cam.position, {0, 0, 0});
  return cam;
}

}  // namespace

TEST_CASE("quat_to_rotmat identity") {
  const Mat3 r = quat_to_rotmat(UnitQuat::identity());
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      CHECK(r(i, j) == doctest::Approx(i == j ? 1.0 : 0.0).epsilon(1e-15));
}

TEST_CASE("quat_to_rotmat 90 degrees about z") {
  const Real s = std::sqrt(0.5);
  const Mat3 r = quat_to_rotmat({s, 0, 0, s});
  const Vec3 v = r * Vec3{1, 0, 0};
  CHECK(v.x == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(v.y == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(v.z == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("quat_to_rotmat matches sandwich-product oracle") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    const UnitQuat q = random_unit_quat(rng);
    const Mat3 r = quat_to_rotmat(q);
    for (const Vec3& e : {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}}) {
      const Vec3 want = sandwich_rotate(q, e);
      const Vec3 got = r * e;
      CHECK((got - want).norm() < 1e-12);
    }
  }
}

TEST_CASE("quat_to_rotmat sign invariance and orthonormality") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 10000; ++trial) {
    const UnitQuat q = random_unit_quat(rng);
    const Mat3 r = quat_to_rotmat(q);
    CHECK(orthonormality_residual(r) < 1e-6);
    CHECK(r.det() == doctest::Approx(1.0).epsilon(1e-9));
    const Mat3 rn = quat_to_rotmat({-q.w, -q.x, -q.y, -q.z});
    Real diff = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) diff = std::max(diff, std::abs(r(i, j) - rn(i, j)));
    CHECK(diff < 1e-15);
  }
}

TEST_CASE("intrinsics_from_fov basics") {
  const CameraIntrinsics k = intrinsics_from_fov(90.0, 512, 512);
  CHECK(k.fy == doctest::Approx(256.0).epsilon(1e-12));
  CHECK(k.fx == k.fy);
  CHECK(k.cx == 256.0);
  CHECK(k.cy == 256.0);
}

TEST_CASE("intrinsics_from_fov at 49.1 degrees") {
  // 256 / tan(24.55 deg), evaluated once on 64-bit scalars and frozen.
  const CameraIntrinsics k = intrinsics_from_fov(49.1, 512, 512);
  CHECK(k.fy == doctest::Approx(560.4441410821737).epsilon(1e-13));
}

TEST_CASE("intrinsics_from_fov rejects degenerate fov") {
  CHECK_THROWS_AS(intrinsics_from_fov(0.0, 512, 512), std::invalid_argument);
  CHECK_THROWS_AS(intrinsics_from_fov(180.0, 512, 512), std::invalid_argument);
  CHECK_THROWS_AS(intrinsics_from_fov(45.0, 4, 512), std::invalid_argument);
}

TEST_CASE("intrinsics_from_fov is monotone in fov") {
  Real prev = intrinsics_from_fov(10.0, 128, 128).fy;
  for (Real fov = 20; fov < 180; fov += 10) {
    const Real fy = intrinsics_from_fov(fov, 128, 128).fy;
    CHECK(fy < prev);
    prev = fy;
  }
}

TEST_CASE("project_point on the optical axis") {
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(49.1, 640, 480);
  cam.rotation = Mat3::identity();
  cam.position = {0, 0, 0};
  const auto p = project_point(cam, {0, 0, 3.5});
  CHECK(p.u == doctest::Approx(320.0));
  CHECK(p.v == doctest::Approx(240.0));
  CHECK(p.depth == doctest::Approx(3.5));
}

TEST_CASE("project_point one-pixel offset") {
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(60.0, 256, 256);
  cam.rotation = Mat3::identity();
  cam.position = {0, 0, 0};
  const Real z = 2.0;
  const auto p = project_point(cam, {z / cam.intrinsics.fx, 0, z});
  CHECK(p.u == doctest::Approx(cam.intrinsics.cx + 1.0).epsilon(1e-12));
  CHECK(p.v == doctest::Approx(cam.intrinsics.cy).epsilon(1e-12));
}

TEST_CASE("project_point rejects points behind the camera") {
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(60.0, 64, 64);
  cam.rotation = Mat3::identity();
  cam.position = {0, 0, 0};
  CHECK_THROWS_AS(project_point(cam, {0, 0, -1.0}), std::invalid_argument);
}

TEST_CASE("project_point matches homogeneous-matrix oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<Real> u(-1.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const Camera cam = random_camera(rng);
    const Vec3 p{u(rng), u(rng), u(rng)};
    const Vec3 pc = cam.world_to_cam(p);
    if (pc.z < 0.1) continue;

    // Oracle: 3x4 matrix P = K [R | -R c] applied to homogeneous p.
    const CameraIntrinsics& k = cam.intrinsics;
    Real km[3][3] = {{k.fx, 0, k.cx}, {0, k.fy, k.cy}, {0, 0, 1}};
    const Vec3 t = (cam.rotation * cam.position) * -1.0;
    Real pm[3][4];
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        pm[i][j] = 0;
        for (int l = 0; l < 3; ++l) pm[i][j] += km[i][l] * cam.rotation(l, j);
      }
      pm[i][3] = km[i][0] * t.x + km[i][1] * t.y + km[i][2] * t.z;
    }
    const Real hx = pm[0][0] * p.x + pm[0][1] * p.y + pm[0][2] * p.z + pm[0][3];
    const Real hy = pm[1][0] * p.x + pm[1][1] * p.y + pm[1][2] * p.z + pm[1][3];
    const Real hw = pm[2][0] * p.x + pm[2][1] * p.y + pm[2][2] * p.z + pm[2][3];

    const auto got = project_point(cam, p);
    CHECK(got.u == doctest::Approx(hx / hw).epsilon(1e-9));
    CHECK(got.v == doctest::Approx(hy / hw).epsilon(1e-9));
    CHECK(got.depth == doctest::Approx(hw).epsilon(1e-9));
  }
}

TEST_CASE("pixel_ray principal ray and bounds") {
  Camera cam;
  cam.intrinsics = intrinsics_from_fov(49.1, 64, 64);
  cam.rotation = Mat3::identity();
  cam.position = {0, 0, 0};
  const Ray r = pixel_ray(cam, 31.5, 31.5);  // center of the image
  CHECK((r.direction - Vec3{0, 0, 1}).norm() < 1e-12);
  CHECK_THROWS_AS(pixel_ray(cam, -1, 0), std::invalid_argument);
  CHECK_THROWS_AS(pixel_ray(cam, 0, 64), std::invalid_argument);
}

TEST_CASE("projection and unprojection round-trip") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  int done = 0;
  while (done < 10000) {
    const Camera cam = random_camera(rng);
    const int px = static_cast<int>(u(rng) * cam.intrinsics.width);
    const int py = static_cast<int>(u(rng) * cam.intrinsics.height);
    const Ray ray = pixel_ray(cam, px, py);
    const Real t = 0.5 + 3 * u(rng);
    const auto proj = project_point(cam, ray.at(t));
    CHECK(std::abs(proj.u - (px + 0.5)) < 1e-4);
    CHECK(std::abs(proj.v - (py + 0.5)) < 1e-4);

    // Independent unprojection at depth 1 must land on the ray.
    const CameraIntrinsics& k = cam.intrinsics;
    const Vec3 pc{(px + 0.5 - k.cx) / k.fx, (py + 0.5 - k.cy) / k.fy, 1.0};
    const Vec3 world = cam.rotation.tmul(pc) + cam.position;
    const Vec3 d = world - ray.origin;
    const Vec3 residual = d - ray.direction * d.dot(ray.direction);
    CHECK(residual.norm() < 1e-6);
    ++done;
  }
}

TEST_CASE("ray sampling round-trips for any positive depth") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const Camera cam = random_camera(rng);
    const int px = static_cast<int>(u(rng) * cam.intrinsics.width);
    const int py = static_cast<int>(u(rng) * cam.intrinsics.height);
    const Ray ray = pixel_ray(cam, px, py);
    for (const Real t : {0.3, 1.0, 7.0}) {
      const auto proj = project_point(cam, ray.at(t));
      CHECK(std::abs(proj.u - (px + 0.5)) < 1e-4);
      CHECK(std::abs(proj.v - (py + 0.5)) < 1e-4);
    }
  }
}
