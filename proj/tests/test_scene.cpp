#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "splatfit/rig.hpp"
#include "splatfit/scene.hpp"

using namespace splatfit;

namespace {

Vec3 random_point(std::mt19937_64& rng, Real extent) {
  std::uniform_real_distribution<Real> u(-extent, extent);
  return {u(rng), u(rng), u(rng)};
}

// Dense-sampling oracle: min distance over many segment points, minus r.
Real capsule_sdf_oracle(const Vec3& p, const Vec3& a, const Vec3& b, Real r,
                        int samples) {
  Real best = std::numeric_limits<Real>::infinity();
  for (int i = 0; i < samples; ++i) {
    const Real t = static_cast<Real>(i) / (samples - 1);
    best = std::min(best, (p - (a + (b - a) * t)).norm());
  }
  return best - r;
}

}  // namespace

TEST_CASE("capsule_sdf interior, surface, and random points") {
  const Vec3 a{0, -0.5, 0}, b{0, 0.5, 0};
  const Real r = 0.3;
  CHECK(capsule_sdf({0, 0, 0}, a, b, r) == doctest::Approx(-0.3).epsilon(1e-12));
  CHECK(capsule_sdf({0.3, 0.2, 0}, a, b, r) == doctest::Approx(0.0).epsilon(1e-12));

  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec3 p = random_point(rng, 1.2);
    const Real got = capsule_sdf(p, a, b, r);
    const Real want = capsule_sdf_oracle(p, a, b, r, 100000);
    CHECK(std::abs(got - want) < 1e-4);
  }
}

TEST_CASE("scene_sdf reduces to capsule_sdf and breaks ties low") {
  CapsuleScene one;
  one.bones.push_back({{0, -1, 0}, {0, 1, 0}, 0.2, {1, 0, 0}});
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 p = random_point(rng, 2.0);
    CHECK(scene_sdf(one, p).distance ==
          capsule_sdf(p, one.bones[0].a, one.bones[0].b, 0.2));
  }

  CapsuleScene two;
  two.bones.push_back({{-1, 0, 0}, {-1, 1, 0}, 0.25, {1, 0, 0}});
  two.bones.push_back({{1, 0, 0}, {1, 1, 0}, 0.25, {0, 1, 0}});
  const SceneSdf mid = scene_sdf(two, {0, 0.5, 0});  // exactly equidistant
  CHECK(mid.bone == 0);

  CHECK_THROWS_AS(scene_sdf(CapsuleScene{}, {0, 0, 0}), std::invalid_argument);
}

TEST_CASE("union sdf is a lower envelope") {
  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 500; ++trial) {
    const Vec3 p = random_point(rng, 1.5);
    const Real u = scene_sdf(scene, p).distance;
    for (const Bone& b : scene.bones)
      CHECK(u <= capsule_sdf(p, b.a, b.b, b.radius) + 1e-15);
  }
}

TEST_CASE("scene_sdf is 1-Lipschitz") {
  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  std::mt19937_64 rng(24);
  for (int trial = 0; trial < 2000; ++trial) {
    const Vec3 p = random_point(rng, 1.5);
    const Vec3 q = random_point(rng, 1.5);
    const Real dp = scene_sdf(scene, p).distance;
    const Real dq = scene_sdf(scene, q).distance;
    CHECK(std::abs(dp - dq) <= (p - q).norm() + 1e-12);
  }
}

TEST_CASE("raymarch of an empty frustum is background") {
  CapsuleScene scene;
  scene.bones.push_back({{0, 0, 50}, {0, 0, 51}, 0.1, {1, 1, 1}});  // far away
  const Camera cam = orbit_camera(RigSpec{16, 2.7, 0, 49.1, 32, 32, 0}, 0.0);
  TraceConfig cfg;
  cfg.max_dist = 5.0;
  const ReferenceRender r = raymarch_render(scene, cam, cfg);
  for (Real v : r.alpha.data) CHECK(v == 0.0);
  for (Real v : r.rgb.data) CHECK(v == 0.0);
}

TEST_CASE("sphere silhouette radius matches the analytic cone") {
  // Degenerate capsule = sphere of radius r at distance d on the axis.
  const Real r = 0.4, d = 2.7;
  CapsuleScene scene;
  scene.bones.push_back({{0, 0, 0}, {0, 0, 0}, r, {1, 1, 1}});
  RigSpec spec{16, d, 0.0, 49.1, 128, 128, 0.0};
  const Camera cam = orbit_camera(spec, 180.0);
  const ReferenceRender render = raymarch_render(scene, cam);

  Real area = 0;
  for (Real v : render.alpha.data) area += v;
  const Real measured = std::sqrt(area / kPi);
  const Real expected = cam.intrinsics.fy * r / std::sqrt(d * d - r * r);
  CHECK(std::abs(measured - expected) < 1.0);
}

TEST_CASE("mirrored cameras render mirrored images") {
  // Symmetrize the palette so the scene is bilaterally symmetric in color
  // as well as geometry (bone colors are distinct by default).
  CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  for (int offset : {4, 5, 6}) scene.bones[offset + 3].color = scene.bones[offset].color;
  for (int offset : {10, 11, 12}) scene.bones[offset + 3].color = scene.bones[offset].color;
  RigSpec spec{16, 2.7, 5.0, 49.1, 64, 64, 0.0};
  const Camera cam = orbit_camera(spec, 30.0);
  const Camera mirrored = orbit_camera(spec, -30.0);
  const ReferenceRender a = raymarch_render(scene, cam);
  const ReferenceRender b = raymarch_render(scene, mirrored);
  Real worst = 0;
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      for (int c = 0; c < 3; ++c)
        worst = std::max(worst, std::abs(a.rgb.at(y, x, c) -
                                         b.rgb.at(y, 63 - x, c)));
  CHECK(worst < 1e-6);
}

TEST_CASE("render normals are unit where alpha is set") {
  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  const Camera cam = orbit_camera(RigSpec{16, 2.7, 0, 49.1, 48, 48, 0}, 72.5);
  const ReferenceRender r = raymarch_render(scene, cam);
  bool any_hit = false;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 48; ++x) {
      if (r.alpha.at(y, x) != 1.0) continue;
      any_hit = true;
      CHECK(std::abs(r.normal.rgb_at(y, x).norm() - 1.0) < 1e-3);
      CHECK(r.depth.at(y, x) > 0);
    }
  CHECK(any_hit);
}

TEST_CASE("silhouette area grows with capsule radius") {
  const Camera cam = orbit_camera(RigSpec{16, 2.7, 0, 49.1, 64, 64, 0}, 0.0);
  Real prev = -1;
  for (Real r : {0.2, 0.3, 0.4}) {
    CapsuleScene scene;
    scene.bones.push_back({{0, -0.4, 0}, {0, 0.4, 0}, r, {1, 0.5, 0.2}});
    const ReferenceRender render = raymarch_render(scene, cam);
    Real area = 0;
    for (Real v : render.alpha.data) area += v;
    CHECK(area > prev);
    prev = area;
  }
}

TEST_CASE("surface_distance basics and dense-sample oracle") {
  CapsuleScene sphere;
  sphere.bones.push_back({{0, 0, 0}, {0, 0, 0}, 0.5, {1, 1, 1}});
  CHECK(surface_distance(sphere, {0.6, 0, 0}) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(surface_distance(sphere, {0.5, 0, 0}) == doctest::Approx(0.0).epsilon(1e-12));

  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  const SurfaceSamples dense = sample_surface(scene, 200000, 77);
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 40; ++trial) {
    Vec3 p = random_point(rng, 1.2);
    if (scene_sdf(scene, p).distance < 0) continue;  // outside-point oracle
    Real nearest = std::numeric_limits<Real>::infinity();
    for (const Vec3& s : dense.points) nearest = std::min(nearest, (p - s).norm());
    CHECK(std::abs(surface_distance(scene, p) - nearest) < 2e-3);
  }
}

TEST_CASE("sample_surface postconditions") {
  const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  const SurfaceSamples s = sample_surface(scene, 2000, 5);
  REQUIRE(s.points.size() == 2000);
  REQUIRE(s.normals.size() == 2000);
  for (const Vec3& p : s.points)
    CHECK(std::abs(scene_sdf(scene, p).distance) < 1e-5);
  for (const Vec3& n : s.normals)
    CHECK(std::abs(n.norm() - 1.0) < 1e-9);

  const SurfaceSamples again = sample_surface(scene, 2000, 5);
  for (size_t i = 0; i < s.points.size(); ++i)
    CHECK((s.points[i] - again.points[i]).norm() == 0.0);

  CapsuleScene ball;
  ball.bones.push_back({{0.2, 0.1, 0}, {0.2, 0.1, 0}, 0.37, {1, 1, 1}});
  const SurfaceSamples on_ball = sample_surface(ball, 500, 6);
  for (const Vec3& p : on_ball.points)
    CHECK(std::abs((p - Vec3{0.2, 0.1, 0}).norm() - 0.37) < 1e-4);
}

TEST_CASE("default humanoid shape") {
  const Skeleton rest = rest_pose_skeleton();
  const CapsuleScene scene = default_humanoid(rest);
  CHECK(scene.bones.size() == 16);  // J - 1 bones

  Real lo = 1e9, hi = -1e9;
  for (const Bone& b : scene.bones) {
    lo = std::min({lo, b.a.y - b.radius, b.b.y - b.radius});
    hi = std::max({hi, b.a.y + b.radius, b.b.y + b.radius});
  }
  CHECK(hi - lo == doctest::Approx(1.8).epsilon(0.05));

  const auto [center, radius] = scene.bounding_sphere();
  CHECK(radius < RigSpec{}.radius);
}

TEST_CASE("moving a joint moves exactly the descendant capsules") {
  const Skeleton rest = rest_pose_skeleton();
  Skeleton moved = rest;
  const int elbow_l = 12;
  translate_subtree(moved, elbow_l, {0, 0.2, 0});
  const CapsuleScene a = default_humanoid(rest);
  const CapsuleScene b = default_humanoid(moved);
  const auto subtree = rest.subtree(elbow_l);
  for (size_t bone = 0; bone < a.bones.size(); ++bone) {
    const int child_joint = static_cast<int>(bone) + 1;
    const bool should_move =
        std::find(subtree.begin(), subtree.end(), child_joint) != subtree.end();
    const bool did_move = (a.bones[bone].a - b.bones[bone].a).norm() > 0 ||
                          (a.bones[bone].b - b.bones[bone].b).norm() > 0;
    CHECK(did_move == should_move);
  }
}

TEST_CASE("posed skeletons keep bone lengths and stay in the rig") {
  const Skeleton rest = rest_pose_skeleton();
  for (uint64_t seed : {1ull, 2ull, 9ull}) {
    const Skeleton posed = posed_skeleton(seed);
    posed.validate();
    for (size_t j = 1; j < posed.joints.size(); ++j) {
      const Real rest_len = (rest.joints[j] - rest.joints[rest.parents[j]]).norm();
      const Real posed_len =
          (posed.joints[j] - posed.joints[posed.parents[j]]).norm();
      CHECK(posed_len == doctest::Approx(rest_len).epsilon(1e-9));
    }
    const auto [center, radius] = default_humanoid(posed).bounding_sphere();
    CHECK(center.norm() + radius < RigSpec{}.radius);
  }
}
