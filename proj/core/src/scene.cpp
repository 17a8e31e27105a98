#include "splatfit/scene.hpp"

#include <algorithm>
#include <random>
#include <stdexcept>

#include "splatfit/parallel.hpp"
#include "splatfit/quat.hpp"

namespace splatfit {

void Skeleton::validate() const {
  const int n = static_cast<int>(joints.size());
  if (n == 0 || static_cast<int>(parents.size()) != n)
    throw std::invalid_argument("skeleton joint/parent size mismatch");
  if (parents[0] != 0)
    throw std::invalid_argument("skeleton root (index 0) must be its own parent");
  for (int j = 1; j < n; ++j) {
    if (parents[j] < 0 || parents[j] >= n || parents[j] == j)
      throw std::invalid_argument("skeleton parent index out of range");
    if ((joints[j] - joints[parents[j]]).norm() <= 0)
      throw std::invalid_argument("skeleton bone length must be positive");
    // walk to the root to reject cycles
    int hops = 0, cur = j;
    while (cur != 0) {
      cur = parents[cur];
      if (++hops > n) throw std::invalid_argument("skeleton parent graph has a cycle");
    }
  }
  for (const Vec3& p : joints)
    if (!p.finite()) throw std::invalid_argument("skeleton joints must be finite");
}

std::vector<int> Skeleton::subtree(int joint) const {
  std::vector<int> out;
  const int n = static_cast<int>(joints.size());
  for (int j = 0; j < n; ++j) {
    int cur = j;
    while (true) {
      if (cur == joint) {
        out.push_back(j);
        break;
      }
      if (cur == 0) break;
      cur = parents[cur];
    }
  }
  return out;
}

namespace joints17 {
enum : int {
  kPelvis = 0,
  kSpine,
  kChest,
  kNeck,
  kHead,
  kHipL,
  kKneeL,
  kAnkleL,
  kHipR,
  kKneeR,
  kAnkleR,
  kShoulderL,
  kElbowL,
  kWristL,
  kShoulderR,
  kElbowR,
  kWristR,
};
}  // namespace joints17

Skeleton rest_pose_skeleton() {
  using namespace joints17;
  Skeleton s;
  s.joints.resize(17);
  s.parents = {kPelvis, kPelvis, kSpine,     kChest,     kNeck,  // spine chain
               kPelvis, kHipL,   kKneeL,     kPelvis,    kHipR,  kKneeR,
               kChest,  kShoulderL, kElbowL, kChest,     kShoulderR, kElbowR};
  // Heights chosen so the rest pose spans roughly y in [-0.9, 0.9].
  s.joints[kPelvis] = {0, 0.05, 0};
  s.joints[kSpine] = {0, 0.25, 0};
  s.joints[kChest] = {0, 0.45, 0};
  s.joints[kNeck] = {0, 0.62, 0};
  s.joints[kHead] = {0, 0.78, 0};
  s.joints[kHipL] = {-0.10, -0.02, 0};
  s.joints[kKneeL] = {-0.12, -0.45, 0};
  s.joints[kAnkleL] = {-0.13, -0.84, 0};
  s.joints[kHipR] = {0.10, -0.02, 0};
  s.joints[kKneeR] = {0.12, -0.45, 0};
  s.joints[kAnkleR] = {0.13, -0.84, 0};
  s.joints[kShoulderL] = {-0.20, 0.55, 0};
  s.joints[kElbowL] = {-0.34, 0.28, 0};
  s.joints[kWristL] = {-0.42, 0.03, 0};
  s.joints[kShoulderR] = {0.20, 0.55, 0};
  s.joints[kElbowR] = {0.34, 0.28, 0};
  s.joints[kWristR] = {0.42, 0.03, 0};
  s.validate();
  return s;
}

void translate_subtree(Skeleton& skel, int joint, const Vec3& delta) {
  for (int j : skel.subtree(joint)) skel.joints[j] += delta;
}

void rotate_subtree(Skeleton& skel, int joint, const Vec3& axis, Real angle_rad) {
  const Vec3 pivot = skel.joints[skel.parents[joint]];
  const Mat3 r = quat_to_rotmat(axis_angle_quat(axis, angle_rad));
  for (int j : skel.subtree(joint))
    skel.joints[j] = pivot + r * (skel.joints[j] - pivot);
}

Skeleton posed_skeleton(uint64_t seed) {
  Skeleton s = rest_pose_skeleton();
  if (seed == 0) return s;
  using namespace joints17;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> angle(-0.45, 0.45);
  const int limbs[] = {kShoulderL, kElbowL, kShoulderR, kElbowR,
                       kHipL,      kKneeL,  kHipR,      kKneeR};
  for (int j : limbs) {
    const Real ax = angle(rng), az = angle(rng);
    rotate_subtree(s, j, Vec3{1, 0, 0}, ax);
    rotate_subtree(s, j, Vec3{0, 0, 1}, az);
  }
  rotate_subtree(s, kNeck, Vec3{0, 0, 1}, angle(rng) * 0.4);
  return s;
}

void CapsuleScene::validate() const {
  for (const Bone& b : bones) {
    if (!(b.radius > 0)) throw std::invalid_argument("capsule radius must be positive");
    for (Real c : {b.color.x, b.color.y, b.color.z})
      if (!(c >= 0 && c <= 1))
        throw std::invalid_argument("capsule color must lie in [0,1]");
  }
}

std::pair<Vec3, Real> CapsuleScene::bounding_sphere() const {
  if (bones.empty()) return {Vec3{}, 0.0};
  Vec3 center{};
  for (const Bone& b : bones) center += (b.a + b.b) * 0.5;
  center = center / static_cast<Real>(bones.size());
  Real r = 0;
  for (const Bone& b : bones) {
    r = std::max(r, (b.a - center).norm() + b.radius);
    r = std::max(r, (b.b - center).norm() + b.radius);
  }
  return {center, r};
}

CapsuleScene default_humanoid(const Skeleton& pose) {
  pose.validate();
  if (pose.joints.size() != 17)
    throw std::invalid_argument("default_humanoid expects the 17-joint skeleton");
  using namespace joints17;
  auto radius_for = [](int child) -> Real {
    switch (child) {
      case kSpine: return 0.13;
      case kChest: return 0.13;
      case kNeck: return 0.06;
      case kHead: return 0.10;
      case kHipL:
      case kHipR: return 0.08;
      case kKneeL:
      case kKneeR: return 0.07;
      case kAnkleL:
      case kAnkleR: return 0.055;
      case kShoulderL:
      case kShoulderR: return 0.06;
      case kElbowL:
      case kElbowR: return 0.045;
      case kWristL:
      case kWristR: return 0.04;
      default: return 0.05;
    }
  };
  // Distinct, symmetric palette: left/right limbs share hue family but differ.
  const Vec3 palette[16] = {
      {0.85, 0.35, 0.30}, {0.80, 0.55, 0.25}, {0.75, 0.70, 0.30},
      {0.90, 0.80, 0.60}, {0.35, 0.55, 0.85}, {0.30, 0.45, 0.75},
      {0.25, 0.35, 0.65}, {0.40, 0.75, 0.85}, {0.35, 0.65, 0.75},
      {0.30, 0.55, 0.65}, {0.45, 0.80, 0.40}, {0.40, 0.70, 0.35},
      {0.35, 0.60, 0.30}, {0.65, 0.45, 0.80}, {0.55, 0.40, 0.70},
      {0.45, 0.35, 0.60}};
  CapsuleScene scene;
  int bone_index = 0;
  for (int j = 1; j < 17; ++j, ++bone_index)
    scene.bones.push_back({pose.joints[pose.parents[j]], pose.joints[j],
                           radius_for(j), palette[bone_index % 16]});
  scene.validate();
  return scene;
}

Real capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, Real r) {
  const Vec3 pa = p - a, ba = b - a;
  const Real denom = ba.dot(ba);
  const Real h = denom > 0 ? std::clamp<Real>(pa.dot(ba) / denom, 0.0, 1.0) : 0.0;
  return (pa - ba * h).norm() - r;
}

SceneSdf scene_sdf(const CapsuleScene& scene, const Vec3& p) {
  if (scene.bones.empty())
    throw std::invalid_argument("scene_sdf on an empty scene");
  SceneSdf best{capsule_sdf(p, scene.bones[0].a, scene.bones[0].b,
                            scene.bones[0].radius),
                0};
  for (int i = 1; i < static_cast<int>(scene.bones.size()); ++i) {
    const Bone& bn = scene.bones[i];
    const Real d = capsule_sdf(p, bn.a, bn.b, bn.radius);
    if (d < best.distance) best = {d, i};
  }
  return best;
}

Real surface_distance(const CapsuleScene& scene, const Vec3& p) {
  return std::abs(scene_sdf(scene, p).distance);
}

Vec3 sdf_normal(const CapsuleScene& scene, const Vec3& p, Real h) {
  const Real dx = scene_sdf(scene, {p.x + h, p.y, p.z}).distance -
                  scene_sdf(scene, {p.x - h, p.y, p.z}).distance;
  const Real dy = scene_sdf(scene, {p.x, p.y + h, p.z}).distance -
                  scene_sdf(scene, {p.x, p.y - h, p.z}).distance;
  const Real dz = scene_sdf(scene, {p.x, p.y, p.z + h}).distance -
                  scene_sdf(scene, {p.x, p.y, p.z - h}).distance;
  const Vec3 g{dx, dy, dz};
  const Real n = g.norm();
  return n > 0 ? g / n : Vec3{0, 0, 1};
}

ReferenceRender raymarch_render(const CapsuleScene& scene, const Camera& cam,
                                const TraceConfig& cfg) {
  scene.validate();
  const int w = cam.intrinsics.width, h = cam.intrinsics.height;
  ReferenceRender out{Image(h, w, 3), Image(h, w, 1), Image(h, w, 1),
                      Image(h, w, 3)};
  if (scene.bones.empty()) return out;
  const Vec3 light = cfg.light_dir.normalized();

  parallel_for(static_cast<std::int64_t>(h) * w, [&](std::int64_t idx) {
    const int y = static_cast<int>(idx / w);
    const int x = static_cast<int>(idx % w);
    const Ray ray = pixel_ray(cam, x, y);
    Real t = 0;
    int hit_bone = -1;
    for (int step = 0; step < cfg.max_steps && t < cfg.max_dist; ++step) {
      const SceneSdf s = scene_sdf(scene, ray.at(t));
      if (s.distance < cfg.hit_eps) {
        hit_bone = s.bone;
        break;
      }
      t += s.distance;
    }
    if (hit_bone < 0) return;  // miss -> background (zeros)

    const Vec3 p = ray.at(t);
    const Vec3 n = sdf_normal(scene, p);
    Vec3 color = scene.bones[hit_bone].color;
    if (cfg.shading == ShadingMode::kLambert) {
      const Real diffuse = std::max<Real>(0.0, n.dot(light));
      color = color * (cfg.ambient + (1.0 - cfg.ambient) * diffuse);
    }
    out.rgb.set_rgb(y, x, {std::clamp<Real>(color.x, 0, 1),
                           std::clamp<Real>(color.y, 0, 1),
                           std::clamp<Real>(color.z, 0, 1)});
    out.alpha.at(y, x) = 1.0;
    out.depth.at(y, x) = ray.direction.dot(p - cam.position);
    out.normal.set_rgb(y, x, n);
  });
  return out;
}

SurfaceSamples sample_surface(const CapsuleScene& scene, int n, uint64_t seed) {
  scene.validate();
  if (scene.bones.empty())
    throw std::invalid_argument("sample_surface on an empty scene");
  if (n < 1) throw std::invalid_argument("sample_surface needs n >= 1");

  // Area-weighted choice between each capsule's cylinder body and sphere caps.
  std::vector<Real> cumulative;
  Real total = 0;
  for (const Bone& b : scene.bones) {
    const Real len = (b.b - b.a).norm();
    total += 2 * kPi * b.radius * len + 4 * kPi * b.radius * b.radius;
    cumulative.push_back(total);
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> uni(0.0, 1.0);
  SurfaceSamples out;
  out.points.reserve(n);
  out.normals.reserve(n);

  while (static_cast<int>(out.points.size()) < n) {
    const Real pick = uni(rng) * total;
    const size_t bi = static_cast<size_t>(
        std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
        cumulative.begin());
    const Bone& b = scene.bones[std::min(bi, scene.bones.size() - 1)];
    const Vec3 axis = b.b - b.a;
    const Real len = axis.norm();
    // Degenerate capsules are spheres; the axis direction is arbitrary then.
    const Vec3 u = len > 0 ? axis / len : Vec3{0, 0, 1};
    // Orthonormal frame around the capsule axis.
    const Vec3 ref = std::abs(u.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    const Vec3 e1 = u.cross(ref).normalized();
    const Vec3 e2 = u.cross(e1);

    const Real cyl_area = 2 * kPi * b.radius * len;
    const Real cap_area = 4 * kPi * b.radius * b.radius;
    Vec3 p, nrm;
    if (uni(rng) * (cyl_area + cap_area) < cyl_area) {
      const Real h = uni(rng) * len;
      const Real phi = uni(rng) * 2 * kPi;
      nrm = e1 * std::cos(phi) + e2 * std::sin(phi);
      p = b.a + u * h + nrm * b.radius;
    } else {
      // Uniform point on the unit sphere; hemisphere picks the matching cap.
      const Real z = 2 * uni(rng) - 1;
      const Real phi = uni(rng) * 2 * kPi;
      const Real rho = std::sqrt(std::max<Real>(0.0, 1 - z * z));
      const Vec3 dir = e1 * (rho * std::cos(phi)) + e2 * (rho * std::sin(phi)) +
                       u * z;
      nrm = dir;
      p = (dir.dot(u) >= 0 ? b.b : b.a) + dir * b.radius;
    }
    // Reject points buried inside another capsule.
    if (std::abs(scene_sdf(scene, p).distance) >= 1e-5) continue;
    out.points.push_back(p);
    out.normals.push_back(nrm);
  }
  return out;
}

}  // namespace splatfit
