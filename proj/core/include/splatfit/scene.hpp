#pragma once

// Analytic capsule-humanoid scene: exact SDF, sphere-traced reference renders
// with silhouettes and normals, exact surface distances, and surface sampling.

#include <cstdint>
#include <utility>
#include <vector>

#include "splatfit/camera.hpp"
#include "splatfit/image.hpp"

namespace splatfit {

/// Joint positions in world space; parents form a tree rooted at index 0
/// (root is its own parent).
struct Skeleton {
  std::vector<Vec3> joints;
  std::vector<int> parents;

  void validate() const;
  std::vector<int> subtree(int joint) const;  // joint plus all descendants
};

/// 17-joint humanoid, ~1.8 units tall, centered on the origin.
Skeleton rest_pose_skeleton();

/// Moves a joint and all its descendants by `delta`.
void translate_subtree(Skeleton& skel, int joint, const Vec3& delta);

/// Rotates a joint's subtree rigidly about the joint's parent position.
void rotate_subtree(Skeleton& skel, int joint, const Vec3& axis, Real angle_rad);

/// Rest pose perturbed by seeded random limb rotations (seed 0 = rest pose).
Skeleton posed_skeleton(uint64_t seed);

struct Bone {
  Vec3 a, b;    // capsule endpoints
  Real radius;  // > 0
  Vec3 color;   // RGB in [0,1]
};

struct CapsuleScene {
  std::vector<Bone> bones;

  void validate() const;
  /// Center and radius of a sphere containing every capsule.
  std::pair<Vec3, Real> bounding_sphere() const;
};

/// One capsule per bone with fixed anthropometric radii and distinct colors.
CapsuleScene default_humanoid(const Skeleton& pose);

/// Exact signed distance to a capsule (negative inside).
Real capsule_sdf(const Vec3& p, const Vec3& a, const Vec3& b, Real r);

struct SceneSdf {
  Real distance;
  int bone;  // argmin capsule; ties resolve to the lowest index
};

/// Union SDF over all capsules; throws on an empty scene.
SceneSdf scene_sdf(const CapsuleScene& scene, const Vec3& p);

/// |scene_sdf|: exact distance to the union surface for outside points.
Real surface_distance(const CapsuleScene& scene, const Vec3& p);

/// Normalized central-difference gradient of the scene SDF.
Vec3 sdf_normal(const CapsuleScene& scene, const Vec3& p, Real h = 1e-5);

enum class ShadingMode { kLambert, kFlat };

struct TraceConfig {
  int max_steps = 256;
  Real hit_eps = 1e-4;
  Real max_dist = 5.4;  // 2x default rig radius
  ShadingMode shading = ShadingMode::kLambert;
  Vec3 light_dir{0, 0.8, 0.6};  // fixed world-space light, x = 0 keeps the
                                // default humanoid's mirror symmetry
  Real ambient = 0.25;
};

struct ReferenceRender {
  Image rgb;     // HxWx3
  Image alpha;   // HxW in {0,1}
  Image depth;   // HxW, 0 where no hit
  Image normal;  // HxWx3, unit where alpha = 1
};

/// Per-pixel sphere tracing of the capsule union.
ReferenceRender raymarch_render(const CapsuleScene& scene, const Camera& cam,
                                const TraceConfig& cfg = {});

struct SurfaceSamples {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;
};

/// n area-weighted samples of the union surface; deterministic under seed.
SurfaceSamples sample_surface(const CapsuleScene& scene, int n, uint64_t seed);

}  // namespace splatfit
