#pragma once

// Weak-perspective projection of 3D skeletons into each canonical view and
// rasterization of 2D skeleton control images (the file-provider sidecar
// consumed by external view generators).

#include <vector>

#include "splatfit/camera.hpp"
#include "splatfit/image.hpp"
#include "splatfit/scene.hpp"

namespace splatfit {

struct Pose2D {
  std::vector<Vec2> joints;      // pixels
  std::vector<bool> visibility;  // in-frame test
};

/// All joints share the scale f / depth(centroid): u = s*x_c + cx. Throws
/// when the skeleton centroid is behind the camera.
Pose2D weak_perspective_project(const Skeleton& skel, const Camera& cam);

/// Anti-aliased bones (one color per bone) and joint discs on black.
Image render_pose_image(const Pose2D& pose, const Skeleton& topology, int height,
                        int width);

/// weak_perspective_project for each of the four canonical target cameras.
std::vector<Pose2D> poses_for_canonical_views(const Skeleton& skel,
                                              const std::vector<Camera>& targets);

}  // namespace splatfit
