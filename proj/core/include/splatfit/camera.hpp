#pragma once

// Pinhole camera model and projection.
//
// Conventions (fixed once, used everywhere):
//   - right-handed world, +y up;
//   - camera looks down its local +z axis, image v grows downward;
//   - pixel centers sampled at (u + 0.5, v + 0.5).

#include "splatfit/vec.hpp"

namespace splatfit {

struct CameraIntrinsics {
  int width = 0, height = 0;  // pixels, >= 8
  Real fov_y_deg = 0;
  Real fx = 0, fy = 0;  // focal lengths in pixels; fx == fy
  Real cx = 0, cy = 0;  // principal point (image center)
};

/// Intrinsics from a vertical field of view: fy = (height/2)/tan(fov_y/2).
CameraIntrinsics intrinsics_from_fov(Real fov_y_deg, int width, int height);

struct Camera {
  CameraIntrinsics intrinsics;
  Mat3 rotation;  // world -> camera, orthonormal, det +1
  Vec3 position;  // camera center in world coordinates

  Vec3 world_to_cam(const Vec3& p) const { return rotation * (p - position); }
  /// Optical axis direction in world coordinates.
  Vec3 forward() const { return rotation.row(2); }
};

struct Ray {
  Vec3 origin;
  Vec3 direction;  // unit

  Vec3 at(Real t) const { return origin + direction * t; }
};

struct PixelProjection {
  Real u = 0, v = 0;  // pixels
  Real depth = 0;     // camera-frame z, scene units
};

/// Perspective projection; throws if the point is not in front of the camera.
PixelProjection project_point(const Camera& cam, const Vec3& p);

/// World-space ray through the center of pixel (u, v); throws when out of bounds.
Ray pixel_ray(const Camera& cam, Real u, Real v);

/// World->camera rotation for a camera at `position` looking at `target`,
/// disambiguated by the world up vector (+y). Throws when the view direction
/// is parallel to up.
Mat3 make_look_at(const Vec3& position, const Vec3& target);

}  // namespace splatfit
