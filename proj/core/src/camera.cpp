#include "splatfit/camera.hpp"

#include <sstream>

namespace splatfit {

CameraIntrinsics intrinsics_from_fov(Real fov_y_deg, int width, int height) {
  if (!(fov_y_deg > 0 && fov_y_deg < 180)) {
    std::ostringstream msg;
    msg << "fov_y must lie in (0, 180) degrees, got " << fov_y_deg;
    throw std::invalid_argument(msg.str());
  }
  if (width < 8 || height < 8)
    throw std::invalid_argument("image dimensions must be at least 8x8");
  CameraIntrinsics k;
  k.width = width;
  k.height = height;
  k.fov_y_deg = fov_y_deg;
  k.fy = (height / 2.0) / std::tan(deg_to_rad(fov_y_deg) / 2.0);
  k.fx = k.fy;
  k.cx = width / 2.0;
  k.cy = height / 2.0;
  return k;
}

PixelProjection project_point(const Camera& cam, const Vec3& p) {
  const Vec3 pc = cam.world_to_cam(p);
  if (!(pc.z > 0)) {
    std::ostringstream msg;
    msg << "point behind camera (depth " << pc.z << ")";
    throw std::invalid_argument(msg.str());
  }
  const CameraIntrinsics& k = cam.intrinsics;
  return {k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy, pc.z};
}

Ray pixel_ray(const Camera& cam, Real u, Real v) {
  const CameraIntrinsics& k = cam.intrinsics;
  if (!(u >= 0 && u < k.width && v >= 0 && v < k.height)) {
    std::ostringstream msg;
    msg << "pixel (" << u << ", " << v << ") outside " << k.width << "x"
        << k.height << " image";
    throw std::invalid_argument(msg.str());
  }
  const Vec3 dir_cam{(u + 0.5 - k.cx) / k.fx, (v + 0.5 - k.cy) / k.fy, 1.0};
  return {cam.position, cam.rotation.tmul(dir_cam).normalized()};
}

Mat3 make_look_at(const Vec3& position, const Vec3& target) {
  const Vec3 f = (target - position).normalized();
  const Vec3 up{0, 1, 0};
  const Vec3 fxu = f.cross(up);
  if (fxu.norm() < 1e-9)
    throw std::invalid_argument(
        "look-at direction parallel to world up (elevation +-90 degrees)");
  const Vec3 x = fxu.normalized();
  const Vec3 y = f.cross(x);  // image-down axis; det stays +1
  return Mat3::from_rows(x, y, f);
}

}  // namespace splatfit
