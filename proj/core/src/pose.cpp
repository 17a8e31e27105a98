#include "splatfit/pose.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace splatfit {

Pose2D weak_perspective_project(const Skeleton& skel, const Camera& cam) {
  skel.validate();
  Vec3 centroid{};
  for (const Vec3& j : skel.joints) centroid += j;
  centroid = centroid / static_cast<Real>(skel.joints.size());
  const Real z_anchor = cam.world_to_cam(centroid).z;
  if (!(z_anchor > 0))
    throw std::invalid_argument("skeleton centroid behind camera");

  const CameraIntrinsics& k = cam.intrinsics;
  const Real su = k.fx / z_anchor, sv = k.fy / z_anchor;
  Pose2D pose;
  pose.joints.reserve(skel.joints.size());
  pose.visibility.reserve(skel.joints.size());
  for (const Vec3& j : skel.joints) {
    const Vec3 pc = cam.world_to_cam(j);
    const Vec2 uv{su * pc.x + k.cx, sv * pc.y + k.cy};
    pose.joints.push_back(uv);
    pose.visibility.push_back(uv.x >= 0 && uv.x < k.width && uv.y >= 0 &&
                              uv.y < k.height);
  }
  return pose;
}

namespace {

Real point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
  const Vec2 ab = b - a;
  const Real len2 = ab.dot(ab);
  const Real h = len2 > 0 ? std::clamp<Real>((p - a).dot(ab) / len2, 0.0, 1.0) : 0.0;
  const Vec2 d = p - (a + ab * h);
  return d.norm();
}

void splat_coverage(Image& img, const Vec2& lo, const Vec2& hi,
                    const std::function<Real(const Vec2&)>& distance,
                    Real half_width, const Vec3& color) {
  const int x0 = std::max(0, static_cast<int>(std::floor(lo.x - half_width - 1)));
  const int x1 = std::min(img.width - 1,
                          static_cast<int>(std::ceil(hi.x + half_width + 1)));
  const int y0 = std::max(0, static_cast<int>(std::floor(lo.y - half_width - 1)));
  const int y1 = std::min(img.height - 1,
                          static_cast<int>(std::ceil(hi.y + half_width + 1)));
  for (int y = y0; y <= y1; ++y)
    for (int x = x0; x <= x1; ++x) {
      const Real d = distance({x + 0.5, y + 0.5});
      const Real cov = std::clamp<Real>(half_width + 0.5 - d, 0.0, 1.0);
      if (cov <= 0) continue;
      // max-blend keeps overlapping strokes order-independent
      for (int c = 0; c < 3; ++c) {
        const Real want = cov * (c == 0 ? color.x : c == 1 ? color.y : color.z);
        img.at(y, x, c) = std::max(img.at(y, x, c), want);
      }
    }
}

}  // namespace

Image render_pose_image(const Pose2D& pose, const Skeleton& topology, int height,
                        int width) {
  if (pose.joints.size() != topology.joints.size())
    throw std::invalid_argument("pose/topology joint count mismatch");
  Image img(height, width, 3);
  const Real bone_half_width = 1.5;
  const Real joint_radius = 2.5;

  const int n = static_cast<int>(pose.joints.size());
  int bone_index = 0;
  for (int j = 1; j < n; ++j, ++bone_index) {
    const int p = topology.parents[j];
    if (!pose.visibility[j] || !pose.visibility[p]) continue;
    const Vec2 a = pose.joints[p], b = pose.joints[j];
    const Real hue = static_cast<Real>(bone_index) / std::max(1, n - 1);
    const Vec3 color{0.35 + 0.65 * hue, 0.9 - 0.6 * hue,
                     0.4 + 0.6 * (1.0 - std::abs(2 * hue - 1.0))};
    splat_coverage(img, {std::min(a.x, b.x), std::min(a.y, b.y)},
                   {std::max(a.x, b.x), std::max(a.y, b.y)},
                   [&](const Vec2& q) { return point_segment_distance(q, a, b); },
                   bone_half_width, color);
  }
  for (int j = 0; j < n; ++j) {
    if (!pose.visibility[j]) continue;
    const Vec2 c = pose.joints[j];
    splat_coverage(img, c, c,
                   [&](const Vec2& q) { return (q - c).norm(); }, joint_radius,
                   Vec3{1.0, 1.0, 1.0});
  }
  return img;
}

std::vector<Pose2D> poses_for_canonical_views(const Skeleton& skel,
                                              const std::vector<Camera>& targets) {
  std::vector<Pose2D> out;
  out.reserve(targets.size());
  for (const Camera& cam : targets)
    out.push_back(weak_perspective_project(skel, cam));
  return out;
}

}  // namespace splatfit
