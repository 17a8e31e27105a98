#pragma once

#include "splatfit/vec.hpp"

namespace splatfit {

/// Unit quaternion (w, x, y, z). Invariant: unit norm within 1e-6.
struct UnitQuat {
  Real w = 1, x = 0, y = 0, z = 0;

  static UnitQuat identity() { return {}; }

  /// Normalizes an arbitrary nonzero quaternion.
  static UnitQuat from(Real w, Real x, Real y, Real z) {
    const Real n = std::sqrt(w * w + x * x + y * y + z * z);
    if (n == 0) throw std::invalid_argument("zero-norm quaternion");
    return {w / n, x / n, y / n, z / n};
  }

  Real norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  bool is_unit(Real tol = 1e-6) const { return std::abs(norm() - 1.0) <= tol; }

  UnitQuat conjugate() const { return {w, -x, -y, -z}; }

  /// Hamilton product. Result is unit when both operands are.
  UnitQuat operator*(const UnitQuat& q) const {
    return {w * q.w - x * q.x - y * q.y - z * q.z,
            w * q.x + x * q.w + y * q.z - z * q.y,
            w * q.y - x * q.z + y * q.w + z * q.x,
            w * q.z + x * q.y - y * q.x + z * q.w};
  }
};

/// Rotation matrix of a unit quaternion; q and -q map to the same matrix.
inline Mat3 quat_to_rotmat(const UnitQuat& q) {
  const Real w = q.w, x = q.x, y = q.y, z = q.z;
  Mat3 r;
  r.m = {{{1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)},
          {2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)},
          {2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)}}};
  return r;
}

/// Quaternion for a rotation of `angle_rad` about a unit `axis`.
inline UnitQuat axis_angle_quat(const Vec3& axis, Real angle_rad) {
  const Vec3 a = axis.normalized();
  const Real h = angle_rad / 2;
  const Real s = std::sin(h);
  return {std::cos(h), a.x * s, a.y * s, a.z * s};
}

}  // namespace splatfit
