#pragma once

// Orbital camera rigs: n equidistant cameras on a fixed-radius circle looking
// at the origin, plus the canonical four-view layout consumed by providers.

#include <vector>

#include "splatfit/camera.hpp"

namespace splatfit {

struct RigSpec {
  int n_views = 16;
  Real radius = 2.7;         // scene units
  Real elevation_deg = 0.0;  // |elevation| < 90
  Real fov_y_deg = 49.1;
  int width = 512, height = 512;
  Real azimuth_offset_deg = 0.0;

  void validate() const;
};

struct CameraRig {
  std::vector<Camera> cameras;
  RigSpec spec;
};

/// Camera on the orbit defined by `spec` at the given azimuth (degrees).
Camera orbit_camera(const RigSpec& spec, Real azimuth_deg);

/// Camera k sits at azimuth_offset + k*360/n, fixed elevation and radius,
/// looking at the origin.
CameraRig build_rig(const RigSpec& spec);

/// Four cameras at {0, 90, 180, 270} degrees relative to azimuth_offset.
CameraRig canonical_four(const RigSpec& spec);

struct InputTargets {
  Camera input;
  std::vector<Camera> targets;  // 4 cameras; targets[0] pose equals input
};

/// Input camera plus the four canonical targets anchored at its azimuth.
InputTargets input_plus_targets(const RigSpec& spec, Real input_azimuth_deg);

}  // namespace splatfit
