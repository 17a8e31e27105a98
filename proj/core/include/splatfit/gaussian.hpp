#pragma once

// Pixel-aligned Gaussian representation: each cell of a per-view parameter
// grid decodes to one 3D Gaussian anchored to that cell's camera ray. A
// Gaussian carries 14 parameters (mean 3, scale 3, rotation 4, opacity 1,
// color 3); the raw grid holds 15 unconstrained channels per cell because the
// mean is parameterized as depth-along-ray plus a bounded 3D offset.

#include <cstdint>
#include <filesystem>
#include <vector>

#include "splatfit/camera.hpp"
#include "splatfit/image.hpp"
#include "splatfit/quat.hpp"

namespace splatfit {

struct Gaussian3D {
  Vec3 mean;
  Vec3 scale;  // per-axis standard deviation, scene units
  UnitQuat rotation;
  Real opacity = 0;  // [0,1]
  Vec3 color;        // RGB in [0,1]
};

struct GaussianSet {
  std::vector<Gaussian3D> gaussians;

  size_t size() const { return gaussians.size(); }
};

/// HxWx9 feature map: RGB, unit ray direction, ray moment (origin x direction).
Image ray_feature_map(const Image& image, const Camera& cam);

/// Raw grid channel layout (15 per cell).
namespace raw_channel {
enum : int {
  kDepth = 0,
  kOffsetX = 1,   // ..3
  kScaleX = 4,    // ..6
  kQuatW = 7,     // ..10
  kOpacity = 11,
  kColorR = 12,   // ..14
};
}  // namespace raw_channel

constexpr int kRawChannels = 15;

struct DecodeConfig {
  Real near = 1.2, far = 4.2;  // depth-along-ray range (rig radius -/+ 1.5)
  Real offset_scale = 0.05;    // bound on the off-ray mean correction
  Real scale_min = 1e-4, scale_max = 0.3;
};

/// Optimizable state: V views x H' x W' x 15 unconstrained reals plus the
/// cameras the cells are anchored to. V is 5 (single input) or 6 (stereo).
struct PixelGaussianGrid {
  int views = 0, grid_h = 0, grid_w = 0;
  std::vector<Real> raw;        // views * grid_h * grid_w * kRawChannels
  std::vector<Camera> cameras;  // one per view

  PixelGaussianGrid() = default;
  PixelGaussianGrid(std::vector<Camera> cams, int gh, int gw);

  size_t cell_count() const {
    return static_cast<size_t>(views) * grid_h * grid_w;
  }
  size_t raw_index(int v, int y, int x, int c) const {
    return ((static_cast<size_t>(v) * grid_h + y) * grid_w + x) * kRawChannels + c;
  }
  Real& raw_at(int v, int y, int x, int c) { return raw[raw_index(v, y, x, c)]; }
  Real raw_at(int v, int y, int x, int c) const {
    return raw[raw_index(v, y, x, c)];
  }
  void validate() const;
};

/// World-space ray through the center of cell (x, y) of a grid_h x grid_w
/// lattice spanning the camera's full field of view. Valid for any lattice
/// resolution, unlike pixel_ray, which is tied to the camera's image size.
Ray grid_cell_ray(const Camera& cam, int grid_h, int grid_w, int x, int y);

inline Real sigmoid(Real x) { return 1.0 / (1.0 + std::exp(-x)); }
inline Real logit(Real p) { return std::log(p / (1.0 - p)); }

/// Decodes every cell of every view into one Gaussian; output order is
/// view-major, then row-major within a view.
GaussianSet decode_pixel_gaussians(const PixelGaussianGrid& grid,
                                   const DecodeConfig& cfg);

/// Grid checkpoint: <prefix>.bin (raw float64) + <prefix>.json header with
/// {views, grid_h, grid_w, channels, dtype} and the per-view cameras.
void grid_save(const PixelGaussianGrid& grid, const std::filesystem::path& prefix);
PixelGaussianGrid grid_load(const std::filesystem::path& prefix);

}  // namespace splatfit
