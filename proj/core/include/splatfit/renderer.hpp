#pragma once

// Differentiable 3D Gaussian splatting renderer.
//
// Forward: EWA projection of each Gaussian to an image-plane footprint,
// global stable depth sort, tile binning, front-to-back alpha compositing.
// Backward: exact analytic adjoints of the compositing and projection with
// respect to all 14 post-activation Gaussian parameters.
//
// Per-pixel contribution of Gaussian i (pixel center p, projected mean mu,
// conic L = cov2d^-1):
//   sigma = 1/2 (p - mu)^T L (p - mu)
//   alpha = min(0.999, opacity * exp(-sigma)), skipped when alpha < cutoff
//   C = sum c_i alpha_i T_i,  T_i = prod_{j<i} (1 - alpha_j)
// The loop terminates once T drops below transmittance_floor; the remaining
// transmittance is filled with the background color.

#include <array>
#include <optional>
#include <vector>

#include "splatfit/gaussian.hpp"
#include "splatfit/image.hpp"
#include "splatfit/rig.hpp"

namespace splatfit {

struct RenderConfig {
  Vec3 background{0, 0, 0};
  int tile = 16;  // power of two
  Real near = 0.1, far = 1e6;
  Real alpha_cutoff = 1.0 / 255.0;   // in (0, 0.05]
  Real footprint_sigma = 3.5;        // tile-binning radius multiplier, [2, 4];
                                     // 3.5 covers every alpha >= 1/255 pixel
  Real transmittance_floor = 1e-4;
  bool with_depth = false;

  void validate() const;
};

struct RenderedImage {
  Image rgb;    // HxWx3
  Image alpha;  // HxW
  Image depth;  // HxW (alpha-weighted), empty unless requested
};

/// 2D covariance regularizer added to both diagonal entries (pixels^2).
constexpr Real kCovarianceDilation = 0.3;

struct ProjectedGaussian {
  Vec2 mean2d;
  Real cov_xx, cov_xy, cov_yy;  // dilated 2D covariance
  Real depth;
};

/// EWA projection: Sigma = R diag(scale^2) R^T mapped through the camera
/// rotation and the perspective Jacobian at the mean. Returns nullopt when
/// the mean is not beyond the near plane (culled, not an error).
std::optional<ProjectedGaussian> project_gaussian(const Camera& cam,
                                                  const Gaussian3D& g,
                                                  Real near = 0.1);

/// Loss partials per Gaussian in post-activation parameter space; zero for
/// culled or never-contributing Gaussians.
struct GaussianGrad {
  Vec3 mean;
  Vec3 scale;
  std::array<Real, 4> rot{0, 0, 0, 0};
  Real opacity = 0;
  Vec3 color;

  GaussianGrad& operator+=(const GaussianGrad& o);
};

struct GaussianGrads {
  std::vector<GaussianGrad> per_gaussian;

  GaussianGrads() = default;
  explicit GaussianGrads(size_t n) : per_gaussian(n) {}
  GaussianGrads& operator+=(const GaussianGrads& o);
  bool finite() const;
};

/// Projection, depth sort, and tile binning shared by the forward and
/// backward passes; build once per (set, camera) and reuse.
struct PreparedView {
  struct Splat {
    // screen-space footprint
    Vec2 mean2d;
    Real depth;
    Real cov_xx, cov_xy, cov_yy;
    Real conic_xx, conic_xy, conic_yy;
    Real radius;
    // exponent level beyond which alpha falls below the cutoff; padded so
    // the cheap sigma test can never disagree with the exact alpha test
    Real sigma_cut;
    // appearance and original parameters (needed by the backward chain)
    Vec3 color;
    Real opacity;
    Vec3 mean3d, scale3d;
    std::array<Real, 4> quat;
    int32_t index;  // position in the input GaussianSet
  };

  int width = 0, height = 0;
  int tiles_x = 0, tiles_y = 0;
  size_t total_gaussians = 0;
  Camera cam;
  RenderConfig cfg;
  std::vector<Splat> splats;        // frustum-culled, stable depth order
  std::vector<int32_t> tile_offsets;  // CSR over tiles
  std::vector<int32_t> tile_items;    // splat positions, depth order per tile
};

PreparedView prepare_view(const GaussianSet& set, const Camera& cam,
                          const RenderConfig& cfg);

RenderedImage render_prepared(const PreparedView& view);

GaussianGrads render_backward_prepared(const PreparedView& view,
                                       const Image& grad_rgb,
                                       const Image& grad_alpha);

RenderedImage render(const GaussianSet& set, const Camera& cam,
                     const RenderConfig& cfg);

GaussianGrads render_backward(const GaussianSet& set, const Camera& cam,
                              const RenderConfig& cfg, const Image& grad_rgb,
                              const Image& grad_alpha);

/// Independent render per rig camera.
std::vector<RenderedImage> render_views(const GaussianSet& set,
                                        const CameraRig& rig,
                                        const RenderConfig& cfg);

}  // namespace splatfit
