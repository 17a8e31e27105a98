#pragma once

// Photometric and geometric evaluation: PSNR, SSIM, the perceptual proxy,
// chamfer distance (cm), point-to-surface error (cm, exact via the scene
// SDF), and normal consistency, plus Gaussian-to-point-cloud extraction.

#include <optional>
#include <vector>

#include "splatfit/gaussian.hpp"
#include "splatfit/image.hpp"
#include "splatfit/scene.hpp"

namespace splatfit {

/// PSNR in dB; identical images report the +inf sentinel (capped at 99 when
/// serialized).
Real psnr(const Image& pred, const Image& gt, Real max_val = 1.0);

constexpr Real kPsnrCap = 99.0;

/// Mean local SSIM over the ITU-R 601 luma: 11x11 Gaussian window with
/// sigma 1.5, K1 = 0.01, K2 = 0.03, dynamic range 1, valid-region windows.
/// Requires min(H, W) >= 11.
Real ssim(const Image& pred, const Image& gt);

struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Vec3> normals;  // empty or one unit normal per point

  bool has_normals() const {
    return !normals.empty() && normals.size() == points.size();
  }
};

/// Means of Gaussians with opacity >= threshold; normals from k-NN PCA
/// (k = 16, smallest eigenvector), oriented away from the cloud centroid.
/// Returns nullopt when no Gaussian clears the threshold.
std::optional<PointCloud> gaussians_to_points(const GaussianSet& set,
                                              Real opacity_threshold = 0.05,
                                              int knn = 16);

/// Symmetric mean nearest-neighbor distance, reported in cm.
Real chamfer_cm(const PointCloud& a, const PointCloud& b);

/// Mean |scene sdf| over the cloud, in cm.
Real p2s_cm(const PointCloud& pred, const CapsuleScene& scene);

/// Mean |n_pred . n_ref(nearest)| over pred points.
Real normal_consistency(const PointCloud& pred, const PointCloud& ref);

struct ViewMetrics {
  int view = 0;
  Real azimuth_deg = 0;
  Real psnr = 0, ssim = 0, perceptual = 0;
};

struct MetricsReport {
  std::vector<ViewMetrics> per_view;
  Real mean_psnr = 0, mean_ssim = 0, mean_perceptual = 0;
  std::optional<Real> cd_cm, p2s_cm, nc;
  bool geometry_skipped = false;  // set when point extraction came up empty
  std::string perceptual_metric = "perceptual_proxy";
  std::string provider_provenance;
};

}  // namespace splatfit
