#pragma once

// Composite fitting objective: photometric MSE, a multi-scale perceptual
// proxy, and silhouette MSE on the rendered alpha channel, averaged over
// views and combined as  total = mse + lambda1 * perceptual + lambda2 *
// silhouette  (the aggregate fields are combined in exactly that order).
//
// The perceptual term is a dependency-free stand-in for a learned perceptual
// metric: a 2x average-pool pyramid scoring image MSE plus MSE of
// finite-difference gradient magnitudes at every level, all levels equally
// weighted. It is reported everywhere as "perceptual_proxy", never as a
// learned metric.

#include <vector>

#include "splatfit/image.hpp"
#include "splatfit/renderer.hpp"

namespace splatfit {

struct LossWeights {
  Real lambda1 = 1.5;  // perceptual
  Real lambda2 = 1.0;  // silhouette

  void validate() const {
    if (lambda1 < 0 || lambda2 < 0)
      throw std::invalid_argument("loss weights must be nonnegative");
  }
};

/// Mean squared error; optionally fills d(loss)/d(pred).
Real mse_loss(const Image& pred, const Image& gt, Image* grad_pred = nullptr);

/// Multi-scale image + gradient-magnitude proxy; levels >= 1. Image sides
/// must be >= 2^levels and divisible by 2^(levels-1).
Real perceptual_proxy(const Image& pred, const Image& gt, int levels,
                      Image* grad_pred = nullptr);

/// MSE between rendered alpha and a ground-truth mask in [0,1].
Real silhouette_loss(const Image& pred_alpha, const Image& gt_mask,
                     Image* grad_alpha = nullptr);

struct ViewLoss {
  Real mse = 0, perceptual = 0, silhouette = 0, total = 0;
};

struct LossBreakdown {
  Real mse = 0, perceptual = 0, silhouette = 0, total = 0;  // means over views
  std::vector<ViewLoss> per_view;
};

struct LossGrads {
  std::vector<Image> rgb;    // d total / d rendered rgb, per view
  std::vector<Image> alpha;  // d total / d rendered alpha, per view
};

/// Mean over views of the weighted per-view objective.
LossBreakdown total_loss(const std::vector<RenderedImage>& renders,
                         const std::vector<Image>& gts,
                         const std::vector<Image>& masks,
                         const LossWeights& weights, int proxy_levels = 3,
                         LossGrads* grads = nullptr);

}  // namespace splatfit
