#pragma once

// First-order fitting of a PixelGaussianGrid: Adam with linear warmup and
// cosine-annealed learning rate. The decode activations' chain rule lives
// here so the renderer and decoder stay independently gradient-checkable:
// the renderer reports post-activation grads, this module maps them to the
// raw grid space before each update.

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "splatfit/gaussian.hpp"
#include "splatfit/loss.hpp"
#include "splatfit/renderer.hpp"

namespace splatfit {

struct OptimConfig {
  Real lr0 = 4e-4;
  int total_steps = 2000;
  Real beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  Real lr_min = 0.0;
  int warmup_steps = 100;

  void validate() const;
};

struct OptimState {
  std::vector<Real> m, v;  // first/second moment accumulators
  int64_t step = 0;

  explicit OptimState(size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

/// Linear warmup to lr0 over warmup_steps, then cosine decay to lr_min at
/// total_steps. Throws when step is outside [0, total_steps].
Real lr_at(const OptimConfig& cfg, int64_t step);

/// Bias-corrected elementwise Adam update at the state's incremented step.
void adam_update(OptimState& state, std::span<Real> params,
                 std::span<const Real> grads, const OptimConfig& cfg);

/// Grid-aware update; non-finite gradients abort with a diagnostic naming
/// the offending view/pixel/channel.
void step(OptimState& state, PixelGaussianGrid& grid,
          const std::vector<Real>& raw_grads, const OptimConfig& cfg);

/// Maps post-activation Gaussian grads back to raw grid space (activation
/// chain rule). Gradient order matches decode_pixel_gaussians output order.
std::vector<Real> decode_vjp(const PixelGaussianGrid& grid,
                             const DecodeConfig& cfg,
                             const GaussianGrads& grads);

struct FitConfig {
  DecodeConfig decode;
  RenderConfig render;
  LossWeights weights;
  int proxy_levels = 3;
  OptimConfig optim;
  int views_per_step = 0;  // 0 = supervise all views every step
  uint64_t seed = 0;
  Real divergence_factor = 10.0;
  int divergence_patience = 50;
};

struct FitStepRecord {
  int64_t step = 0;
  Real lr = 0;
  Real mse = 0, perceptual = 0, silhouette = 0, total = 0;
  double wall_ms = 0;
};

struct FitResult {
  std::vector<FitStepRecord> log;
  LossBreakdown final_loss;
};

/// Raised when the loss exceeds divergence_factor x the initial loss for
/// divergence_patience consecutive steps.
struct FitDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Decode -> render supervised views -> loss -> backward -> Adam, repeated.
/// Deterministic for a fixed config and inputs. `on_step`, when set, streams
/// each record (e.g. to a JSON-lines log).
FitResult fit(PixelGaussianGrid& grid, const std::vector<Camera>& cameras,
              const std::vector<Image>& target_rgb,
              const std::vector<Image>& target_mask, const FitConfig& cfg,
              const std::function<void(const FitStepRecord&)>& on_step = {});

}  // namespace splatfit
