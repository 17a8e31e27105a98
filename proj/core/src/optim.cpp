#include "splatfit/optim.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "splatfit/parallel.hpp"

namespace splatfit {

void OptimConfig::validate() const {
  if (!(lr0 > 0)) throw std::invalid_argument("lr0 must be positive");
  if (!(lr_min >= 0 && lr_min <= lr0))
    throw std::invalid_argument("lr_min must lie in [0, lr0]");
  if (!(beta1 > 0 && beta1 < 1 && beta2 > 0 && beta2 < 1))
    throw std::invalid_argument("Adam betas must lie in (0, 1)");
  if (!(eps > 0)) throw std::invalid_argument("Adam eps must be positive");
  if (total_steps < 1) throw std::invalid_argument("total_steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw std::invalid_argument("warmup_steps must lie in [0, total_steps)");
}

Real lr_at(const OptimConfig& cfg, int64_t step) {
  cfg.validate();
  if (step < 0 || step > cfg.total_steps) {
    std::ostringstream msg;
    msg << "lr_at step " << step << " outside [0, " << cfg.total_steps << "]";
    throw std::invalid_argument(msg.str());
  }
  if (step < cfg.warmup_steps)
    return cfg.lr0 * static_cast<Real>(step) / cfg.warmup_steps;
  const Real tau = static_cast<Real>(step - cfg.warmup_steps) /
                   static_cast<Real>(cfg.total_steps - cfg.warmup_steps);
  return cfg.lr_min + (cfg.lr0 - cfg.lr_min) * 0.5 * (1.0 + std::cos(kPi * tau));
}

void adam_update(OptimState& state, std::span<Real> params,
                 std::span<const Real> grads, const OptimConfig& cfg) {
  if (params.size() != grads.size() || state.m.size() != params.size() ||
      state.v.size() != params.size())
    throw std::invalid_argument("adam_update: shape mismatch");
  const int64_t t = ++state.step;
  const Real lr = lr_at(cfg, std::min<int64_t>(t, cfg.total_steps));
  const Real bc1 = 1.0 - std::pow(cfg.beta1, static_cast<Real>(t));
  const Real bc2 = 1.0 - std::pow(cfg.beta2, static_cast<Real>(t));
  for (size_t i = 0; i < params.size(); ++i) {
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * grads[i];
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * grads[i] * grads[i];
    const Real mhat = state.m[i] / bc1;
    const Real vhat = state.v[i] / bc2;
    params[i] -= lr * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

void step(OptimState& state, PixelGaussianGrid& grid,
          const std::vector<Real>& raw_grads, const OptimConfig& cfg) {
  if (raw_grads.size() != grid.raw.size())
    throw std::invalid_argument("step: gradient/grid size mismatch");
  for (size_t i = 0; i < raw_grads.size(); ++i) {
    if (std::isfinite(raw_grads[i])) continue;
    const size_t cell = i / kRawChannels;
    const int ch = static_cast<int>(i % kRawChannels);
    const int x = static_cast<int>(cell % grid.grid_w);
    const int y = static_cast<int>((cell / grid.grid_w) % grid.grid_h);
    const int v = static_cast<int>(cell / (static_cast<size_t>(grid.grid_w) *
                                           grid.grid_h));
    std::ostringstream msg;
    msg << "non-finite gradient at view " << v << ", pixel (" << y << ", " << x
        << "), channel " << ch;
    throw std::runtime_error(msg.str());
  }
  adam_update(state, grid.raw, raw_grads, cfg);
}

std::vector<Real> decode_vjp(const PixelGaussianGrid& grid,
                             const DecodeConfig& cfg,
                             const GaussianGrads& grads) {
  grid.validate();
  if (grads.per_gaussian.size() != grid.cell_count())
    throw std::invalid_argument("decode_vjp: gradient count mismatch");

  std::vector<Real> out(grid.raw.size(), 0.0);
  namespace ch = raw_channel;
  size_t cell = 0;
  for (int v = 0; v < grid.views; ++v) {
    const Camera& cam = grid.cameras[v];
    for (int y = 0; y < grid.grid_h; ++y)
      for (int x = 0; x < grid.grid_w; ++x, ++cell) {
        const GaussianGrad& g = grads.per_gaussian[cell];
        const Real* raw = &grid.raw[grid.raw_index(v, y, x, 0)];
        Real* dst = &out[grid.raw_index(v, y, x, 0)];
        const Ray ray = grid_cell_ray(cam, grid.grid_h, grid.grid_w, x, y);

        const Real sd = sigmoid(raw[ch::kDepth]);
        dst[ch::kDepth] = g.mean.dot(ray.direction) * (cfg.far - cfg.near) *
                          sd * (1.0 - sd);
        for (int k = 0; k < 3; ++k) {
          const Real th = std::tanh(raw[ch::kOffsetX + k]);
          dst[ch::kOffsetX + k] =
              g.mean[k] * cfg.offset_scale * (1.0 - th * th);
        }
        for (int k = 0; k < 3; ++k) {
          const Real ss = sigmoid(raw[ch::kScaleX + k]);
          dst[ch::kScaleX + k] =
              g.scale[k] * (cfg.scale_max - cfg.scale_min) * ss * (1.0 - ss);
        }
        const Real qw = raw[ch::kQuatW] + 1.0, qx = raw[ch::kQuatW + 1],
                   qy = raw[ch::kQuatW + 2], qz = raw[ch::kQuatW + 3];
        const Real qn = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
        if (qn > 0) {
          const Real qh[4] = {qw / qn, qx / qn, qy / qn, qz / qn};
          const Real radial = qh[0] * g.rot[0] + qh[1] * g.rot[1] +
                              qh[2] * g.rot[2] + qh[3] * g.rot[3];
          for (int k = 0; k < 4; ++k)
            dst[ch::kQuatW + k] = (g.rot[k] - qh[k] * radial) / qn;
        }
        const Real so = sigmoid(raw[ch::kOpacity]);
        dst[ch::kOpacity] = g.opacity * so * (1.0 - so);
        for (int k = 0; k < 3; ++k) {
          const Real sc = sigmoid(raw[ch::kColorR + k]);
          dst[ch::kColorR + k] = g.color[k] * sc * (1.0 - sc);
        }
      }
  }
  return out;
}

FitResult fit(PixelGaussianGrid& grid, const std::vector<Camera>& cameras,
              const std::vector<Image>& target_rgb,
              const std::vector<Image>& target_mask, const FitConfig& cfg,
              const std::function<void(const FitStepRecord&)>& on_step) {
  grid.validate();
  cfg.optim.validate();
  if (cameras.size() != target_rgb.size() ||
      cameras.size() != target_mask.size() || cameras.empty())
    throw std::invalid_argument("fit: camera/target count mismatch");

  const size_t n_views = cameras.size();
  std::vector<size_t> all_views(n_views);
  for (size_t i = 0; i < n_views; ++i) all_views[i] = i;
  const bool subsample =
      cfg.views_per_step > 0 &&
      cfg.views_per_step < static_cast<int>(n_views);
  std::mt19937_64 view_rng(cfg.seed);

  OptimState state(grid.raw.size());
  FitResult result;
  result.log.reserve(cfg.optim.total_steps);
  Real initial_total = -1;
  int divergent_streak = 0;

  for (int64_t it = 1; it <= cfg.optim.total_steps; ++it) {
    const auto t0 = std::chrono::steady_clock::now();

    std::vector<size_t> chosen = all_views;
    if (subsample) {
      std::vector<size_t> pool = all_views;
      chosen.clear();
      for (int k = 0; k < cfg.views_per_step; ++k) {
        std::uniform_int_distribution<size_t> pick(0, pool.size() - 1);
        const size_t j = pick(view_rng);
        chosen.push_back(pool[j]);
        pool.erase(pool.begin() + static_cast<std::ptrdiff_t>(j));
      }
    }

    const GaussianSet set = decode_pixel_gaussians(grid, cfg.decode);

    std::vector<PreparedView> prepared(chosen.size());
    parallel_for(static_cast<std::int64_t>(chosen.size()), [&](std::int64_t k) {
      prepared[k] = prepare_view(set, cameras[chosen[k]], cfg.render);
    });
    std::vector<RenderedImage> renders;
    std::vector<Image> gts, masks;
    for (size_t k = 0; k < chosen.size(); ++k) {
      renders.push_back(render_prepared(prepared[k]));
      gts.push_back(target_rgb[chosen[k]]);
      masks.push_back(target_mask[chosen[k]]);
    }

    LossGrads lgrads;
    const LossBreakdown breakdown =
        total_loss(renders, gts, masks, cfg.weights, cfg.proxy_levels, &lgrads);

    GaussianGrads acc(set.size());
    for (size_t k = 0; k < prepared.size(); ++k)
      acc += render_backward_prepared(prepared[k], lgrads.rgb[k],
                                      lgrads.alpha[k]);

    const std::vector<Real> raw_grads = decode_vjp(grid, cfg.decode, acc);
    step(state, grid, raw_grads, cfg.optim);

    const auto t1 = std::chrono::steady_clock::now();
    FitStepRecord rec;
    rec.step = it;
    rec.lr = lr_at(cfg.optim, it);
    rec.mse = breakdown.mse;
    rec.perceptual = breakdown.perceptual;
    rec.silhouette = breakdown.silhouette;
    rec.total = breakdown.total;
    rec.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
    if (on_step) on_step(rec);
    result.log.push_back(rec);
    result.final_loss = breakdown;

    if (initial_total < 0) initial_total = breakdown.total;
    if (breakdown.total > cfg.divergence_factor * initial_total)
      ++divergent_streak;
    else
      divergent_streak = 0;
    if (divergent_streak >= cfg.divergence_patience) {
      std::ostringstream msg;
      msg << "fit diverged: loss " << breakdown.total << " above "
          << cfg.divergence_factor << "x initial " << initial_total << " for "
          << divergent_streak << " consecutive steps (step " << it << ")";
      throw FitDivergence(msg.str());
    }
  }
  return result;
}

}  // namespace splatfit
