#include "splatfit/loss.hpp"

#include <cmath>
#include <stdexcept>

namespace splatfit {

Real mse_loss(const Image& pred, const Image& gt, Image* grad_pred) {
  require_same_shape(pred, gt, "mse_loss");
  const Real inv_n = 1.0 / static_cast<Real>(pred.data.size());
  Real sum = 0;
  for (size_t i = 0; i < pred.data.size(); ++i) {
    const Real d = pred.data[i] - gt.data[i];
    sum += d * d;
  }
  if (grad_pred) {
    *grad_pred = Image(pred.height, pred.width, pred.channels);
    for (size_t i = 0; i < pred.data.size(); ++i)
      grad_pred->data[i] = 2.0 * (pred.data[i] - gt.data[i]) * inv_n;
  }
  return sum * inv_n;
}

namespace {

constexpr Real kGradMagEps = 1e-12;  // keeps the magnitude differentiable at 0

// Finite-difference gradient magnitude on the common (H-1)x(W-1) region.
Image grad_magnitude(const Image& img) {
  Image m(img.height - 1, img.width - 1, img.channels);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const Real gx = img.at(y, x + 1, c) - img.at(y, x, c);
        const Real gy = img.at(y + 1, x, c) - img.at(y, x, c);
        m.at(y, x, c) = std::sqrt(gx * gx + gy * gy + kGradMagEps);
      }
  return m;
}

// Adjoint of grad_magnitude: scatters d(loss)/d(magnitude) back to the image.
void grad_magnitude_backward(const Image& img, const Image& mag,
                             const Image& gmag, Image& gimg) {
  for (int y = 0; y < mag.height; ++y)
    for (int x = 0; x < mag.width; ++x)
      for (int c = 0; c < img.channels; ++c) {
        const Real gx = img.at(y, x + 1, c) - img.at(y, x, c);
        const Real gy = img.at(y + 1, x, c) - img.at(y, x, c);
        const Real scale = gmag.at(y, x, c) / mag.at(y, x, c);
        gimg.at(y, x + 1, c) += scale * gx;
        gimg.at(y, x, c) -= scale * (gx + gy);
        gimg.at(y + 1, x, c) += scale * gy;
      }
}

// Adjoint of avg_pool2: each coarse cell spreads a quarter of its gradient.
Image unpool2_quarter(const Image& g, int out_h, int out_w) {
  Image out(out_h, out_w, g.channels);
  for (int y = 0; y < g.height; ++y)
    for (int x = 0; x < g.width; ++x)
      for (int c = 0; c < g.channels; ++c) {
        const Real q = 0.25 * g.at(y, x, c);
        out.at(2 * y, 2 * x, c) = q;
        out.at(2 * y, 2 * x + 1, c) = q;
        out.at(2 * y + 1, 2 * x, c) = q;
        out.at(2 * y + 1, 2 * x + 1, c) = q;
      }
  return out;
}

}  // namespace

Real perceptual_proxy(const Image& pred, const Image& gt, int levels,
                      Image* grad_pred) {
  require_same_shape(pred, gt, "perceptual_proxy");
  if (levels < 1) throw std::invalid_argument("perceptual_proxy needs levels >= 1");
  const int min_side = 1 << levels;
  const int div = 1 << (levels - 1);
  if (pred.width < min_side || pred.height < min_side ||
      pred.width % div != 0 || pred.height % div != 0)
    throw std::invalid_argument(
        "perceptual_proxy: image sides must be >= 2^levels and divisible by "
        "2^(levels-1)");

  std::vector<Image> pp{pred}, gg{gt};
  for (int l = 1; l < levels; ++l) {
    pp.push_back(avg_pool2(pp.back()));
    gg.push_back(avg_pool2(gg.back()));
  }

  Real sum = 0;
  std::vector<Image> level_grads;
  for (int l = 0; l < levels; ++l) {
    Image* g_img = nullptr;
    Image g_storage;
    if (grad_pred) {
      g_storage = Image(pp[l].height, pp[l].width, pp[l].channels);
      g_img = &g_storage;
    }
    const Real mse_term = mse_loss(pp[l], gg[l], g_img);

    const Image mp = grad_magnitude(pp[l]);
    const Image mg = grad_magnitude(gg[l]);
    Image g_mag;
    const Real mag_term = mse_loss(mp, mg, grad_pred ? &g_mag : nullptr);
    sum += mse_term + mag_term;

    if (grad_pred) {
      grad_magnitude_backward(pp[l], mp, g_mag, g_storage);
      level_grads.push_back(std::move(g_storage));
    }
  }

  if (grad_pred) {
    // Pull every level's gradient back to full resolution.
    Image acc(pred.height, pred.width, pred.channels);
    for (int l = levels - 1; l >= 0; --l) {
      Image g = std::move(level_grads[l]);
      for (int up = l; up > 0; --up)
        g = unpool2_quarter(g, pp[up - 1].height, pp[up - 1].width);
      for (size_t i = 0; i < acc.data.size(); ++i) acc.data[i] += g.data[i];
    }
    const Real inv_levels = 1.0 / levels;
    for (Real& v : acc.data) v *= inv_levels;
    *grad_pred = std::move(acc);
  }
  return sum / levels;
}

Real silhouette_loss(const Image& pred_alpha, const Image& gt_mask,
                     Image* grad_alpha) {
  for (Real v : gt_mask.data)
    if (!(v >= 0 && v <= 1))
      throw std::invalid_argument("silhouette mask must lie in [0,1]");
  return mse_loss(pred_alpha, gt_mask, grad_alpha);
}

LossBreakdown total_loss(const std::vector<RenderedImage>& renders,
                         const std::vector<Image>& gts,
                         const std::vector<Image>& masks,
                         const LossWeights& weights, int proxy_levels,
                         LossGrads* grads) {
  weights.validate();
  if (renders.size() != gts.size() || renders.size() != masks.size())
    throw std::invalid_argument("total_loss: view count mismatch");
  if (renders.empty()) throw std::invalid_argument("total_loss: no views");

  const size_t n_views = renders.size();
  const Real inv_v = 1.0 / static_cast<Real>(n_views);
  LossBreakdown out;
  out.per_view.resize(n_views);
  if (grads) {
    grads->rgb.resize(n_views);
    grads->alpha.resize(n_views);
  }

  for (size_t v = 0; v < n_views; ++v) {
    Image g_mse, g_proxy, g_alpha;
    ViewLoss& vl = out.per_view[v];
    vl.mse = mse_loss(renders[v].rgb, gts[v], grads ? &g_mse : nullptr);
    vl.perceptual = perceptual_proxy(renders[v].rgb, gts[v], proxy_levels,
                                     grads ? &g_proxy : nullptr);
    vl.silhouette =
        silhouette_loss(renders[v].alpha, masks[v], grads ? &g_alpha : nullptr);
    vl.total = vl.mse + weights.lambda1 * vl.perceptual +
               weights.lambda2 * vl.silhouette;

    out.mse += vl.mse;
    out.perceptual += vl.perceptual;
    out.silhouette += vl.silhouette;

    if (grads) {
      Image rgb(g_mse.height, g_mse.width, g_mse.channels);
      for (size_t i = 0; i < rgb.data.size(); ++i)
        rgb.data[i] =
            inv_v * (g_mse.data[i] + weights.lambda1 * g_proxy.data[i]);
      grads->rgb[v] = std::move(rgb);
      for (Real& x : g_alpha.data) x *= inv_v * weights.lambda2;
      grads->alpha[v] = std::move(g_alpha);
    }
  }

  out.mse *= inv_v;
  out.perceptual *= inv_v;
  out.silhouette *= inv_v;
  out.total = out.mse + weights.lambda1 * out.perceptual +
              weights.lambda2 * out.silhouette;
  return out;
}

}  // namespace splatfit
