#include "splatfit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "splatfit/kdtree.hpp"
#include "splatfit/parallel.hpp"

namespace splatfit {

Real psnr(const Image& pred, const Image& gt, Real max_val) {
  const Real mse = image_mse(pred, gt);
  if (mse == 0) return std::numeric_limits<Real>::infinity();
  return 10.0 * std::log10(max_val * max_val / mse);
}

namespace {

std::vector<Real> gaussian_window(int size, Real sigma) {
  std::vector<Real> w(size);
  const Real c = (size - 1) / 2.0;
  Real sum = 0;
  for (int i = 0; i < size; ++i) {
    w[i] = std::exp(-(i - c) * (i - c) / (2 * sigma * sigma));
    sum += w[i];
  }
  for (Real& v : w) v /= sum;
  return w;
}

// Separable valid-region convolution with a symmetric 1D window.
Image conv_valid(const Image& img, const std::vector<Real>& w) {
  const int k = static_cast<int>(w.size());
  Image tmp(img.height, img.width - k + 1, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < tmp.width; ++x) {
      Real acc = 0;
      for (int i = 0; i < k; ++i) acc += w[i] * img.at(y, x + i);
      tmp.at(y, x) = acc;
    }
  Image out(img.height - k + 1, tmp.width, 1);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x) {
      Real acc = 0;
      for (int i = 0; i < k; ++i) acc += w[i] * tmp.at(y + i, x);
      out.at(y, x) = acc;
    }
  return out;
}

Image cwise_mul(const Image& a, const Image& b) {
  Image out = a;
  for (size_t i = 0; i < out.data.size(); ++i) out.data[i] *= b.data[i];
  return out;
}

}  // namespace

Real ssim(const Image& pred, const Image& gt) {
  require_same_shape(pred, gt, "ssim");
  if (pred.width < 11 || pred.height < 11)
    throw std::invalid_argument("ssim requires images of at least 11x11");
  const Image x = pred.channels == 3 ? to_luma601(pred) : pred;
  const Image y = gt.channels == 3 ? to_luma601(gt) : gt;

  constexpr Real kC1 = 0.01 * 0.01;  // (K1 L)^2 with L = 1
  constexpr Real kC2 = 0.03 * 0.03;
  const std::vector<Real> w = gaussian_window(11, 1.5);

  const Image mu_x = conv_valid(x, w);
  const Image mu_y = conv_valid(y, w);
  const Image exx = conv_valid(cwise_mul(x, x), w);
  const Image eyy = conv_valid(cwise_mul(y, y), w);
  const Image exy = conv_valid(cwise_mul(x, y), w);

  Real sum = 0;
  for (size_t i = 0; i < mu_x.data.size(); ++i) {
    const Real mx = mu_x.data[i], my = mu_y.data[i];
    const Real vx = exx.data[i] - mx * mx;
    const Real vy = eyy.data[i] - my * my;
    const Real cxy = exy.data[i] - mx * my;
    sum += ((2 * mx * my + kC1) * (2 * cxy + kC2)) /
           ((mx * mx + my * my + kC1) * (vx + vy + kC2));
  }
  return sum / static_cast<Real>(mu_x.data.size());
}

std::optional<PointCloud> gaussians_to_points(const GaussianSet& set,
                                              Real opacity_threshold,
                                              int knn) {
  if (!(opacity_threshold > 0 && opacity_threshold < 1))
    throw std::invalid_argument("opacity threshold must lie in (0, 1)");
  PointCloud cloud;
  for (const Gaussian3D& g : set.gaussians)
    if (g.opacity >= opacity_threshold) cloud.points.push_back(g.mean);
  if (cloud.points.empty()) return std::nullopt;

  Vec3 centroid{};
  for (const Vec3& p : cloud.points) centroid += p;
  centroid = centroid / static_cast<Real>(cloud.points.size());

  const KdTree3 tree(cloud.points);
  const int k = std::min<int>(knn, static_cast<int>(cloud.points.size()));
  cloud.normals.resize(cloud.points.size());
  parallel_for(static_cast<std::int64_t>(cloud.points.size()), [&](std::int64_t i) {
    const auto nbrs = tree.knearest(cloud.points[i], k);
    Vec3 mean{};
    for (const auto& h : nbrs) mean += cloud.points[h.index];
    mean = mean / static_cast<Real>(nbrs.size());
    Real cov[3][3] = {};
    for (const auto& h : nbrs) {
      const Vec3 d = cloud.points[h.index] - mean;
      const Real v[3] = {d.x, d.y, d.z};
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) cov[r][c] += v[r] * v[c];
    }
    // Smallest eigenvector via cyclic Jacobi sweeps on the symmetric 3x3.
    Real a[3][3];
    std::copy(&cov[0][0], &cov[0][0] + 9, &a[0][0]);
    Real vmat[3][3] = {{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (int sweep = 0; sweep < 16; ++sweep) {
      Real off = std::abs(a[0][1]) + std::abs(a[0][2]) + std::abs(a[1][2]);
      if (off < 1e-18) break;
      for (int p = 0; p < 2; ++p)
        for (int q = p + 1; q < 3; ++q) {
          if (std::abs(a[p][q]) < 1e-30) continue;
          const Real theta = 0.5 * std::atan2(2 * a[p][q], a[q][q] - a[p][p]);
          const Real c = std::cos(theta), s = std::sin(theta);
          for (int r = 0; r < 3; ++r) {
            const Real arp = a[r][p], arq = a[r][q];
            a[r][p] = c * arp - s * arq;
            a[r][q] = s * arp + c * arq;
          }
          for (int r = 0; r < 3; ++r) {
            const Real apr = a[p][r], aqr = a[q][r];
            a[p][r] = c * apr - s * aqr;
            a[q][r] = s * apr + c * aqr;
          }
          for (int r = 0; r < 3; ++r) {
            const Real vrp = vmat[r][p], vrq = vmat[r][q];
            vmat[r][p] = c * vrp - s * vrq;
            vmat[r][q] = s * vrp + c * vrq;
          }
        }
    }
    int smallest = 0;
    for (int d = 1; d < 3; ++d)
      if (a[d][d] < a[smallest][smallest]) smallest = d;
    Vec3 n{vmat[0][smallest], vmat[1][smallest], vmat[2][smallest]};
    const Real len = n.norm();
    n = len > 0 ? n / len : Vec3{0, 0, 1};
    if (n.dot(cloud.points[i] - centroid) < 0) n = -n;
    cloud.normals[i] = n;
  });
  return cloud;
}

Real chamfer_cm(const PointCloud& a, const PointCloud& b) {
  if (a.points.empty() || b.points.empty())
    throw std::invalid_argument("chamfer on an empty cloud");
  const KdTree3 ta(a.points), tb(b.points);
  Real sum_ab = 0, sum_ba = 0;
  for (const Vec3& p : a.points) sum_ab += std::sqrt(tb.nearest(p).dist2);
  for (const Vec3& q : b.points) sum_ba += std::sqrt(ta.nearest(q).dist2);
  const Real mean_ab = sum_ab / static_cast<Real>(a.points.size());
  const Real mean_ba = sum_ba / static_cast<Real>(b.points.size());
  return 100.0 * 0.5 * (mean_ab + mean_ba);
}

Real p2s_cm(const PointCloud& pred, const CapsuleScene& scene) {
  if (pred.points.empty()) throw std::invalid_argument("p2s on an empty cloud");
  Real sum = 0;
  for (const Vec3& p : pred.points) sum += surface_distance(scene, p);
  return 100.0 * sum / static_cast<Real>(pred.points.size());
}

Real normal_consistency(const PointCloud& pred, const PointCloud& ref) {
  if (!pred.has_normals() || !ref.has_normals())
    throw std::invalid_argument("normal_consistency requires normals");
  const KdTree3 tree(ref.points);
  Real sum = 0;
  for (size_t i = 0; i < pred.points.size(); ++i) {
    const int j = tree.nearest(pred.points[i]).index;
    sum += std::abs(pred.normals[i].dot(ref.normals[j]));
  }
  return sum / static_cast<Real>(pred.points.size());
}

}  // namespace splatfit
