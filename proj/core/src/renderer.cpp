#include "splatfit/renderer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "splatfit/parallel.hpp"

namespace splatfit {

void RenderConfig::validate() const {
  if (tile < 1 || (tile & (tile - 1)) != 0)
    throw std::invalid_argument("tile size must be a power of two");
  if (!(near > 0 && near < far))
    throw std::invalid_argument("render config requires 0 < near < far");
  if (!(alpha_cutoff > 0 && alpha_cutoff <= 0.05))
    throw std::invalid_argument("alpha_cutoff must lie in (0, 0.05]");
  if (!(footprint_sigma >= 2 && footprint_sigma <= 4))
    throw std::invalid_argument("footprint_sigma must lie in [2, 4]");
  if (!(transmittance_floor > 0 && transmittance_floor < 1))
    throw std::invalid_argument("transmittance_floor must lie in (0, 1)");
}

GaussianGrad& GaussianGrad::operator+=(const GaussianGrad& o) {
  mean += o.mean;
  scale += o.scale;
  for (int i = 0; i < 4; ++i) rot[i] += o.rot[i];
  opacity += o.opacity;
  color += o.color;
  return *this;
}

GaussianGrads& GaussianGrads::operator+=(const GaussianGrads& o) {
  if (per_gaussian.size() != o.per_gaussian.size())
    throw std::invalid_argument("GaussianGrads size mismatch");
  for (size_t i = 0; i < per_gaussian.size(); ++i)
    per_gaussian[i] += o.per_gaussian[i];
  return *this;
}

bool GaussianGrads::finite() const {
  for (const GaussianGrad& g : per_gaussian) {
    if (!g.mean.finite() || !g.scale.finite() || !g.color.finite()) return false;
    if (!std::isfinite(g.opacity)) return false;
    for (Real r : g.rot)
      if (!std::isfinite(r)) return false;
  }
  return true;
}

namespace {

struct CamFrame {
  Mat3 w;        // world -> camera rotation
  Vec3 t;        // camera-frame mean
  Real fx, fy;
};

// Perspective Jacobian at the camera-frame mean (rows of the 2x3 matrix).
void jacobian(const CamFrame& f, Real j[2][3]) {
  const Real iz = 1.0 / f.t.z;
  const Real iz2 = iz * iz;
  j[0][0] = f.fx * iz;
  j[0][1] = 0;
  j[0][2] = -f.fx * f.t.x * iz2;
  j[1][0] = 0;
  j[1][1] = f.fy * iz;
  j[1][2] = -f.fy * f.t.y * iz2;
}

Mat3 covariance3d(const UnitQuat& q, const Vec3& scale) {
  const Mat3 r = quat_to_rotmat(q);
  const Mat3 m = r * Mat3::diag(scale);
  return m * m.transpose();
}

}  // namespace

std::optional<ProjectedGaussian> project_gaussian(const Camera& cam,
                                                  const Gaussian3D& g,
                                                  Real near) {
  CamFrame f{cam.rotation, cam.world_to_cam(g.mean), cam.intrinsics.fx,
             cam.intrinsics.fy};
  if (!(f.t.z > near)) return std::nullopt;

  const UnitQuat q = UnitQuat::from(g.rotation.w, g.rotation.x, g.rotation.y,
                                    g.rotation.z);
  const Mat3 p = f.w * covariance3d(q, g.scale) * f.w.transpose();
  Real j[2][3];
  jacobian(f, j);

  // cov2d = J P J^T
  Real jp[2][3];
  for (int a = 0; a < 2; ++a)
    for (int b = 0; b < 3; ++b)
      jp[a][b] = j[a][0] * p(0, b) + j[a][1] * p(1, b) + j[a][2] * p(2, b);
  ProjectedGaussian out;
  out.cov_xx = jp[0][0] * j[0][0] + jp[0][1] * j[0][1] + jp[0][2] * j[0][2] +
               kCovarianceDilation;
  out.cov_xy = jp[0][0] * j[1][0] + jp[0][1] * j[1][1] + jp[0][2] * j[1][2];
  out.cov_yy = jp[1][0] * j[1][0] + jp[1][1] * j[1][1] + jp[1][2] * j[1][2] +
               kCovarianceDilation;
  out.mean2d = {f.fx * f.t.x / f.t.z + cam.intrinsics.cx,
                f.fy * f.t.y / f.t.z + cam.intrinsics.cy};
  out.depth = f.t.z;
  return out;
}

PreparedView prepare_view(const GaussianSet& set, const Camera& cam,
                          const RenderConfig& cfg) {
  cfg.validate();
  PreparedView view;
  view.width = cam.intrinsics.width;
  view.height = cam.intrinsics.height;
  view.tiles_x = (view.width + cfg.tile - 1) / cfg.tile;
  view.tiles_y = (view.height + cfg.tile - 1) / cfg.tile;
  view.total_gaussians = set.size();
  view.cam = cam;
  view.cfg = cfg;

  std::vector<PreparedView::Splat> unsorted;
  unsorted.reserve(set.size());
  for (int32_t i = 0; i < static_cast<int32_t>(set.size()); ++i) {
    const Gaussian3D& g = set.gaussians[i];
    // opacity below the cutoff can never produce a visible contribution
    if (g.opacity < cfg.alpha_cutoff) continue;
    const auto proj = project_gaussian(cam, g, cfg.near);
    if (!proj || proj->depth >= cfg.far) continue;

    const Real mid = 0.5 * (proj->cov_xx + proj->cov_yy);
    const Real disc = std::sqrt(std::max<Real>(
        0.0, 0.25 * (proj->cov_xx - proj->cov_yy) * (proj->cov_xx - proj->cov_yy) +
                 proj->cov_xy * proj->cov_xy));
    // Pixels with alpha >= cutoff lie within sqrt(2 ln(opacity/cutoff)) sigma
    // of the center, so the bin radius tightens for translucent splats; the
    // configured footprint_sigma stays the upper bound.
    const Real sigma_mult = std::min<Real>(
        cfg.footprint_sigma,
        std::sqrt(2.0 * std::log(g.opacity / cfg.alpha_cutoff)) + 1e-6);
    const Real radius = sigma_mult * std::sqrt(mid + disc);
    if (proj->mean2d.x + radius < 0 || proj->mean2d.x - radius > view.width ||
        proj->mean2d.y + radius < 0 || proj->mean2d.y - radius > view.height)
      continue;

    const Real det =
        proj->cov_xx * proj->cov_yy - proj->cov_xy * proj->cov_xy;
    PreparedView::Splat s;
    s.mean2d = proj->mean2d;
    s.depth = proj->depth;
    s.cov_xx = proj->cov_xx;
    s.cov_xy = proj->cov_xy;
    s.cov_yy = proj->cov_yy;
    s.conic_xx = proj->cov_yy / det;
    s.conic_xy = -proj->cov_xy / det;
    s.conic_yy = proj->cov_xx / det;
    s.radius = radius;
    s.sigma_cut = std::log(g.opacity / cfg.alpha_cutoff) + 1e-9;
    s.color = g.color;
    s.opacity = g.opacity;
    s.mean3d = g.mean;
    s.scale3d = g.scale;
    s.quat = {g.rotation.w, g.rotation.x, g.rotation.y, g.rotation.z};
    s.index = i;
    unsorted.push_back(s);
  }

  // Global front-to-back order; the stable (depth, position) key keeps input
  // order on depth ties. Sorting small keys then gathering once beats
  // sorting the splat structs directly.
  std::vector<std::pair<Real, int32_t>> order(unsorted.size());
  for (size_t i = 0; i < unsorted.size(); ++i)
    order[i] = {unsorted[i].depth, static_cast<int32_t>(i)};
  std::sort(order.begin(), order.end());
  view.splats.reserve(unsorted.size());
  for (const auto& [depth, pos] : order) view.splats.push_back(unsorted[pos]);

  // CSR tile bins, filled in depth order.
  const int n_tiles = view.tiles_x * view.tiles_y;
  auto tile_span = [&](const PreparedView::Splat& s, int& tx0, int& tx1,
                       int& ty0, int& ty1) {
    tx0 = std::max(0, static_cast<int>(std::floor((s.mean2d.x - s.radius) / cfg.tile)));
    tx1 = std::min(view.tiles_x - 1,
                   static_cast<int>(std::floor((s.mean2d.x + s.radius) / cfg.tile)));
    ty0 = std::max(0, static_cast<int>(std::floor((s.mean2d.y - s.radius) / cfg.tile)));
    ty1 = std::min(view.tiles_y - 1,
                   static_cast<int>(std::floor((s.mean2d.y + s.radius) / cfg.tile)));
  };

  std::vector<int32_t> counts(n_tiles, 0);
  for (const auto& s : view.splats) {
    int tx0, tx1, ty0, ty1;
    tile_span(s, tx0, tx1, ty0, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx) ++counts[ty * view.tiles_x + tx];
  }
  view.tile_offsets.assign(n_tiles + 1, 0);
  std::partial_sum(counts.begin(), counts.end(), view.tile_offsets.begin() + 1);
  view.tile_items.resize(view.tile_offsets.back());
  std::vector<int32_t> cursor(view.tile_offsets.begin(),
                              view.tile_offsets.end() - 1);
  for (int32_t pos = 0; pos < static_cast<int32_t>(view.splats.size()); ++pos) {
    int tx0, tx1, ty0, ty1;
    tile_span(view.splats[pos], tx0, tx1, ty0, ty1);
    for (int ty = ty0; ty <= ty1; ++ty)
      for (int tx = tx0; tx <= tx1; ++tx)
        view.tile_items[cursor[ty * view.tiles_x + tx]++] = pos;
  }
  return view;
}

RenderedImage render_prepared(const PreparedView& view) {
  const RenderConfig& cfg = view.cfg;
  RenderedImage out{Image(view.height, view.width, 3),
                    Image(view.height, view.width, 1),
                    cfg.with_depth ? Image(view.height, view.width, 1) : Image()};

  const int n_tiles = view.tiles_x * view.tiles_y;
  parallel_for(n_tiles, [&](std::int64_t tile_id) {
    const int tx = static_cast<int>(tile_id) % view.tiles_x;
    const int ty = static_cast<int>(tile_id) / view.tiles_x;
    const int x0 = tx * cfg.tile, x1 = std::min(view.width, x0 + cfg.tile);
    const int y0 = ty * cfg.tile, y1 = std::min(view.height, y0 + cfg.tile);
    const int32_t begin = view.tile_offsets[tile_id];
    const int32_t end = view.tile_offsets[tile_id + 1];

    for (int y = y0; y < y1; ++y) {
      const Real py = y + 0.5;
      for (int x = x0; x < x1; ++x) {
        const Real px = x + 0.5;
        Vec3 c{};
        Real depth_acc = 0;
        Real t = 1.0;
        for (int32_t k = begin; k < end; ++k) {
          const PreparedView::Splat& s = view.splats[view.tile_items[k]];
          const Real dx = px - s.mean2d.x, dy = py - s.mean2d.y;
          const Real sigma =
              0.5 * (s.conic_xx * dx * dx + s.conic_yy * dy * dy) +
              s.conic_xy * dx * dy;
          if (sigma < 0 || sigma > s.sigma_cut) continue;
          Real alpha = s.opacity * std::exp(-sigma);
          if (alpha < cfg.alpha_cutoff) continue;
          alpha = std::min<Real>(alpha, 0.999);
          const Real w = alpha * t;
          c += s.color * w;
          if (cfg.with_depth) depth_acc += s.depth * w;
          t *= 1.0 - alpha;
          if (t < cfg.transmittance_floor) break;
        }
        out.rgb.set_rgb(y, x, c + cfg.background * t);
        out.alpha.at(y, x) = 1.0 - t;
        if (cfg.with_depth) out.depth.at(y, x) = depth_acc;
      }
    }
  });
  return out;
}

namespace {

// Accumulated screen-space adjoints for one (tile, splat) slot.
struct ScreenGrad {
  Real mx = 0, my = 0;          // d/d mean2d
  Real cxx = 0, cxy = 0, cyy = 0;  // d/d cov2d (full symmetric entries)
  Real op = 0;                  // d/d opacity
  Vec3 color{};                 // d/d color
};

struct Contribution {
  int32_t item;  // index into the tile segment
  Real alpha;
  Real gauss;  // exp(-sigma)
  Real t;      // transmittance before this contribution
};

// d(quat -> rotation matrix) contraction: sum_ij gr[i][j] * dR_ij/dq_k.
std::array<Real, 4> quat_grad(const std::array<Real, 4>& q,
                              const Mat3& gr) {
  const Real w = q[0], x = q[1], y = q[2], z = q[3];
  std::array<Real, 4> g{};
  g[0] = 2 * (-z * gr(0, 1) + y * gr(0, 2) + z * gr(1, 0) - x * gr(1, 2) -
              y * gr(2, 0) + x * gr(2, 1));
  g[1] = 2 * (y * gr(0, 1) + z * gr(0, 2) + y * gr(1, 0) - 2 * x * gr(1, 1) -
              w * gr(1, 2) + z * gr(2, 0) + w * gr(2, 1) - 2 * x * gr(2, 2));
  g[2] = 2 * (-2 * y * gr(0, 0) + x * gr(0, 1) + w * gr(0, 2) + x * gr(1, 0) +
              z * gr(1, 2) - w * gr(2, 0) + z * gr(2, 1) - 2 * y * gr(2, 2));
  g[3] = 2 * (-2 * z * gr(0, 0) - w * gr(0, 1) + x * gr(0, 2) + w * gr(1, 0) -
              2 * z * gr(1, 1) + y * gr(1, 2) + x * gr(2, 0) + y * gr(2, 1));
  return g;
}

}  // namespace

GaussianGrads render_backward_prepared(const PreparedView& view,
                                       const Image& grad_rgb,
                                       const Image& grad_alpha) {
  const RenderConfig& cfg = view.cfg;
  if (grad_rgb.width != view.width || grad_rgb.height != view.height ||
      grad_rgb.channels != 3)
    throw std::invalid_argument("grad_rgb shape mismatch");
  if (grad_alpha.width != view.width || grad_alpha.height != view.height ||
      grad_alpha.channels != 1)
    throw std::invalid_argument("grad_alpha shape mismatch");
  if (!grad_rgb.finite() || !grad_alpha.finite())
    throw std::invalid_argument("upstream gradients must be finite");

  const int n_tiles = view.tiles_x * view.tiles_y;
  // One slot per CSR entry; merged per tile in index order after the join.
  std::vector<ScreenGrad> slots(view.tile_items.size());

  parallel_for(n_tiles, [&](std::int64_t tile_id) {
    const int tx = static_cast<int>(tile_id) % view.tiles_x;
    const int ty = static_cast<int>(tile_id) / view.tiles_x;
    const int x0 = tx * cfg.tile, x1 = std::min(view.width, x0 + cfg.tile);
    const int y0 = ty * cfg.tile, y1 = std::min(view.height, y0 + cfg.tile);
    const int32_t begin = view.tile_offsets[tile_id];
    const int32_t end = view.tile_offsets[tile_id + 1];
    if (begin == end) return;

    std::vector<Contribution> stack;
    stack.reserve(64);

    for (int y = y0; y < y1; ++y) {
      const Real py = y + 0.5;
      for (int x = x0; x < x1; ++x) {
        const Real px = x + 0.5;
        const Vec3 g_rgb = grad_rgb.rgb_at(y, x);
        const Real g_a = grad_alpha.at(y, x);

        // Replay the forward compositing, recording contributions.
        stack.clear();
        Real t = 1.0;
        for (int32_t k = begin; k < end; ++k) {
          const PreparedView::Splat& s = view.splats[view.tile_items[k]];
          const Real dx = px - s.mean2d.x, dy = py - s.mean2d.y;
          const Real sigma =
              0.5 * (s.conic_xx * dx * dx + s.conic_yy * dy * dy) +
              s.conic_xy * dx * dy;
          if (sigma < 0 || sigma > s.sigma_cut) continue;
          const Real gauss = std::exp(-sigma);
          Real alpha = s.opacity * gauss;
          if (alpha < cfg.alpha_cutoff) continue;
          alpha = std::min<Real>(alpha, 0.999);
          stack.push_back({k, alpha, gauss, t});
          t *= 1.0 - alpha;
          if (t < cfg.transmittance_floor) break;
        }
        if (stack.empty()) continue;
        const Real t_final = t;

        // Back-to-front suffix accumulation of downstream color.
        Vec3 suffix{};
        for (size_t si = stack.size(); si-- > 0;) {
          const Contribution& cb = stack[si];
          const PreparedView::Splat& s = view.splats[view.tile_items[cb.item]];
          ScreenGrad& slot = slots[cb.item];
          const Real weight = cb.alpha * cb.t;

          slot.color += g_rgb * weight;

          const Real inv_one_minus = 1.0 / (1.0 - cb.alpha);
          const Real w_alpha =
              s.color.dot(g_rgb) * cb.t -
              (suffix.dot(g_rgb) + cfg.background.dot(g_rgb) * t_final) *
                  inv_one_minus +
              g_a * t_final * inv_one_minus;

          if (cb.alpha < 0.999) {  // the 0.999 clamp zeroes d alpha/d *
            slot.op += cb.gauss * w_alpha;
            const Real g_sigma_neg = cb.alpha * w_alpha;  // = -dL/dsigma
            const Real dx = px - s.mean2d.x, dy = py - s.mean2d.y;
            const Real vx = s.conic_xx * dx + s.conic_xy * dy;
            const Real vy = s.conic_xy * dx + s.conic_yy * dy;
            slot.mx += g_sigma_neg * vx;
            slot.my += g_sigma_neg * vy;
            slot.cxx += 0.5 * g_sigma_neg * vx * vx;
            slot.cxy += 0.5 * g_sigma_neg * vx * vy;
            slot.cyy += 0.5 * g_sigma_neg * vy * vy;
          }
          suffix += s.color * weight;
        }
      }
    }
  });

  // Deterministic merge: per-splat screen grads summed in tile order.
  std::vector<ScreenGrad> per_splat(view.splats.size());
  for (size_t k = 0; k < view.tile_items.size(); ++k) {
    ScreenGrad& dst = per_splat[view.tile_items[k]];
    const ScreenGrad& src = slots[k];
    dst.mx += src.mx;
    dst.my += src.my;
    dst.cxx += src.cxx;
    dst.cxy += src.cxy;
    dst.cyy += src.cyy;
    dst.op += src.op;
    dst.color += src.color;
  }

  // Chain screen-space grads through the EWA projection, per splat.
  GaussianGrads grads(view.total_gaussians);
  parallel_for(static_cast<std::int64_t>(view.splats.size()), [&](std::int64_t si) {
    const PreparedView::Splat& s = view.splats[si];
    const ScreenGrad& sg = per_splat[si];
    GaussianGrad& out = grads.per_gaussian[s.index];
    out.color = sg.color;
    out.opacity = sg.op;

    const Mat3& w = view.cam.rotation;
    const Vec3 t = view.cam.world_to_cam(s.mean3d);
    const Real fx = view.cam.intrinsics.fx, fy = view.cam.intrinsics.fy;
    const Real iz = 1.0 / t.z, iz2 = iz * iz, iz3 = iz2 * iz;

    Real j[2][3];
    jacobian({w, t, fx, fy}, j);

    const Real qn = std::sqrt(s.quat[0] * s.quat[0] + s.quat[1] * s.quat[1] +
                              s.quat[2] * s.quat[2] + s.quat[3] * s.quat[3]);
    const std::array<Real, 4> qh = {s.quat[0] / qn, s.quat[1] / qn,
                                    s.quat[2] / qn, s.quat[3] / qn};
    const Mat3 rq = quat_to_rotmat({qh[0], qh[1], qh[2], qh[3]});
    const Mat3 m = rq * Mat3::diag(s.scale3d);
    const Mat3 sigma3 = m * m.transpose();
    const Mat3 p = w * sigma3 * w.transpose();

    // Full symmetric 2x2 upstream gradient on cov2d.
    const Real gf[2][2] = {{sg.cxx, sg.cxy}, {sg.cxy, sg.cyy}};

    // dL/dP = J^T Gf J
    Mat3 gp = Mat3::zero();
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int r = 0; r < 2; ++r)
          for (int c = 0; c < 2; ++c) gp(a, b) += j[r][a] * gf[r][c] * j[c][b];

    // dL/dSigma = W^T dL/dP W
    const Mat3 gsigma = w.transpose() * gp * w;

    // dL/dM = 2 dL/dSigma M; scale and rotation grads follow.
    const Mat3 gm = gsigma * m * 2.0;
    Vec3 gscale{};
    Mat3 grot = Mat3::zero();
    for (int r = 0; r < 3; ++r) {
      gscale.x += rq(r, 0) * gm(r, 0);
      gscale.y += rq(r, 1) * gm(r, 1);
      gscale.z += rq(r, 2) * gm(r, 2);
      grot(r, 0) = gm(r, 0) * s.scale3d.x;
      grot(r, 1) = gm(r, 1) * s.scale3d.y;
      grot(r, 2) = gm(r, 2) * s.scale3d.z;
    }
    out.scale = gscale;

    std::array<Real, 4> gq = quat_grad(qh, grot);
    const Real radial = qh[0] * gq[0] + qh[1] * gq[1] + qh[2] * gq[2] + qh[3] * gq[3];
    for (int i = 0; i < 4; ++i) out.rot[i] = (gq[i] - qh[i] * radial) / qn;

    // Mean: through the projected center and the Jacobian's own dependence.
    Vec3 gt{j[0][0] * sg.mx + j[1][0] * sg.my,
            j[0][1] * sg.mx + j[1][1] * sg.my,
            j[0][2] * sg.mx + j[1][2] * sg.my};

    // Q = P J^T (3x2); dL/dt_k += 2 <Gf, Dk Q> with Dk = dJ/dt_k.
    Real q3[3][2];
    for (int a = 0; a < 3; ++a)
      for (int r = 0; r < 2; ++r)
        q3[a][r] = p(a, 0) * j[r][0] + p(a, 1) * j[r][1] + p(a, 2) * j[r][2];

    // Dx = dJ/dtx has a single nonzero entry (0,2) = -fx/tz^2.
    gt.x += 2 * (gf[0][0] * (-fx * iz2) * q3[2][0] +
                 gf[0][1] * (-fx * iz2) * q3[2][1]);
    // Dy: entry (1,2) = -fy/tz^2.
    gt.y += 2 * (gf[1][0] * (-fy * iz2) * q3[2][0] +
                 gf[1][1] * (-fy * iz2) * q3[2][1]);
    // Dz: entries (0,0) = -fx/tz^2, (0,2) = 2 fx tx/tz^3,
    //             (1,1) = -fy/tz^2, (1,2) = 2 fy ty/tz^3.
    {
      const Real d00 = -fx * iz2, d02 = 2 * fx * t.x * iz3;
      const Real d11 = -fy * iz2, d12 = 2 * fy * t.y * iz3;
      Real dq[2][2];
      dq[0][0] = d00 * q3[0][0] + d02 * q3[2][0];
      dq[0][1] = d00 * q3[0][1] + d02 * q3[2][1];
      dq[1][0] = d11 * q3[1][0] + d12 * q3[2][0];
      dq[1][1] = d11 * q3[1][1] + d12 * q3[2][1];
      gt.z += 2 * (gf[0][0] * dq[0][0] + gf[0][1] * dq[0][1] +
                   gf[1][0] * dq[1][0] + gf[1][1] * dq[1][1]);
    }

    out.mean = w.tmul(gt);
  });
  return grads;
}

RenderedImage render(const GaussianSet& set, const Camera& cam,
                     const RenderConfig& cfg) {
  return render_prepared(prepare_view(set, cam, cfg));
}

GaussianGrads render_backward(const GaussianSet& set, const Camera& cam,
                              const RenderConfig& cfg, const Image& grad_rgb,
                              const Image& grad_alpha) {
  return render_backward_prepared(prepare_view(set, cam, cfg), grad_rgb,
                                  grad_alpha);
}

std::vector<RenderedImage> render_views(const GaussianSet& set,
                                        const CameraRig& rig,
                                        const RenderConfig& cfg) {
  std::vector<RenderedImage> out;
  out.reserve(rig.cameras.size());
  for (const Camera& cam : rig.cameras) out.push_back(render(set, cam, cfg));
  return out;
}

}  // namespace splatfit
