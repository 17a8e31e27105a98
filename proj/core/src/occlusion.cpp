#include "splatfit/occlusion.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace splatfit {

void OcclusionSpec::validate() const {
  if (!(fraction >= 0 && fraction < 1))
    throw std::invalid_argument("occlusion fraction must lie in [0, 1)");
  if (max_pieces < 1)
    throw std::invalid_argument("occlusion needs max_pieces >= 1");
}

namespace {

struct Piece {
  Real cx, cy;      // center, pixels
  Real half_w, half_h;  // base extents at scale 1
};

void rasterize(const std::vector<Piece>& pieces, Real scale,
               OccluderShape shape, Image& mask) {
  std::fill(mask.data.begin(), mask.data.end(), 0.0);
  for (const Piece& p : pieces) {
    const Real hw = p.half_w * scale, hh = p.half_h * scale;
    const int x0 = std::max(0, static_cast<int>(std::floor(p.cx - hw)));
    const int x1 = std::min(mask.width - 1, static_cast<int>(std::ceil(p.cx + hw)));
    const int y0 = std::max(0, static_cast<int>(std::floor(p.cy - hh)));
    const int y1 = std::min(mask.height - 1, static_cast<int>(std::ceil(p.cy + hh)));
    for (int y = y0; y <= y1; ++y)
      for (int x = x0; x <= x1; ++x) {
        const Real dx = (x + 0.5 - p.cx) / hw;
        const Real dy = (y + 0.5 - p.cy) / hh;
        const bool inside = shape == OccluderShape::kRectangles
                                ? (std::abs(dx) <= 1 && std::abs(dy) <= 1)
                                : (dx * dx + dy * dy <= 1);
        if (inside) mask.at(y, x) = 1.0;
      }
  }
}

}  // namespace

Real silhouette_coverage(const Image& mask, const Image& silhouette) {
  require_same_shape(mask, silhouette, "silhouette_coverage");
  int64_t covered = 0, total = 0;
  for (size_t i = 0; i < mask.data.size(); ++i) {
    if (silhouette.data[i] >= 0.5) {
      ++total;
      if (mask.data[i] >= 0.5) ++covered;
    }
  }
  if (total == 0) throw std::invalid_argument("empty silhouette");
  return static_cast<Real>(covered) / static_cast<Real>(total);
}

Image generate_mask(const Image& silhouette, const OcclusionSpec& spec) {
  spec.validate();
  if (silhouette.channels != 1)
    throw std::invalid_argument("silhouette must be single channel");
  Image mask(silhouette.height, silhouette.width, 1);
  if (spec.fraction == 0) return mask;

  // Silhouette bounding box; pieces are centered inside it.
  int bx0 = silhouette.width, bx1 = -1, by0 = silhouette.height, by1 = -1;
  for (int y = 0; y < silhouette.height; ++y)
    for (int x = 0; x < silhouette.width; ++x)
      if (silhouette.at(y, x) >= 0.5) {
        bx0 = std::min(bx0, x);
        bx1 = std::max(bx1, x);
        by0 = std::min(by0, y);
        by1 = std::max(by1, y);
      }
  if (bx1 < bx0)
    throw std::invalid_argument("cannot occlude an empty silhouette");

  const Real bw = bx1 - bx0 + 1, bh = by1 - by0 + 1;
  const Real tol = 0.02;
  Real best_achieved = -1;

  // Bisection on a shared size multiplier; coverage is monotone in it but
  // steps at pixel granularity, so a placement whose step at the target
  // straddles the tolerance window is retried with a derived seed.
  for (int attempt = 0; attempt < 8; ++attempt) {
    std::mt19937_64 rng(spec.seed + 7919ull * attempt);
    std::uniform_real_distribution<Real> uni(0.0, 1.0);
    std::vector<Piece> pieces;
    for (int k = 0; k < spec.max_pieces; ++k) {
      Piece p;
      p.cx = bx0 + uni(rng) * bw;
      p.cy = by0 + uni(rng) * bh;
      const Real aspect = 0.5 + uni(rng);  // [0.5, 1.5)
      p.half_w = 0.25 * bw * aspect;
      p.half_h = 0.25 * bh / aspect;
      pieces.push_back(p);
    }

    Real lo = 0.0, hi = 1.0;
    rasterize(pieces, hi, spec.shape, mask);
    while (silhouette_coverage(mask, silhouette) < spec.fraction && hi < 64.0) {
      hi *= 2.0;
      rasterize(pieces, hi, spec.shape, mask);
    }
    Real achieved = silhouette_coverage(mask, silhouette);
    for (int it = 0; it < 60 && std::abs(achieved - spec.fraction) > tol; ++it) {
      const Real mid = 0.5 * (lo + hi);
      rasterize(pieces, mid, spec.shape, mask);
      achieved = silhouette_coverage(mask, silhouette);
      if (achieved < spec.fraction)
        lo = mid;
      else
        hi = mid;
    }
    if (std::abs(achieved - spec.fraction) <= tol) return mask;
    best_achieved = achieved;
  }
  std::ostringstream msg;
  msg << "occlusion coverage unreachable: requested " << spec.fraction
      << ", achieved " << best_achieved;
  throw std::runtime_error(msg.str());
}

Image apply_occlusion(const Image& image, const Image& mask, const Vec3& fill) {
  if (image.width != mask.width || image.height != mask.height ||
      mask.channels != 1)
    throw std::invalid_argument("apply_occlusion: image/mask shape mismatch");
  Image out = image;
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      if (mask.at(y, x) < 0.5) continue;
      for (int c = 0; c < image.channels; ++c)
        out.at(y, x, c) = c == 0 ? fill.x : (c == 1 ? fill.y : fill.z);
    }
  return out;
}

std::vector<std::pair<Real, Image>> occlusion_suite(
    const Image& silhouette, const OcclusionSpec& base,
    const std::vector<Real>& fractions) {
  std::vector<std::pair<Real, Image>> out;
  for (size_t i = 0; i < fractions.size(); ++i) {
    OcclusionSpec spec = base;
    spec.fraction = fractions[i];
    spec.seed = base.seed + 1 + i;
    out.emplace_back(fractions[i], generate_mask(silhouette, spec));
  }
  return out;
}

}  // namespace splatfit
