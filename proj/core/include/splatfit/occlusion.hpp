#pragma once

// Deterministic synthetic occluders covering a controlled fraction of the
// subject silhouette (coverage is measured against silhouette pixels, not
// the frame, so severities stay comparable across rig distances).

#include <cstdint>
#include <vector>

#include "splatfit/image.hpp"

namespace splatfit {

enum class OccluderShape { kRectangles, kEllipses };

struct OcclusionSpec {
  Real fraction = 0.5;  // [0, 1) of silhouette pixels to cover
  OccluderShape shape = OccluderShape::kRectangles;
  int max_pieces = 3;
  Vec3 fill{0.5, 0.5, 0.5};
  uint64_t seed = 0;

  void validate() const;
};

/// Union of <= max_pieces primitives centered inside the silhouette bounding
/// box, bisected on size until silhouette coverage is within +-0.02 of the
/// requested fraction. Deterministic under seed. Throws (reporting the
/// achieved fraction) when the target is unreachable.
Image generate_mask(const Image& silhouette, const OcclusionSpec& spec);

/// Replaces masked pixels with the fill color.
Image apply_occlusion(const Image& image, const Image& mask, const Vec3& fill);

/// Fraction of silhouette pixels covered by the mask.
Real silhouette_coverage(const Image& mask, const Image& silhouette);

/// One mask per fraction with independent seeds derived from the base seed.
std::vector<std::pair<Real, Image>> occlusion_suite(
    const Image& silhouette, const OcclusionSpec& base,
    const std::vector<Real>& fractions = {0.25, 0.5, 0.75});

}  // namespace splatfit
