#pragma once

// Brute-force splatting reference: every Gaussian is evaluated at every
// pixel with no tiling and no footprint culling. It mirrors the renderer's
// documented per-pixel contract and is the independent oracle the tiled
// implementation is checked against.

#include "splatfit/renderer.hpp"

namespace splatfit::testing {

RenderedImage reference_render(const GaussianSet& set, const Camera& cam,
                               const RenderConfig& cfg);

}  // namespace splatfit::testing
