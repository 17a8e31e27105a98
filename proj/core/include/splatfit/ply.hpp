#pragma once

#include <filesystem>

#include "splatfit/gaussian.hpp"

namespace splatfit {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Point-cloud PLY with double properties x,y,z, scale_0..2, rot_0..3,
/// opacity, r,g,b. Round-trips all 14 fields bit-for-bit.
void ply_write(const GaussianSet& set, const std::filesystem::path& path,
               PlyFormat format = PlyFormat::kBinaryLittleEndian);

/// Accepts float or double properties in either supported format; throws a
/// parse error naming the offending line on malformed input.
GaussianSet ply_read(const std::filesystem::path& path);

}  // namespace splatfit
