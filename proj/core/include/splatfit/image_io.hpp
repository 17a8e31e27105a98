#pragma once

// PNG input/output (8-bit RGB, 8-bit gray, 1-bit masks) and lossless float
// dumps as a flat binary sidecar with a JSON header.

#include <filesystem>
#include <string>

#include "splatfit/image.hpp"

namespace splatfit {

/// Writes a 1- or 3-channel image in [0,1] as an 8-bit PNG.
void write_png(const std::filesystem::path& path, const Image& img);

/// Writes a single-channel binary image as a 1-bit grayscale PNG.
void write_mask_png(const std::filesystem::path& path, const Image& mask);

/// Reads a PNG into [0,1] reals (gray -> 1 channel, RGB/RGBA -> 3, alpha dropped).
Image read_png(const std::filesystem::path& path);

/// Writes `prefix`.bin (32-bit floats, row-major) and `prefix`.json
/// ({height, width, channels, dtype:"float32"}).
void write_hdr(const std::filesystem::path& prefix, const Image& img);

/// Reads a write_hdr pair back into an Image.
Image read_hdr(const std::filesystem::path& prefix);

}  // namespace splatfit
