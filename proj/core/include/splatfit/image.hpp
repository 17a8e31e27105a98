#pragma once

// Dense row-major, channel-interleaved image of 64-bit reals.

#include <vector>

#include "splatfit/vec.hpp"

namespace splatfit {

struct Image {
  int width = 0, height = 0, channels = 0;
  std::vector<Real> data;

  Image() = default;
  Image(int h, int w, int c, Real fill = 0)
      : width(w), height(h), channels(c),
        data(static_cast<size_t>(h) * w * c, fill) {}

  Real& at(int y, int x, int c = 0) {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }
  Real at(int y, int x, int c = 0) const {
    return data[(static_cast<size_t>(y) * width + x) * channels + c];
  }

  Vec3 rgb_at(int y, int x) const {
    const size_t i = (static_cast<size_t>(y) * width + x) * channels;
    return {data[i], data[i + 1], data[i + 2]};
  }
  void set_rgb(int y, int x, const Vec3& v) {
    const size_t i = (static_cast<size_t>(y) * width + x) * channels;
    data[i] = v.x;
    data[i + 1] = v.y;
    data[i + 2] = v.z;
  }

  size_t size() const { return data.size(); }
  bool same_shape(const Image& o) const {
    return width == o.width && height == o.height && channels == o.channels;
  }
  bool finite() const;
};

/// Throws std::invalid_argument when shapes differ.
void require_same_shape(const Image& a, const Image& b, const char* what);

/// Mean of squared per-element differences.
Real image_mse(const Image& a, const Image& b);

/// Maximum absolute per-element difference.
Real image_max_abs_diff(const Image& a, const Image& b);

/// 2x average pooling (both sides must be even).
Image avg_pool2(const Image& img);

/// Box-filtered resize to an arbitrary target size (area averaging).
Image resize_area(const Image& img, int out_h, int out_w);

/// ITU-R 601 luma of a 3-channel image.
Image to_luma601(const Image& rgb);

/// Extract one channel as a single-channel image.
Image extract_channel(const Image& img, int c);

/// Elementwise clamp to [0, 1].
Image clamp01(const Image& img);

}  // namespace splatfit
