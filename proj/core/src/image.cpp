#include "splatfit/image.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace splatfit {

bool Image::finite() const {
  for (Real v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

void require_same_shape(const Image& a, const Image& b, const char* what) {
  if (!a.same_shape(b)) {
    std::ostringstream msg;
    msg << what << ": shape mismatch (" << a.height << "x" << a.width << "x"
        << a.channels << " vs " << b.height << "x" << b.width << "x"
        << b.channels << ")";
    throw std::invalid_argument(msg.str());
  }
}

Real image_mse(const Image& a, const Image& b) {
  require_same_shape(a, b, "image_mse");
  Real sum = 0;
  for (size_t i = 0; i < a.data.size(); ++i) {
    const Real d = a.data[i] - b.data[i];
    sum += d * d;
  }
  return sum / static_cast<Real>(a.data.size());
}

Real image_max_abs_diff(const Image& a, const Image& b) {
  require_same_shape(a, b, "image_max_abs_diff");
  Real worst = 0;
  for (size_t i = 0; i < a.data.size(); ++i)
    worst = std::max(worst, std::abs(a.data[i] - b.data[i]));
  return worst;
}

Image avg_pool2(const Image& img) {
  if (img.width % 2 != 0 || img.height % 2 != 0)
    throw std::invalid_argument("avg_pool2 requires even dimensions");
  Image out(img.height / 2, img.width / 2, img.channels);
  for (int y = 0; y < out.height; ++y)
    for (int x = 0; x < out.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = 0.25 * (img.at(2 * y, 2 * x, c) +
                                  img.at(2 * y, 2 * x + 1, c) +
                                  img.at(2 * y + 1, 2 * x, c) +
                                  img.at(2 * y + 1, 2 * x + 1, c));
  return out;
}

Image resize_area(const Image& img, int out_h, int out_w) {
  if (out_h < 1 || out_w < 1)
    throw std::invalid_argument("resize_area: target must be positive");
  Image out(out_h, out_w, img.channels);
  const Real sy = static_cast<Real>(img.height) / out_h;
  const Real sx = static_cast<Real>(img.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const Real y0 = y * sy, y1 = (y + 1) * sy;
    for (int x = 0; x < out_w; ++x) {
      const Real x0 = x * sx, x1 = (x + 1) * sx;
      for (int c = 0; c < img.channels; ++c) {
        Real acc = 0, area = 0;
        for (int iy = static_cast<int>(std::floor(y0));
             iy < static_cast<int>(std::ceil(y1)); ++iy) {
          const Real hy = std::min<Real>(y1, iy + 1) - std::max<Real>(y0, iy);
          for (int ix = static_cast<int>(std::floor(x0));
               ix < static_cast<int>(std::ceil(x1)); ++ix) {
            const Real hx =
                std::min<Real>(x1, ix + 1) - std::max<Real>(x0, ix);
            const Real w = hy * hx;
            acc += w * img.at(std::min(iy, img.height - 1),
                              std::min(ix, img.width - 1), c);
            area += w;
          }
        }
        out.at(y, x, c) = acc / area;
      }
    }
  }
  return out;
}

Image to_luma601(const Image& rgb) {
  if (rgb.channels != 3)
    throw std::invalid_argument("to_luma601 expects a 3-channel image");
  Image out(rgb.height, rgb.width, 1);
  for (int y = 0; y < rgb.height; ++y)
    for (int x = 0; x < rgb.width; ++x)
      out.at(y, x) = 0.299 * rgb.at(y, x, 0) + 0.587 * rgb.at(y, x, 1) +
                     0.114 * rgb.at(y, x, 2);
  return out;
}

Image extract_channel(const Image& img, int c) {
  if (c < 0 || c >= img.channels)
    throw std::invalid_argument("extract_channel: channel out of range");
  Image out(img.height, img.width, 1);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) out.at(y, x) = img.at(y, x, c);
  return out;
}

Image clamp01(const Image& img) {
  Image out = img;
  for (Real& v : out.data) v = std::clamp<Real>(v, 0.0, 1.0);
  return out;
}

}  // namespace splatfit
