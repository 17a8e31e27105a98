#include "splatfit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <stdexcept>

#include <json.hpp>

namespace splatfit {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void fail(const std::filesystem::path& path, const char* what) {
  throw std::runtime_error(std::string(what) + ": " + path.string());
}

uint8_t to_byte(Real v) {
  return static_cast<uint8_t>(
      std::lround(std::clamp<Real>(v, 0.0, 1.0) * 255.0));
}

}  // namespace

void write_png(const std::filesystem::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png supports 1 or 3 channels");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(path, "cannot open PNG for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, img.width, img.height, 8,
               img.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  std::vector<uint8_t> row(static_cast<size_t>(img.width) * img.channels);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        row[static_cast<size_t>(x) * img.channels + c] = to_byte(img.at(y, x, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

void write_mask_png(const std::filesystem::path& path, const Image& mask) {
  if (mask.channels != 1)
    throw std::invalid_argument("write_mask_png expects a single channel");
  FilePtr fp(std::fopen(path.string().c_str(), "wb"));
  if (!fp) fail(path, "cannot open PNG for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, mask.width, mask.height, 1, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const int stride = (mask.width + 7) / 8;
  std::vector<uint8_t> row(stride);
  for (int y = 0; y < mask.height; ++y) {
    std::fill(row.begin(), row.end(), 0);
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(y, x) >= 0.5) row[x / 8] |= static_cast<uint8_t>(0x80 >> (x % 8));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

Image read_png(const std::filesystem::path& path) {
  FilePtr fp(std::fopen(path.string().c_str(), "rb"));
  if (!fp) fail(path, "cannot open PNG for reading");

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    fail(path, "libpng read error");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);

  png_set_expand(png);  // palettes, 1/2/4-bit gray, tRNS -> 8-bit
  if (png_get_bit_depth(png, info) == 16) png_set_strip_16(png);
  png_read_update_info(png, info);

  const int w = static_cast<int>(png_get_image_width(png, info));
  const int h = static_cast<int>(png_get_image_height(png, info));
  const int in_ch = static_cast<int>(png_get_channels(png, info));
  const int out_ch = in_ch >= 3 ? 3 : 1;

  std::vector<uint8_t> row(static_cast<size_t>(w) * in_ch);
  Image img(h, w, out_ch);
  for (int y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < out_ch; ++c)
        img.at(y, x, c) = row[static_cast<size_t>(x) * in_ch + c] / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

void write_hdr(const std::filesystem::path& prefix, const Image& img) {
  const auto bin = std::filesystem::path(prefix.string() + ".bin");
  const auto hdr = std::filesystem::path(prefix.string() + ".json");
  std::ofstream bf(bin, std::ios::binary);
  if (!bf) fail(bin, "cannot open for writing");
  std::vector<float> vals(img.data.begin(), img.data.end());
  bf.write(reinterpret_cast<const char*>(vals.data()),
           static_cast<std::streamsize>(vals.size() * sizeof(float)));

  nlohmann::json j{{"height", img.height},
                   {"width", img.width},
                   {"channels", img.channels},
                   {"dtype", "float32"}};
  std::ofstream hf(hdr);
  if (!hf) fail(hdr, "cannot open for writing");
  hf << j.dump(2) << "\n";
}

Image read_hdr(const std::filesystem::path& prefix) {
  const auto bin = std::filesystem::path(prefix.string() + ".bin");
  const auto hdr = std::filesystem::path(prefix.string() + ".json");
  std::ifstream hf(hdr);
  if (!hf) fail(hdr, "cannot open for reading");
  nlohmann::json j;
  hf >> j;
  if (j.value("dtype", "") != "float32")
    throw std::runtime_error("unsupported dtype in " + hdr.string());
  Image img(j.at("height").get<int>(), j.at("width").get<int>(),
            j.at("channels").get<int>());

  std::ifstream bf(bin, std::ios::binary);
  if (!bf) fail(bin, "cannot open for reading");
  std::vector<float> vals(img.data.size());
  bf.read(reinterpret_cast<char*>(vals.data()),
          static_cast<std::streamsize>(vals.size() * sizeof(float)));
  if (static_cast<size_t>(bf.gcount()) != vals.size() * sizeof(float))
    fail(bin, "truncated float binary");
  std::copy(vals.begin(), vals.end(), img.data.begin());
  return img;
}

}  // namespace splatfit
