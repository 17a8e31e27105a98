#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>

#include "splatfit/image.hpp"
#include "splatfit/image_io.hpp"

using namespace splatfit;

namespace {

std::filesystem::path temp_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "splatfit_image_test";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("avg_pool2 averages quads") {
  Image img(2, 2, 1);
  img.at(0, 0) = 1;
  img.at(0, 1) = 2;
  img.at(1, 0) = 3;
  img.at(1, 1) = 4;
  const Image out = avg_pool2(img);
  CHECK(out.width == 1);
  CHECK(out.at(0, 0) == doctest::Approx(2.5));
}

TEST_CASE("resize_area preserves constants and means") {
  Image img(6, 9, 2, 0.37);
  const Image out = resize_area(img, 4, 3);
  for (Real v : out.data) CHECK(v == doctest::Approx(0.37).epsilon(1e-12));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Image noisy(8, 8, 1);
  for (Real& v : noisy.data) v = u(rng);
  const Image down = resize_area(noisy, 4, 4);
  Real mean_in = 0, mean_out = 0;
  for (Real v : noisy.data) mean_in += v;
  for (Real v : down.data) mean_out += v;
  CHECK(mean_in / noisy.size() == doctest::Approx(mean_out / down.size()).epsilon(1e-12));
}

TEST_CASE("png round-trip at 8-bit precision") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Image img(13, 17, 3);
  for (Real& v : img.data) v = u(rng);

  write_png(dir / "rt.png", img);
  const Image back = read_png(dir / "rt.png");
  REQUIRE(back.same_shape(img));
  // 8-bit quantization bound: half a step
  CHECK(image_max_abs_diff(img, back) <= 0.5 / 255.0 + 1e-12);
}

TEST_CASE("1-bit mask png round-trip is exact") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<Real> u(0.0, 1.0);
  Image mask(21, 34, 1);
  for (Real& v : mask.data) v = u(rng) < 0.4 ? 1.0 : 0.0;
  write_mask_png(dir / "mask.png", mask);
  const Image back = read_png(dir / "mask.png");
  REQUIRE(back.same_shape(mask));
  CHECK(image_max_abs_diff(mask, back) == 0.0);
}

TEST_CASE("hdr float sidecar round-trip at float32 precision") {
  const auto dir = temp_dir();
  std::mt19937_64 rng(11);
  std::normal_distribution<Real> g(0.0, 2.0);
  Image img(7, 5, 3);
  for (Real& v : img.data) v = g(rng);
  write_hdr(dir / "dump", img);
  const Image back = read_hdr(dir / "dump");
  REQUIRE(back.same_shape(img));
  for (size_t i = 0; i < img.data.size(); ++i)
    CHECK(back.data[i] == doctest::Approx(img.data[i]).epsilon(1e-7));
}

TEST_CASE("shape mismatch raises") {
  Image a(4, 4, 1), b(4, 5, 1);
  CHECK_THROWS_AS(image_mse(a, b), std::invalid_argument);
}
