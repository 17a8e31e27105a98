#include "splatfit/gaussian.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include "splatfit/serialize.hpp"

namespace splatfit {

Image ray_feature_map(const Image& image, const Camera& cam) {
  if (image.channels != 3)
    throw std::invalid_argument("ray_feature_map expects a 3-channel image");
  if (image.width != cam.intrinsics.width ||
      image.height != cam.intrinsics.height)
    throw std::invalid_argument("ray_feature_map: image/camera size mismatch");
  Image out(image.height, image.width, 9);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const Ray ray = pixel_ray(cam, x, y);
      const Vec3 m = ray.origin.cross(ray.direction);
      out.at(y, x, 0) = image.at(y, x, 0);
      out.at(y, x, 1) = image.at(y, x, 1);
      out.at(y, x, 2) = image.at(y, x, 2);
      out.at(y, x, 3) = ray.direction.x;
      out.at(y, x, 4) = ray.direction.y;
      out.at(y, x, 5) = ray.direction.z;
      out.at(y, x, 6) = m.x;
      out.at(y, x, 7) = m.y;
      out.at(y, x, 8) = m.z;
    }
  return out;
}

PixelGaussianGrid::PixelGaussianGrid(std::vector<Camera> cams, int gh, int gw)
    : views(static_cast<int>(cams.size())), grid_h(gh), grid_w(gw),
      cameras(std::move(cams)) {
  raw.assign(cell_count() * kRawChannels, 0.0);
  validate();
}

void PixelGaussianGrid::validate() const {
  if (views != 5 && views != 6)
    throw std::invalid_argument(
        "pixel grid must hold 5 or 6 views (single or stereo input plus 4 "
        "provided views)");
  if (grid_h < 1 || grid_w < 1)
    throw std::invalid_argument("pixel grid resolution must be positive");
  if (raw.size() != cell_count() * kRawChannels)
    throw std::invalid_argument("pixel grid raw buffer size mismatch");
  if (cameras.size() != static_cast<size_t>(views))
    throw std::invalid_argument("pixel grid needs one camera per view");
}

Ray grid_cell_ray(const Camera& cam, int grid_h, int grid_w, int x, int y) {
  const CameraIntrinsics& k = cam.intrinsics;
  const Real fx = k.fx * grid_w / k.width;
  const Real fy = k.fy * grid_h / k.height;
  const Vec3 dir_cam{(x + 0.5 - grid_w / 2.0) / fx,
                     (y + 0.5 - grid_h / 2.0) / fy, 1.0};
  return {cam.position, cam.rotation.tmul(dir_cam).normalized()};
}

GaussianSet decode_pixel_gaussians(const PixelGaussianGrid& grid,
                                   const DecodeConfig& cfg) {
  grid.validate();
  for (Real v : grid.raw)
    if (!std::isfinite(v))
      throw std::invalid_argument("pixel grid contains non-finite raw values");

  GaussianSet set;
  set.gaussians.reserve(grid.cell_count());
  namespace ch = raw_channel;
  for (int v = 0; v < grid.views; ++v) {
    const Camera& cam = grid.cameras[v];
    for (int y = 0; y < grid.grid_h; ++y)
      for (int x = 0; x < grid.grid_w; ++x) {
        const Real* p = &grid.raw[grid.raw_index(v, y, x, 0)];
        const Ray ray = grid_cell_ray(cam, grid.grid_h, grid.grid_w, x, y);

        Gaussian3D g;
        const Real t = cfg.near + (cfg.far - cfg.near) * sigmoid(p[ch::kDepth]);
        const Vec3 offset{std::tanh(p[ch::kOffsetX]),
                          std::tanh(p[ch::kOffsetX + 1]),
                          std::tanh(p[ch::kOffsetX + 2])};
        g.mean = ray.at(t) + offset * cfg.offset_scale;
        g.scale = {cfg.scale_min +
                       (cfg.scale_max - cfg.scale_min) * sigmoid(p[ch::kScaleX]),
                   cfg.scale_min +
                       (cfg.scale_max - cfg.scale_min) * sigmoid(p[ch::kScaleX + 1]),
                   cfg.scale_min +
                       (cfg.scale_max - cfg.scale_min) * sigmoid(p[ch::kScaleX + 2])};
        // Bias toward identity; zero-norm raw+bias falls back to identity so
        // the decode stays total.
        const Real qw = p[ch::kQuatW] + 1.0, qx = p[ch::kQuatW + 1],
                   qy = p[ch::kQuatW + 2], qz = p[ch::kQuatW + 3];
        const Real qn = std::sqrt(qw * qw + qx * qx + qy * qy + qz * qz);
        g.rotation = qn > 0 ? UnitQuat{qw / qn, qx / qn, qy / qn, qz / qn}
                            : UnitQuat::identity();
        g.opacity = sigmoid(p[ch::kOpacity]);
        g.color = {sigmoid(p[ch::kColorR]), sigmoid(p[ch::kColorR + 1]),
                   sigmoid(p[ch::kColorR + 2])};
        set.gaussians.push_back(g);
      }
  }
  return set;
}

void grid_save(const PixelGaussianGrid& grid, const std::filesystem::path& prefix) {
  grid.validate();
  nlohmann::json j{{"views", grid.views},
                   {"grid_h", grid.grid_h},
                   {"grid_w", grid.grid_w},
                   {"channels", kRawChannels},
                   {"dtype", "float64"}};
  j["cameras"] = nlohmann::json::array();
  for (const Camera& c : grid.cameras) j["cameras"].push_back(camera_to_json(c));
  std::ofstream hf(prefix.string() + ".json");
  if (!hf) throw std::runtime_error("cannot write " + prefix.string() + ".json");
  hf << j.dump(2) << "\n";

  std::ofstream bf(prefix.string() + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot write " + prefix.string() + ".bin");
  bf.write(reinterpret_cast<const char*>(grid.raw.data()),
           static_cast<std::streamsize>(grid.raw.size() * sizeof(Real)));
}

PixelGaussianGrid grid_load(const std::filesystem::path& prefix) {
  std::ifstream hf(prefix.string() + ".json");
  if (!hf) throw std::runtime_error("cannot read " + prefix.string() + ".json");
  nlohmann::json j;
  hf >> j;
  if (j.value("dtype", "") != "float64" ||
      j.value("channels", 0) != kRawChannels)
    throw std::runtime_error("unsupported grid checkpoint header in " +
                             prefix.string() + ".json");
  PixelGaussianGrid grid;
  grid.views = j.at("views").get<int>();
  grid.grid_h = j.at("grid_h").get<int>();
  grid.grid_w = j.at("grid_w").get<int>();
  for (const auto& cj : j.at("cameras")) grid.cameras.push_back(camera_from_json(cj));
  grid.raw.resize(grid.cell_count() * kRawChannels);

  std::ifstream bf(prefix.string() + ".bin", std::ios::binary);
  if (!bf) throw std::runtime_error("cannot read " + prefix.string() + ".bin");
  bf.read(reinterpret_cast<char*>(grid.raw.data()),
          static_cast<std::streamsize>(grid.raw.size() * sizeof(Real)));
  if (static_cast<size_t>(bf.gcount()) != grid.raw.size() * sizeof(Real))
    throw std::runtime_error("truncated grid checkpoint " + prefix.string() + ".bin");
  grid.validate();
  return grid;
}

}  // namespace splatfit
