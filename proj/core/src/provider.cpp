#include "splatfit/provider.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>

#include "splatfit/image_io.hpp"
#include "splatfit/serialize.hpp"

namespace splatfit {

void ProviderRequest::validate() const {
  if (inputs.empty() || inputs.size() > 2)
    throw std::invalid_argument("provider expects 1 or 2 input images");
  if (inputs.size() != input_cams.size())
    throw std::invalid_argument("provider input image/camera count mismatch");
  if (targets.size() != 4)
    throw std::invalid_argument("provider expects exactly 4 target cameras");
  // Canonical layout: first target pose equals the first input pose.
  const Camera& a = input_cams[0];
  const Camera& b = targets[0];
  if ((a.position - b.position).norm() > 1e-9)
    throw std::invalid_argument(
        "first target camera must coincide with the input camera");
}

std::string ProviderProvenance::tag() const {
  if (kind == "degraded") {
    std::ostringstream ss;
    ss << "degraded(sigma=" << noise_sigma << ", jitter=" << pose_jitter_deg
       << ")";
    return ss.str();
  }
  if (kind == "file") return "file:" + source_dir;
  return kind;
}

ProviderResponse oracle_provide(const ProviderRequest& req) {
  req.validate();
  if (!req.scene)
    throw std::invalid_argument("oracle provider requires a scene handle");
  ProviderResponse out;
  out.provenance.kind = "oracle";
  for (int k = 0; k < 4; ++k) {
    ReferenceRender r = raymarch_render(*req.scene, req.targets[k], req.trace);
    out.views[k] = std::move(r.rgb);
    out.silhouettes[k] = std::move(r.alpha);
  }
  return out;
}

ProviderResponse file_provide(const std::filesystem::path& dir,
                              const ProviderRequest& req) {
  req.validate();
  ProviderResponse out;
  out.provenance.kind = "file";
  out.provenance.source_dir = dir.string();

  for (int k = 0; k < 4; ++k) {
    const auto view_path = dir / ("view_" + std::to_string(k) + ".png");
    const auto mask_path = dir / ("mask_" + std::to_string(k) + ".png");
    if (!std::filesystem::exists(view_path))
      throw std::runtime_error("missing provider file " + view_path.string());
    if (!std::filesystem::exists(mask_path))
      throw std::runtime_error("missing provider file " + mask_path.string());
    Image view = read_png(view_path);
    Image mask = read_png(mask_path);
    const CameraIntrinsics& k_int = req.targets[k].intrinsics;
    if (view.width != k_int.width || view.height != k_int.height) {
      std::ostringstream msg;
      msg << view_path.string() << ": expected " << k_int.width << "x"
          << k_int.height << ", got " << view.width << "x" << view.height;
      throw std::runtime_error(msg.str());
    }
    if (mask.width != k_int.width || mask.height != k_int.height)
      throw std::runtime_error("mask size mismatch: " + mask_path.string());
    if (view.channels != 3)
      throw std::runtime_error("expected RGB view: " + view_path.string());
    for (Real& v : mask.data) v = v >= 0.5 ? 1.0 : 0.0;
    out.views[k] = std::move(view);
    out.silhouettes[k] = std::move(mask);
  }

  const auto cams_path = dir / "cameras.json";
  if (std::filesystem::exists(cams_path)) {
    std::ifstream f(cams_path);
    nlohmann::json j;
    f >> j;
    const auto& arr = j.is_array() ? j : j.at("cameras");
    for (size_t k = 0; k < std::min<size_t>(4, arr.size()); ++k) {
      const Camera cam = camera_from_json(arr[k]);
      const Camera& want = req.targets[k];
      if ((cam.position - want.position).norm() > 1e-6 ||
          orthonormality_residual(cam.rotation * want.rotation.transpose()) >
              1e-6) {
        std::ostringstream msg;
        msg << "cameras.json entry " << k << " disagrees with target pose";
        out.provenance.warnings.push_back(msg.str());
      }
    }
  }
  return out;
}

ProviderResponse degraded_provide(const ProviderRequest& req, Real noise_sigma,
                                  Real pose_jitter_deg, uint64_t seed) {
  req.validate();
  if (noise_sigma < 0 || pose_jitter_deg < 0)
    throw std::invalid_argument("degradation parameters must be nonnegative");
  if (!req.scene)
    throw std::invalid_argument("degraded provider requires a scene handle");

  std::mt19937_64 rng(seed);
  std::normal_distribution<Real> gauss(0.0, 1.0);

  ProviderResponse out;
  out.provenance.kind = "degraded";
  out.provenance.noise_sigma = noise_sigma;
  out.provenance.pose_jitter_deg = pose_jitter_deg;

  for (int k = 0; k < 4; ++k) {
    Camera cam = req.targets[k];
    if (pose_jitter_deg > 0) {
      // Rotate the camera around the vertical axis; the response is still
      // reported against the unperturbed target pose.
      const Real jitter = deg_to_rad(gauss(rng) * pose_jitter_deg);
      const Real c = std::cos(jitter), s = std::sin(jitter);
      Mat3 yaw;
      yaw.m = {{{c, 0, s}, {0, 1, 0}, {-s, 0, c}}};
      cam.position = yaw * cam.position;
      cam.rotation = cam.rotation * yaw.transpose();
    }
    ReferenceRender r = raymarch_render(*req.scene, cam, req.trace);
    if (noise_sigma > 0)
      for (Real& v : r.rgb.data)
        v = std::clamp<Real>(v + noise_sigma * gauss(rng), 0.0, 1.0);
    out.views[k] = std::move(r.rgb);
    out.silhouettes[k] = std::move(r.alpha);
  }
  return out;
}

}  // namespace splatfit
