#pragma once

// Pluggable source of the four canonical de-occluded views consumed by the
// reconstruction stage. Three realizations share one contract (images plus
// binary silhouettes, nothing else): an exact analytic oracle, file-backed
// ingestion of externally generated views, and a degraded oracle for
// sensitivity studies.

#include <array>
#include <filesystem>
#include <optional>
#include <string>

#include "splatfit/camera.hpp"
#include "splatfit/image.hpp"
#include "splatfit/scene.hpp"

namespace splatfit {

struct ProviderRequest {
  std::vector<Image> inputs;        // 1-2 images
  std::vector<Camera> input_cams;   // matching cameras
  std::vector<Camera> targets;      // 4 canonical cameras
  const CapsuleScene* scene = nullptr;  // oracle/degraded only
  TraceConfig trace;

  void validate() const;
};

struct ProviderProvenance {
  std::string kind;  // "oracle" | "file" | "degraded"
  Real noise_sigma = 0;
  Real pose_jitter_deg = 0;
  std::string source_dir;
  std::vector<std::string> warnings;

  std::string tag() const;
};

struct ProviderResponse {
  std::array<Image, 4> views;        // HxWx3 in [0,1]
  std::array<Image, 4> silhouettes;  // HxW binary
  ProviderProvenance provenance;
};

/// Reference raymarch renders at the target cameras; de-occluded by
/// construction and independent of the input images.
ProviderResponse oracle_provide(const ProviderRequest& req);

/// Loads view_{0..3}.png and mask_{0..3}.png from `dir`; validates sizes and,
/// when cameras.json is present, cross-checks it against the target cameras
/// (mismatches become provenance warnings).
ProviderResponse file_provide(const std::filesystem::path& dir,
                              const ProviderRequest& req);

/// Oracle rendered from azimuth-jittered cameras plus clipped pixel noise;
/// deterministic under seed.
ProviderResponse degraded_provide(const ProviderRequest& req, Real noise_sigma,
                                  Real pose_jitter_deg, uint64_t seed);

}  // namespace splatfit
