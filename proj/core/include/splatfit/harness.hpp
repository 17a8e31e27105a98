#pragma once

// Experiment orchestration: config-driven fitting runs (single or stereo
// input, clean or occluded, any provider), evaluation over the 16-view rig
// with held-out views, sweeps, and gradient verification. Every run writes
// its artifacts under a content-addressed directory and a manifest that is
// sufficient to reproduce it bit-identically.

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "splatfit/loss.hpp"
#include "splatfit/metrics.hpp"
#include "splatfit/occlusion.hpp"
#include "splatfit/optim.hpp"
#include "splatfit/provider.hpp"
#include "splatfit/rig.hpp"

namespace splatfit {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr const char* kRunRootEnv = "SPLATFIT_RUN_ROOT";

/// Configuration problems exit the CLI with code 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
/// Pipeline-stage failures exit the CLI with code 3.
struct StageError : std::runtime_error {
  StageError(const std::string& stage, const std::string& what)
      : std::runtime_error("stage '" + stage + "' failed: " + what),
        stage_name(stage) {}
  std::string stage_name;
};

struct ExperimentConfig {
  RigSpec rig{16, 2.7, 0.0, 49.1, 128, 128, 0.0};
  uint64_t scene_seed = 0;  // 0 = rest pose
  ShadingMode shading = ShadingMode::kLambert;

  std::optional<OcclusionSpec> occlusion;

  std::string provider = "oracle";  // oracle | file | degraded
  std::filesystem::path provider_dir;
  Real degraded_sigma = 0, degraded_jitter_deg = 0;

  std::vector<Real> input_azimuths_deg{0.0};  // 1 = single, 2 = stereo

  int grid_res = 64;
  DecodeConfig decode;
  RenderConfig render;
  LossWeights weights;
  int proxy_levels = 3;
  OptimConfig optim{0.02, 2000, 0.9, 0.999, 1e-8, 0.0, 100};
  int views_per_step = 0;
  int checkpoint_every = 0;

  bool holdout = true;  // evaluate only on non-supervised rig poses
  Real opacity_threshold = 0.05;
  int surface_samples = 20000;
  uint64_t seed = 0;

  void validate() const;
};

nlohmann::json config_to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& j);

/// FNV-1a hash of the canonical config JSON; names the run directory.
std::string config_hash(const ExperimentConfig& cfg);

struct RunResult {
  std::filesystem::path run_dir;
  nlohmann::json manifest;
  MetricsReport report;
  LossBreakdown final_loss;
};

/// Full pipeline: rig -> scene -> inputs -> occlusion -> provider -> fit ->
/// 16-view render -> held-out metrics. Throws StageError naming the failed
/// stage (the manifest written so far survives in the run directory).
RunResult run_fit(const ExperimentConfig& cfg,
                  const std::filesystem::path& run_root);

/// Re-runs the configuration recorded in a manifest.
RunResult run_from_manifest(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& run_root);

nlohmann::json report_to_json(const MetricsReport& report);

enum class SweepAxis { kOcclusion, kStereo, kDegradation };

struct SweepRow {
  std::string level;
  bool ok = false;
  std::string error;
  MetricsReport report;
  std::string run_dir;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  nlohmann::json to_json() const;
  std::string to_csv() const;
};

/// One run per level with derived seeds; per-run failures are recorded and
/// the sweep continues.
SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::filesystem::path& run_root);

struct GradClassStats {
  std::string name;
  int64_t checked = 0;  // coordinates with |FD| above the signal floor
  int64_t failed = 0;   // relative error above tolerance
  Real worst_rel_err = 0;
};

struct GradcheckReport {
  std::vector<GradClassStats> renderer;  // mean/scale/rot/opacity/color
  GradClassStats chain;                  // composed decode-render-loss
  Real tolerance = 1e-3;
  bool passed = false;

  nlohmann::json to_json() const;
};

struct GradcheckOptions {
  uint64_t seed = 0;
  int scenes = 3;
  int gaussians = 24;   // <= 64
  int image_size = 16;  // <= 16 keeps 64-bit FD cheap
  int chain_coords = 32;
  Real tolerance = 1e-3;
  Real fd_step = 1e-4;
  Real signal_floor = 1e-6;
};

/// Central finite differences against the analytic backward; failures are
/// report content, not exceptions.
GradcheckReport gradcheck(const GradcheckOptions& opts);

/// Deterministic random Gaussian scene in front of an orbit camera; shared
/// by gradcheck and the renderer test suites.
GaussianSet random_gaussian_set(uint64_t seed, int count, Real spread = 0.5);

/// Camera for the small random-scene harnesses.
Camera gradcheck_camera(int image_size);

}  // namespace splatfit
