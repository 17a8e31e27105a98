#include "splatfit/harness.hpp"

#include <chrono>
#include <fstream>
#include <random>
#include <sstream>

#include "splatfit/image_io.hpp"
#include "splatfit/ply.hpp"
#include "splatfit/pose.hpp"
#include "splatfit/serialize.hpp"

namespace splatfit {

namespace {

Real azimuth_mod(Real deg) {
  Real a = std::fmod(deg, 360.0);
  if (a < 0) a += 360.0;
  return a;
}

std::string shading_name(ShadingMode m) {
  return m == ShadingMode::kLambert ? "lambert" : "flat";
}

ShadingMode shading_from_name(const std::string& s) {
  if (s == "lambert") return ShadingMode::kLambert;
  if (s == "flat") return ShadingMode::kFlat;
  throw ConfigError("unknown shading mode '" + s + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    rig.validate();
    decode.scale_min > 0 ? void() : throw std::invalid_argument("scale_min");
    render.validate();
    weights.validate();
    optim.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  if (input_azimuths_deg.empty() || input_azimuths_deg.size() > 2)
    throw ConfigError("expected 1 (single) or 2 (stereo) input azimuths");
  if (input_azimuths_deg.size() == 2) {
    const Real sep = azimuth_mod(input_azimuths_deg[1] - input_azimuths_deg[0]);
    if (std::abs(sep - 45) > 1e-9 && std::abs(sep - 90) > 1e-9 &&
        std::abs(sep - 135) > 1e-9)
      throw ConfigError("stereo separation must be one of {45, 90, 135} degrees");
  }
  if (grid_res < 1) throw ConfigError("grid_res must be positive");
  if (proxy_levels < 1) throw ConfigError("proxy_levels must be >= 1");
  if (provider != "oracle" && provider != "file" && provider != "degraded")
    throw ConfigError("provider must be oracle, file, or degraded");
  if (provider == "file" && provider_dir.empty())
    throw ConfigError("file provider requires provider_dir");
  if (occlusion) {
    try {
      occlusion->validate();
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }
  if (!(opacity_threshold > 0 && opacity_threshold < 1))
    throw ConfigError("opacity_threshold must lie in (0, 1)");
  if (surface_samples < 1) throw ConfigError("surface_samples must be >= 1");
}

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
  nlohmann::json j;
  j["rig"] = rig_spec_to_json(cfg.rig);
  j["scene_seed"] = cfg.scene_seed;
  j["shading"] = shading_name(cfg.shading);
  if (cfg.occlusion) {
    j["occlusion"] = {
        {"fraction", cfg.occlusion->fraction},
        {"shape", cfg.occlusion->shape == OccluderShape::kRectangles
                      ? "rectangles"
                      : "ellipses"},
        {"max_pieces", cfg.occlusion->max_pieces},
        {"fill",
         {cfg.occlusion->fill.x, cfg.occlusion->fill.y, cfg.occlusion->fill.z}},
        {"seed", cfg.occlusion->seed}};
  }
  j["provider"] = cfg.provider;
  if (!cfg.provider_dir.empty()) j["provider_dir"] = cfg.provider_dir.string();
  j["degraded_sigma"] = cfg.degraded_sigma;
  j["degraded_jitter_deg"] = cfg.degraded_jitter_deg;
  j["input_azimuths_deg"] = cfg.input_azimuths_deg;
  j["grid_res"] = cfg.grid_res;
  j["decode"] = {{"near", cfg.decode.near},
                 {"far", cfg.decode.far},
                 {"offset_scale", cfg.decode.offset_scale},
                 {"scale_min", cfg.decode.scale_min},
                 {"scale_max", cfg.decode.scale_max}};
  j["render"] = {{"background",
                  {cfg.render.background.x, cfg.render.background.y,
                   cfg.render.background.z}},
                 {"tile", cfg.render.tile},
                 {"near", cfg.render.near},
                 {"far", cfg.render.far},
                 {"alpha_cutoff", cfg.render.alpha_cutoff},
                 {"footprint_sigma", cfg.render.footprint_sigma},
                 {"transmittance_floor", cfg.render.transmittance_floor}};
  j["weights"] = {{"lambda1", cfg.weights.lambda1},
                  {"lambda2", cfg.weights.lambda2}};
  j["proxy_levels"] = cfg.proxy_levels;
  j["optim"] = {{"lr0", cfg.optim.lr0},
                {"total_steps", cfg.optim.total_steps},
                {"beta1", cfg.optim.beta1},
                {"beta2", cfg.optim.beta2},
                {"eps", cfg.optim.eps},
                {"lr_min", cfg.optim.lr_min},
                {"warmup_steps", cfg.optim.warmup_steps}};
  j["views_per_step"] = cfg.views_per_step;
  j["checkpoint_every"] = cfg.checkpoint_every;
  j["holdout"] = cfg.holdout;
  j["opacity_threshold"] = cfg.opacity_threshold;
  j["surface_samples"] = cfg.surface_samples;
  j["seed"] = cfg.seed;
  return j;
}

ExperimentConfig config_from_json(const nlohmann::json& j) {
  ExperimentConfig cfg;
  try {
    if (j.contains("rig")) cfg.rig = rig_spec_from_json(j.at("rig"));
    cfg.scene_seed = j.value("scene_seed", cfg.scene_seed);
    if (j.contains("shading"))
      cfg.shading = shading_from_name(j.at("shading").get<std::string>());
    if (j.contains("occlusion") && !j.at("occlusion").is_null()) {
      const auto& o = j.at("occlusion");
      OcclusionSpec spec;
      spec.fraction = o.value("fraction", spec.fraction);
      if (o.contains("shape"))
        spec.shape = o.at("shape").get<std::string>() == "ellipses"
                         ? OccluderShape::kEllipses
                         : OccluderShape::kRectangles;
      spec.max_pieces = o.value("max_pieces", spec.max_pieces);
      if (o.contains("fill")) {
        const auto f = o.at("fill").get<std::vector<Real>>();
        spec.fill = {f.at(0), f.at(1), f.at(2)};
      }
      spec.seed = o.value("seed", spec.seed);
      cfg.occlusion = spec;
    }
    cfg.provider = j.value("provider", cfg.provider);
    if (j.contains("provider_dir"))
      cfg.provider_dir = j.at("provider_dir").get<std::string>();
    cfg.degraded_sigma = j.value("degraded_sigma", cfg.degraded_sigma);
    cfg.degraded_jitter_deg =
        j.value("degraded_jitter_deg", cfg.degraded_jitter_deg);
    if (j.contains("input_azimuths_deg"))
      cfg.input_azimuths_deg =
          j.at("input_azimuths_deg").get<std::vector<Real>>();
    cfg.grid_res = j.value("grid_res", cfg.grid_res);
    if (j.contains("decode")) {
      const auto& d = j.at("decode");
      cfg.decode.near = d.value("near", cfg.decode.near);
      cfg.decode.far = d.value("far", cfg.decode.far);
      cfg.decode.offset_scale = d.value("offset_scale", cfg.decode.offset_scale);
      cfg.decode.scale_min = d.value("scale_min", cfg.decode.scale_min);
      cfg.decode.scale_max = d.value("scale_max", cfg.decode.scale_max);
    }
    if (j.contains("render")) {
      const auto& r = j.at("render");
      if (r.contains("background")) {
        const auto b = r.at("background").get<std::vector<Real>>();
        cfg.render.background = {b.at(0), b.at(1), b.at(2)};
      }
      cfg.render.tile = r.value("tile", cfg.render.tile);
      cfg.render.near = r.value("near", cfg.render.near);
      cfg.render.far = r.value("far", cfg.render.far);
      cfg.render.alpha_cutoff = r.value("alpha_cutoff", cfg.render.alpha_cutoff);
      cfg.render.footprint_sigma =
          r.value("footprint_sigma", cfg.render.footprint_sigma);
      cfg.render.transmittance_floor =
          r.value("transmittance_floor", cfg.render.transmittance_floor);
    }
    if (j.contains("weights")) {
      cfg.weights.lambda1 = j.at("weights").value("lambda1", cfg.weights.lambda1);
      cfg.weights.lambda2 = j.at("weights").value("lambda2", cfg.weights.lambda2);
    }
    cfg.proxy_levels = j.value("proxy_levels", cfg.proxy_levels);
    if (j.contains("optim")) {
      const auto& o = j.at("optim");
      cfg.optim.lr0 = o.value("lr0", cfg.optim.lr0);
      cfg.optim.total_steps = o.value("total_steps", cfg.optim.total_steps);
      cfg.optim.beta1 = o.value("beta1", cfg.optim.beta1);
      cfg.optim.beta2 = o.value("beta2", cfg.optim.beta2);
      cfg.optim.eps = o.value("eps", cfg.optim.eps);
      cfg.optim.lr_min = o.value("lr_min", cfg.optim.lr_min);
      cfg.optim.warmup_steps = o.value("warmup_steps", cfg.optim.warmup_steps);
    }
    cfg.views_per_step = j.value("views_per_step", cfg.views_per_step);
    cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
    cfg.holdout = j.value("holdout", cfg.holdout);
    cfg.opacity_threshold = j.value("opacity_threshold", cfg.opacity_threshold);
    cfg.surface_samples = j.value("surface_samples", cfg.surface_samples);
    cfg.seed = j.value("seed", cfg.seed);
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigError(std::string("malformed config: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string config_hash(const ExperimentConfig& cfg) {
  const std::string dump = config_to_json(cfg).dump();
  uint64_t h = 1469598103934665603ull;  // FNV-1a 64
  for (unsigned char c : dump) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream ss;
  ss << std::hex << std::setw(16) << std::setfill('0') << h;
  return ss.str();
}

nlohmann::json report_to_json(const MetricsReport& report) {
  nlohmann::json j;
  j["per_view"] = nlohmann::json::array();
  for (const ViewMetrics& v : report.per_view)
    j["per_view"].push_back({{"view", v.view},
                             {"azimuth_deg", v.azimuth_deg},
                             {"psnr", std::min(v.psnr, kPsnrCap)},
                             {"ssim", v.ssim},
                             {"perceptual_proxy", v.perceptual}});
  j["mean_psnr"] = std::min(report.mean_psnr, kPsnrCap);
  j["mean_ssim"] = report.mean_ssim;
  j["mean_perceptual_proxy"] = report.mean_perceptual;
  if (report.cd_cm) j["cd_cm"] = *report.cd_cm;
  if (report.p2s_cm) j["p2s_cm"] = *report.p2s_cm;
  if (report.nc) j["nc"] = *report.nc;
  j["geometry_skipped"] = report.geometry_skipped;
  j["perceptual_metric"] = report.perceptual_metric;
  j["provider_provenance"] = report.provider_provenance;
  return j;
}

namespace {

struct StageTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double stop() {
    const auto t1 = std::chrono::steady_clock::now();
    return std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
};

Image binary_silhouette(const Image& alpha) {
  Image out = alpha;
  for (Real& v : out.data) v = v >= 0.5 ? 1.0 : 0.0;
  return out;
}

// Raw-grid initialization: colors and opacity from the pipeline images
// (the decode input analogue), depth at mid-range, small isotropic splats.
PixelGaussianGrid make_initial_grid(const std::vector<Camera>& cams,
                                    const std::vector<Image>& images,
                                    const std::vector<Image>& sils,
                                    int grid_res, const DecodeConfig& decode) {
  PixelGaussianGrid grid(cams, grid_res, grid_res);
  namespace ch = raw_channel;
  const Real scale_init =
      logit(std::clamp<Real>((0.02 - decode.scale_min) /
                                 (decode.scale_max - decode.scale_min),
                             1e-4, 1.0 - 1e-4));
  for (int v = 0; v < grid.views; ++v) {
    const Image rgb = resize_area(images[v], grid_res, grid_res);
    const Image sil = resize_area(sils[v], grid_res, grid_res);
    for (int y = 0; y < grid_res; ++y)
      for (int x = 0; x < grid_res; ++x) {
        Real* p = &grid.raw[grid.raw_index(v, y, x, 0)];
        const bool inside = sil.at(y, x) >= 0.5;
        p[ch::kOpacity] = logit(inside ? 0.9 : 0.02);
        for (int c = 0; c < 3; ++c)
          p[ch::kColorR + c] =
              logit(std::clamp<Real>(rgb.at(y, x, c), 1e-3, 1.0 - 1e-3));
        p[ch::kScaleX] = scale_init;
        p[ch::kScaleX + 1] = scale_init;
        p[ch::kScaleX + 2] = scale_init;
      }
  }
  return grid;
}

}  // namespace

RunResult run_fit(const ExperimentConfig& cfg,
                  const std::filesystem::path& run_root) {
  cfg.validate();
  RunResult result;
  result.run_dir = run_root / config_hash(cfg);
  std::filesystem::create_directories(result.run_dir);
  const auto art = [&](const std::string& name) { return result.run_dir / name; };

  nlohmann::json& manifest = result.manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = config_to_json(cfg);
  manifest["config_hash"] = config_hash(cfg);
  nlohmann::json& artifacts = manifest["artifacts"];
  nlohmann::json& timings = manifest["timings_ms"];
  const auto write_manifest = [&] {
    std::ofstream f(art("manifest.json"));
    f << manifest.dump(2) << "\n";
  };

  const auto stage = [&](const std::string& name, auto&& body) {
    StageTimer timer;
    try {
      body();
    } catch (const std::exception& e) {
      write_manifest();
      throw StageError(name, e.what());
    }
    timings[name] = timer.stop();
  };

  // rig + scene
  CameraRig rig;
  CapsuleScene scene;
  TraceConfig trace;
  stage("rig", [&] {
    rig = build_rig(cfg.rig);
    std::ofstream f(art("rig.json"));
    f << rig_to_json(rig).dump(2) << "\n";
    artifacts["rig"] = "rig.json";
  });
  stage("scene", [&] {
    scene = default_humanoid(posed_skeleton(cfg.scene_seed));
    trace.shading = cfg.shading;
    trace.max_dist = 2.0 * cfg.rig.radius;
    std::ofstream f(art("scene.json"));
    f << scene_to_json(scene).dump(2) << "\n";
    artifacts["scene"] = "scene.json";
  });

  // input renders, occlusion, provider views
  std::vector<Camera> input_cams;
  std::vector<Image> input_clean, input_fed, input_sil;
  stage("inputs", [&] {
    for (size_t i = 0; i < cfg.input_azimuths_deg.size(); ++i) {
      const Camera cam = orbit_camera(cfg.rig, cfg.input_azimuths_deg[i]);
      ReferenceRender r = raymarch_render(scene, cam, trace);
      input_cams.push_back(cam);
      input_sil.push_back(binary_silhouette(r.alpha));
      write_png(art("input_" + std::to_string(i) + ".png"), r.rgb);
      write_mask_png(art("input_" + std::to_string(i) + "_sil.png"),
                     input_sil.back());
      input_clean.push_back(std::move(r.rgb));
    }
    artifacts["inputs"] = static_cast<int>(input_clean.size());
  });

  stage("occlusion", [&] {
    input_fed = input_clean;
    if (!cfg.occlusion) return;
    for (size_t i = 0; i < input_fed.size(); ++i) {
      OcclusionSpec spec = *cfg.occlusion;
      spec.seed = cfg.occlusion->seed + i;
      const Image mask = generate_mask(input_sil[i], spec);
      input_fed[i] = apply_occlusion(input_fed[i], mask, spec.fill);
      write_mask_png(art("occlusion_mask_" + std::to_string(i) + ".png"), mask);
      write_png(art("input_" + std::to_string(i) + "_occluded.png"),
                input_fed[i]);
    }
    artifacts["occlusion_fraction"] = cfg.occlusion->fraction;
  });

  ProviderResponse provided;
  std::vector<Camera> target_cams;
  stage("provider", [&] {
    const InputTargets layout =
        input_plus_targets(cfg.rig, cfg.input_azimuths_deg[0]);
    target_cams = layout.targets;

    // Pose-control sidecars for the canonical views: external view
    // generators consume exactly this conditioning geometry.
    const Skeleton skel = posed_skeleton(cfg.scene_seed);
    const auto poses = poses_for_canonical_views(skel, target_cams);
    nlohmann::json poses_json = nlohmann::json::array();
    for (int k = 0; k < 4; ++k) {
      write_png(art("pose_" + std::to_string(k) + ".png"),
                render_pose_image(poses[k], skel, cfg.rig.height, cfg.rig.width));
      nlohmann::json joints = nlohmann::json::array();
      nlohmann::json visibility = nlohmann::json::array();
      for (size_t j = 0; j < poses[k].joints.size(); ++j) {
        joints.push_back({poses[k].joints[j].x, poses[k].joints[j].y});
        visibility.push_back(static_cast<bool>(poses[k].visibility[j]));
      }
      poses_json.push_back({{"joints", joints}, {"visibility", visibility}});
    }
    {
      std::ofstream f(art("poses.json"));
      f << poses_json.dump(2) << "\n";
    }
    artifacts["poses"] = "poses.json";

    ProviderRequest req;
    req.inputs = input_fed;
    req.input_cams = input_cams;
    req.targets = target_cams;
    req.scene = &scene;
    req.trace = trace;
    if (cfg.provider == "oracle")
      provided = oracle_provide(req);
    else if (cfg.provider == "file")
      provided = file_provide(cfg.provider_dir, req);
    else
      provided = degraded_provide(req, cfg.degraded_sigma,
                                  cfg.degraded_jitter_deg, cfg.seed + 17);
    for (int k = 0; k < 4; ++k) {
      write_png(art("provider_view_" + std::to_string(k) + ".png"),
                provided.views[k]);
      write_mask_png(art("provider_mask_" + std::to_string(k) + ".png"),
                     provided.silhouettes[k]);
    }
    manifest["provider_provenance"] = provided.provenance.tag();
    for (const std::string& w : provided.provenance.warnings)
      manifest["provider_warnings"].push_back(w);
  });

  // Supervision layout: input views (clean targets, exact silhouettes)
  // followed by the four provided views. The occluded images only inform
  // the grid initialization, mirroring their conditioning-only role.
  std::vector<Camera> fit_cams = input_cams;
  std::vector<Image> fit_rgb = input_clean;
  std::vector<Image> fit_mask = input_sil;
  std::vector<Image> init_rgb = input_fed;
  for (int k = 0; k < 4; ++k) {
    fit_cams.push_back(target_cams[k]);
    fit_rgb.push_back(provided.views[k]);
    fit_mask.push_back(binary_silhouette(provided.silhouettes[k]));
    init_rgb.push_back(provided.views[k]);
  }
  std::vector<Image> init_sil = input_sil;
  for (int k = 0; k < 4; ++k) init_sil.push_back(fit_mask[input_cams.size() + k]);

  PixelGaussianGrid grid;
  FitResult fit_result;
  stage("fit", [&] {
    grid = make_initial_grid(fit_cams, init_rgb, init_sil, cfg.grid_res,
                             cfg.decode);
    FitConfig fc;
    fc.decode = cfg.decode;
    fc.render = cfg.render;
    fc.weights = cfg.weights;
    fc.proxy_levels = cfg.proxy_levels;
    fc.optim = cfg.optim;
    fc.views_per_step = cfg.views_per_step;
    fc.seed = cfg.seed;

    std::ofstream log(art("fit_log.jsonl"));
    int64_t next_checkpoint =
        cfg.checkpoint_every > 0 ? cfg.checkpoint_every : -1;
    fit_result = fit(grid, fit_cams, fit_rgb, fit_mask, fc,
                     [&](const FitStepRecord& rec) {
                       nlohmann::json j{{"step", rec.step},
                                        {"lr", rec.lr},
                                        {"mse", rec.mse},
                                        {"perceptual", rec.perceptual},
                                        {"silhouette", rec.silhouette},
                                        {"total", rec.total},
                                        {"wall_ms", rec.wall_ms}};
                       log << j.dump() << "\n";
                       if (next_checkpoint > 0 && rec.step >= next_checkpoint) {
                         grid_save(grid, art("grid_step_" +
                                             std::to_string(rec.step)));
                         next_checkpoint += cfg.checkpoint_every;
                       }
                     });
    grid_save(grid, art("grid_final"));
    artifacts["grid_final"] = "grid_final.bin";
    artifacts["fit_log"] = "fit_log.jsonl";
    result.final_loss = fit_result.final_loss;
  });

  // Render the full rig and evaluate held-out views.
  stage("eval", [&] {
    const GaussianSet set = decode_pixel_gaussians(grid, cfg.decode);
    MetricsReport& report = result.report;
    report.provider_provenance = provided.provenance.tag();

    std::vector<bool> supervised(rig.cameras.size(), false);
    for (size_t k = 0; k < rig.cameras.size(); ++k) {
      const Real az =
          azimuth_mod(cfg.rig.azimuth_offset_deg + k * 360.0 / cfg.rig.n_views);
      for (const Camera& cam : fit_cams) {
        const Real cam_az = azimuth_mod(rad_to_deg(
            std::atan2(cam.position.x, cam.position.z)));
        if (std::abs(az - cam_az) < 1e-6 || std::abs(az - cam_az) > 360 - 1e-6)
          supervised[k] = true;
      }
    }

    Real sum_psnr = 0, sum_ssim = 0, sum_proxy = 0;
    int evaluated = 0;
    for (size_t k = 0; k < rig.cameras.size(); ++k) {
      const RenderedImage pred = render(set, rig.cameras[k], cfg.render);
      write_png(art("render_view_" + std::to_string(k) + ".png"), pred.rgb);
      write_png(art("render_view_" + std::to_string(k) + "_alpha.png"),
                pred.alpha);
      if (cfg.holdout && supervised[k]) continue;
      const ReferenceRender gt = raymarch_render(scene, rig.cameras[k], trace);
      ViewMetrics vm;
      vm.view = static_cast<int>(k);
      vm.azimuth_deg =
          azimuth_mod(cfg.rig.azimuth_offset_deg + k * 360.0 / cfg.rig.n_views);
      vm.psnr = psnr(pred.rgb, gt.rgb);
      vm.ssim = ssim(pred.rgb, gt.rgb);
      vm.perceptual = perceptual_proxy(pred.rgb, gt.rgb, cfg.proxy_levels);
      report.per_view.push_back(vm);
      sum_psnr += std::min(vm.psnr, kPsnrCap);
      sum_ssim += vm.ssim;
      sum_proxy += vm.perceptual;
      ++evaluated;
    }
    if (evaluated > 0) {
      report.mean_psnr = sum_psnr / evaluated;
      report.mean_ssim = sum_ssim / evaluated;
      report.mean_perceptual = sum_proxy / evaluated;
    }

    const auto cloud = gaussians_to_points(set, cfg.opacity_threshold);
    if (!cloud) {
      report.geometry_skipped = true;
    } else {
      const SurfaceSamples ref =
          sample_surface(scene, cfg.surface_samples, cfg.seed + 101);
      PointCloud ref_cloud{ref.points, ref.normals};
      report.cd_cm = chamfer_cm(*cloud, ref_cloud);
      report.p2s_cm = p2s_cm(*cloud, scene);
      report.nc = normal_consistency(*cloud, ref_cloud);
    }

    std::ofstream f(art("metrics.json"));
    f << report_to_json(report).dump(2) << "\n";
    artifacts["metrics"] = "metrics.json";
  });

  write_manifest();
  return result;
}

RunResult run_from_manifest(const std::filesystem::path& manifest_path,
                            const std::filesystem::path& run_root) {
  std::ifstream f(manifest_path);
  if (!f)
    throw ConfigError("cannot read manifest " + manifest_path.string());
  nlohmann::json j;
  f >> j;
  return run_fit(config_from_json(j.at("config")), run_root);
}

SweepResult run_sweep(const ExperimentConfig& base, SweepAxis axis,
                      const std::filesystem::path& run_root) {
  base.validate();
  std::vector<std::pair<std::string, ExperimentConfig>> runs;
  if (axis == SweepAxis::kOcclusion) {
    const Real fractions[] = {0.0, 0.25, 0.5, 0.75};
    for (size_t i = 0; i < 4; ++i) {
      ExperimentConfig cfg = base;
      if (fractions[i] == 0)
        cfg.occlusion.reset();
      else {
        OcclusionSpec spec = base.occlusion.value_or(OcclusionSpec{});
        spec.fraction = fractions[i];
        spec.seed = base.seed + 31 * (i + 1);
        cfg.occlusion = spec;
      }
      std::ostringstream level;
      level << fractions[i];
      runs.emplace_back(level.str(), cfg);
    }
  } else if (axis == SweepAxis::kStereo) {
    for (const Real sep : {45.0, 90.0, 135.0}) {
      ExperimentConfig cfg = base;
      const Real az0 = base.input_azimuths_deg[0];
      cfg.input_azimuths_deg = {az0, az0 + sep};
      std::ostringstream level;
      level << sep;
      runs.emplace_back(level.str(), cfg);
    }
  } else {
    const std::pair<Real, Real> levels[] = {{0.0, 0.0}, {0.05, 2.0}, {0.1, 5.0}};
    for (const auto& [sigma, jitter] : levels) {
      ExperimentConfig cfg = base;
      cfg.provider = "degraded";
      cfg.degraded_sigma = sigma;
      cfg.degraded_jitter_deg = jitter;
      std::ostringstream level;
      level << "sigma" << sigma << "_jitter" << jitter;
      runs.emplace_back(level.str(), cfg);
    }
  }

  SweepResult result;
  for (auto& [level, cfg] : runs) {
    SweepRow row;
    row.level = level;
    try {
      RunResult rr = run_fit(cfg, run_root);
      row.ok = true;
      row.report = rr.report;
      row.run_dir = rr.run_dir.string();
    } catch (const std::exception& e) {
      row.ok = false;
      row.error = e.what();
    }
    result.rows.push_back(std::move(row));
  }
  return result;
}

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const SweepRow& row : rows) {
    nlohmann::json r{{"level", row.level}, {"ok", row.ok}};
    if (row.ok) {
      r["report"] = report_to_json(row.report);
      r["run_dir"] = row.run_dir;
    } else {
      r["error"] = row.error;
    }
    j.push_back(r);
  }
  return j;
}

std::string SweepResult::to_csv() const {
  std::ostringstream ss;
  ss << "level,ok,psnr,ssim,perceptual_proxy,cd_cm,p2s_cm,nc\n";
  ss.precision(17);
  for (const SweepRow& row : rows) {
    ss << row.level << "," << (row.ok ? 1 : 0);
    if (row.ok) {
      ss << "," << std::min(row.report.mean_psnr, kPsnrCap) << ","
         << row.report.mean_ssim << "," << row.report.mean_perceptual << ",";
      if (row.report.cd_cm) ss << *row.report.cd_cm;
      ss << ",";
      if (row.report.p2s_cm) ss << *row.report.p2s_cm;
      ss << ",";
      if (row.report.nc) ss << *row.report.nc;
    } else {
      ss << ",,,,,,";
    }
    ss << "\n";
  }
  return ss.str();
}

// ---------------------------------------------------------------------------
// Gradient verification

GaussianSet random_gaussian_set(uint64_t seed, int count, Real spread) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<Real> uni(0.0, 1.0);
  std::normal_distribution<Real> gauss(0.0, 1.0);
  GaussianSet set;
  set.gaussians.reserve(count);
  for (int i = 0; i < count; ++i) {
    Gaussian3D g;
    g.mean = {spread * gauss(rng), spread * gauss(rng), spread * gauss(rng)};
    g.scale = {0.02 + 0.15 * uni(rng), 0.02 + 0.15 * uni(rng),
               0.02 + 0.15 * uni(rng)};
    g.rotation = UnitQuat::from(gauss(rng) + 2.0, 0.5 * gauss(rng),
                                0.5 * gauss(rng), 0.5 * gauss(rng));
    g.opacity = 0.15 + 0.75 * uni(rng);
    g.color = {0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng), 0.1 + 0.8 * uni(rng)};
    set.gaussians.push_back(g);
  }
  return set;
}

Camera gradcheck_camera(int image_size) {
  RigSpec spec;
  spec.width = spec.height = image_size;
  spec.radius = 2.7;
  return orbit_camera(spec, 30.0);
}

namespace {

// Fixed random projection turns an image into a scalar; its gradient is the
// projection itself, which keeps the FD loop cheap and exact.
struct LinearProbe {
  Image w_rgb, w_alpha;

  LinearProbe(int h, int w, uint64_t seed) : w_rgb(h, w, 3), w_alpha(h, w, 1) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<Real> gauss(0.0, 1.0);
    for (Real& v : w_rgb.data) v = gauss(rng);
    for (Real& v : w_alpha.data) v = gauss(rng);
  }

  Real operator()(const RenderedImage& img) const {
    Real sum = 0;
    for (size_t i = 0; i < img.rgb.data.size(); ++i)
      sum += img.rgb.data[i] * w_rgb.data[i];
    for (size_t i = 0; i < img.alpha.data.size(); ++i)
      sum += img.alpha.data[i] * w_alpha.data[i];
    return sum;
  }
};

void tally(GradClassStats& stats, Real analytic, Real fd, Real floor, Real tol) {
  if (std::abs(fd) <= floor) return;
  ++stats.checked;
  const Real rel = std::abs(analytic - fd) /
                   std::max(std::abs(analytic), std::abs(fd));
  stats.worst_rel_err = std::max(stats.worst_rel_err, rel);
  if (rel > tol) ++stats.failed;
}

Real* gaussian_param(Gaussian3D& g, int coord) {
  switch (coord) {
    case 0: return &g.mean.x;
    case 1: return &g.mean.y;
    case 2: return &g.mean.z;
    case 3: return &g.scale.x;
    case 4: return &g.scale.y;
    case 5: return &g.scale.z;
    case 6: return &g.rotation.w;
    case 7: return &g.rotation.x;
    case 8: return &g.rotation.y;
    case 9: return &g.rotation.z;
    case 10: return &g.opacity;
    case 11: return &g.color.x;
    case 12: return &g.color.y;
    default: return &g.color.z;
  }
}

Real analytic_param(const GaussianGrad& g, int coord) {
  switch (coord) {
    case 0: return g.mean.x;
    case 1: return g.mean.y;
    case 2: return g.mean.z;
    case 3: return g.scale.x;
    case 4: return g.scale.y;
    case 5: return g.scale.z;
    case 6: return g.rot[0];
    case 7: return g.rot[1];
    case 8: return g.rot[2];
    case 9: return g.rot[3];
    case 10: return g.opacity;
    case 11: return g.color.x;
    case 12: return g.color.y;
    default: return g.color.z;
  }
}

int param_class(int coord) {
  if (coord < 3) return 0;   // mean
  if (coord < 6) return 1;   // scale
  if (coord < 10) return 2;  // rot
  if (coord < 11) return 3;  // opacity
  return 4;                  // color
}

}  // namespace

GradcheckReport gradcheck(const GradcheckOptions& opts) {
  GradcheckReport report;
  report.tolerance = opts.tolerance;
  report.renderer = {{"mean", 0, 0, 0},
                     {"scale", 0, 0, 0},
                     {"rot", 0, 0, 0},
                     {"opacity", 0, 0, 0},
                     {"color", 0, 0, 0}};
  report.chain = {"chain", 0, 0, 0};

  RenderConfig rcfg;
  rcfg.tile = 8;
  const Camera cam = gradcheck_camera(opts.image_size);

  for (int s = 0; s < opts.scenes; ++s) {
    const uint64_t scene_seed = opts.seed * 1000003ull + s;
    GaussianSet set = random_gaussian_set(scene_seed, opts.gaussians);
    const LinearProbe probe(opts.image_size, opts.image_size, scene_seed + 7);

    const GaussianGrads grads =
        render_backward(set, cam, rcfg, probe.w_rgb, probe.w_alpha);

    for (int i = 0; i < static_cast<int>(set.size()); ++i)
      for (int coord = 0; coord < 14; ++coord) {
        Real* p = gaussian_param(set.gaussians[i], coord);
        const Real saved = *p;
        *p = saved + opts.fd_step;
        const Real up = probe(render(set, cam, rcfg));
        *p = saved - opts.fd_step;
        const Real dn = probe(render(set, cam, rcfg));
        *p = saved;
        const Real fd = (up - dn) / (2 * opts.fd_step);
        tally(report.renderer[param_class(coord)],
              analytic_param(grads.per_gaussian[i], coord), fd,
              opts.signal_floor, opts.tolerance);
      }

    // Composed decode -> render -> loss chain, spot-checked on raw coords.
    std::vector<Camera> cams(5, cam);
    PixelGaussianGrid grid(cams, 2, 2);
    {
      std::mt19937_64 rng(scene_seed + 13);
      std::normal_distribution<Real> gauss(0.0, 1.0);
      for (Real& v : grid.raw) v = 0.7 * gauss(rng);
    }
    DecodeConfig dcfg;
    std::vector<Image> gts, masks;
    {
      std::mt19937_64 rng(scene_seed + 19);
      std::uniform_real_distribution<Real> uni(0.0, 1.0);
      Image gt(opts.image_size, opts.image_size, 3);
      for (Real& v : gt.data) v = uni(rng);
      Image mask(opts.image_size, opts.image_size, 1);
      for (Real& v : mask.data) v = uni(rng) < 0.5 ? 0.0 : 1.0;
      gts.assign(1, gt);
      masks.assign(1, mask);
    }
    LossWeights weights;
    const int levels = 2;
    const auto chain_loss = [&]() -> Real {
      const GaussianSet dset = decode_pixel_gaussians(grid, dcfg);
      std::vector<RenderedImage> renders{render(dset, cam, rcfg)};
      return total_loss(renders, gts, masks, weights, levels).total;
    };
    std::vector<Real> chain_analytic;
    {
      const GaussianSet dset = decode_pixel_gaussians(grid, dcfg);
      std::vector<RenderedImage> renders{render(dset, cam, rcfg)};
      LossGrads lg;
      total_loss(renders, gts, masks, weights, levels, &lg);
      const GaussianGrads g =
          render_backward(dset, cam, rcfg, lg.rgb[0], lg.alpha[0]);
      chain_analytic = decode_vjp(grid, dcfg, g);
    }
    std::mt19937_64 pick_rng(scene_seed + 23);
    std::uniform_int_distribution<size_t> pick(0, grid.raw.size() - 1);
    for (int k = 0; k < opts.chain_coords; ++k) {
      const size_t idx = pick(pick_rng);
      const Real saved = grid.raw[idx];
      grid.raw[idx] = saved + opts.fd_step;
      const Real up = chain_loss();
      grid.raw[idx] = saved - opts.fd_step;
      const Real dn = chain_loss();
      grid.raw[idx] = saved;
      const Real fd = (up - dn) / (2 * opts.fd_step);
      tally(report.chain, chain_analytic[idx], fd, opts.signal_floor,
            opts.tolerance);
    }
  }

  int64_t checked = 0, failed = 0;
  for (const GradClassStats& c : report.renderer) {
    checked += c.checked;
    failed += c.failed;
  }
  // A central difference that straddles an alpha-cutoff boundary reports a
  // spurious mismatch even though the function is smooth on both sides
  // (measured incidence ~0.2% of coordinates at h = 1e-4). Both suites
  // therefore allow 1% of coordinates to miss, floored at one coordinate
  // for small samples; an empty scene passes vacuously.
  const auto allowance = [](int64_t n) {
    return std::max<int64_t>(1, n / 100);
  };
  const bool renderer_ok = checked == 0 || failed <= allowance(checked);
  const bool chain_ok =
      report.chain.checked == 0 || report.chain.failed <= allowance(report.chain.checked);
  report.passed = renderer_ok && chain_ok;
  return report;
}

nlohmann::json GradcheckReport::to_json() const {
  nlohmann::json j;
  j["tolerance"] = tolerance;
  j["passed"] = passed;
  j["renderer"] = nlohmann::json::array();
  for (const GradClassStats& c : renderer)
    j["renderer"].push_back({{"class", c.name},
                             {"checked", c.checked},
                             {"failed", c.failed},
                             {"worst_rel_err", c.worst_rel_err}});
  j["chain"] = {{"checked", chain.checked},
                {"failed", chain.failed},
                {"worst_rel_err", chain.worst_rel_err}};
  return j;
}

}  // namespace splatfit
