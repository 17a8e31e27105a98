// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one pass/fail line per criterion. Exit code is the number of
// failed criteria. `--only N` restricts to a single criterion (the fit-based
// criteria 4 and 5 will then run their own clean baseline).

#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

#include "splatfit/harness.hpp"
#include "splatfit/kdtree.hpp"
#include "splatfit/loss.hpp"
#include "splatfit/metrics.hpp"
#include "splatfit/optim.hpp"
#include "support/reference_renderer.hpp"

using namespace splatfit;
using splatfit::testing::reference_render;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0;
};

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(f), {});
}

std::filesystem::path acceptance_root() {
  static const auto root =
      std::filesystem::temp_directory_path() / "splatfit_acceptance";
  return root;
}

// The default experiment configuration is the criterion-3 protocol: default
// humanoid, one input plus four oracle views, 64x64 grid per view, 128x128
// renders, 2000 steps.
ExperimentConfig protocol_config() { return ExperimentConfig{}; }

// Clean-fit result shared by criteria 3, 4, and 5.
const RunResult& clean_fit() {
  static const RunResult result =
      run_fit(protocol_config(), acceptance_root());
  return result;
}

// ---------------------------------------------------------------- criterion 1
Outcome renderer_equivalence() {
  Outcome out;
  std::mt19937_64 seeds(20240001);
  Real worst = 0;
  int scenes = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const uint64_t seed = seeds();
    const int count = 1 + static_cast<int>(seed % 64);
    const int res = 16 << (trial % 3);  // 16, 32, 64
    const GaussianSet set = random_gaussian_set(seed, count);
    const Camera cam = gradcheck_camera(res);
    RenderConfig cfg;
    cfg.background = {0.15, 0.08, 0.2};
    cfg.with_depth = true;
    const RenderedImage tiled = render(set, cam, cfg);
    const RenderedImage ref = reference_render(set, cam, cfg);
    worst = std::max(worst, image_max_abs_diff(tiled.rgb, ref.rgb));
    worst = std::max(worst, image_max_abs_diff(tiled.alpha, ref.alpha));
    worst = std::max(worst, image_max_abs_diff(tiled.depth, ref.depth));
    ++scenes;
  }
  std::ostringstream ss;
  ss << scenes << " scenes, max abs pixel diff " << worst;
  out.detail = ss.str();
  out.pass = worst < 1e-6;
  return out;
}

// ---------------------------------------------------------------- criterion 2
Outcome gradient_fidelity() {
  Outcome out;
  GradcheckOptions opts;
  opts.seed = 424242;
  opts.scenes = 20;
  opts.gaussians = 48;
  opts.image_size = 16;
  opts.chain_coords = 32;
  const GradcheckReport report = gradcheck(opts);

  int64_t checked = 0, failed = 0;
  Real worst = 0;
  for (const GradClassStats& c : report.renderer) {
    checked += c.checked;
    failed += c.failed;
    worst = std::max(worst, c.worst_rel_err);
  }
  const Real pass_fraction =
      checked == 0 ? 1.0 : 1.0 - static_cast<Real>(failed) / checked;
  const Real chain_fraction =
      report.chain.checked == 0
          ? 1.0
          : 1.0 - static_cast<Real>(report.chain.failed) / report.chain.checked;
  std::ostringstream ss;
  ss << "renderer " << checked << " coords, pass " << 100 * pass_fraction
     << "%; chain " << report.chain.checked << " coords, pass "
     << 100 * chain_fraction << "%";
  out.detail = ss.str();
  out.pass = pass_fraction >= 0.99 && chain_fraction >= 0.99;
  return out;
}

// ---------------------------------------------------------------- criterion 3
Outcome fit_quality() {
  Outcome out;
  const auto t0 = std::chrono::steady_clock::now();
  const RunResult& result = clean_fit();
  const double fit_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  std::ostringstream ss;
  ss << "held-out psnr " << result.report.mean_psnr << " dB (>= 28), ssim "
     << result.report.mean_ssim << " (>= 0.90), " << fit_seconds << " s";
  out.detail = ss.str();
  out.pass = result.report.mean_psnr >= 28.0 &&
             result.report.mean_ssim >= 0.90 && fit_seconds < 900.0;
  return out;
}

// ---------------------------------------------------------------- criterion 4
Outcome occlusion_resilience() {
  Outcome out;
  const Real clean_psnr = clean_fit().report.mean_psnr;
  std::ostringstream ss;
  ss << "clean " << clean_psnr << " dB;";
  bool pass = true;
  Real min_psnr = clean_psnr;
  for (const Real fraction : {0.25, 0.5, 0.75}) {
    ExperimentConfig cfg = protocol_config();
    OcclusionSpec spec;
    spec.fraction = fraction;
    spec.seed = cfg.seed + static_cast<uint64_t>(fraction * 100);
    cfg.occlusion = spec;
    const RunResult result = run_fit(cfg, acceptance_root());
    const Real psnr_f = result.report.mean_psnr;
    min_psnr = std::min(min_psnr, psnr_f);
    ss << " " << fraction << " -> " << psnr_f << " dB";
    if (std::abs(psnr_f - clean_psnr) > 1.0) pass = false;
  }
  ss << "; max drop " << clean_psnr - min_psnr << " dB";
  if (clean_psnr - min_psnr > 1.0) pass = false;
  out.detail = ss.str();
  out.pass = pass;
  return out;
}

// ---------------------------------------------------------------- criterion 5
Outcome stereo_trend() {
  Outcome out;
  const Real single_psnr = clean_fit().report.mean_psnr;
  std::ostringstream ss;
  ss << "single " << single_psnr << " dB;";
  bool pass = true;
  for (const Real sep : {45.0, 90.0, 135.0}) {
    ExperimentConfig cfg = protocol_config();
    cfg.input_azimuths_deg = {0.0, sep};
    const RunResult result = run_fit(cfg, acceptance_root());
    const Real psnr_s = result.report.mean_psnr;
    ss << " " << sep << " -> " << psnr_s << " dB";
    if (psnr_s < single_psnr + 0.5) pass = false;
  }
  out.detail = ss.str();
  out.pass = pass;
  return out;
}

// ---------------------------------------------------------------- criterion 6
Outcome loss_composition() {
  Outcome out;
  std::mt19937_64 rng(606060);
  std::uniform_real_distribution<Real> uni(0.0, 1.0);
  const LossWeights weights;  // lambda1 = 1.5, lambda2 = 1.0 defaults
  if (weights.lambda1 != 1.5 || weights.lambda2 != 1.0) {
    out.detail = "default weights are not (1.5, 1.0)";
    return out;
  }
  int exact = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const int views = 1 + static_cast<int>(rng() % 3);
    std::vector<RenderedImage> renders(views);
    std::vector<Image> gts, masks;
    for (int v = 0; v < views; ++v) {
      renders[v].rgb = Image(16, 16, 3);
      renders[v].alpha = Image(16, 16, 1);
      for (Real& x : renders[v].rgb.data) x = uni(rng);
      for (Real& x : renders[v].alpha.data) x = uni(rng);
      Image gt(16, 16, 3), mask(16, 16, 1);
      for (Real& x : gt.data) x = uni(rng);
      for (Real& x : mask.data) x = uni(rng) < 0.5 ? 0.0 : 1.0;
      gts.push_back(std::move(gt));
      masks.push_back(std::move(mask));
    }
    const LossBreakdown b = total_loss(renders, gts, masks, weights);
    if (b.total == b.mse + 1.5 * b.perceptual + 1.0 * b.silhouette) ++exact;
  }
  std::ostringstream ss;
  ss << exact << "/100 inputs bit-exact";
  out.detail = ss.str();
  out.pass = exact == 100;
  return out;
}

// ---------------------------------------------------------------- criterion 7
Outcome metric_oracles() {
  Outcome out;
  std::ostringstream ss;
  bool pass = true;

  {  // chamfer: spatial index vs O(n^2) brute force, exact
    std::mt19937_64 rng(707070);
    std::uniform_real_distribution<Real> u(-1.0, 1.0);
    PointCloud a, b;
    for (int i = 0; i < 1000; ++i) {
      a.points.push_back({u(rng), u(rng), u(rng)});
      b.points.push_back({u(rng), u(rng), u(rng)});
    }
    Real sum_ab = 0, sum_ba = 0;
    for (const Vec3& p : a.points) {
      Real best = std::numeric_limits<Real>::infinity();
      for (const Vec3& q : b.points) best = std::min(best, KdTree3::dist2(p, q));
      sum_ab += std::sqrt(best);
    }
    for (const Vec3& q : b.points) {
      Real best = std::numeric_limits<Real>::infinity();
      for (const Vec3& p : a.points) best = std::min(best, KdTree3::dist2(q, p));
      sum_ba += std::sqrt(best);
    }
    const Real brute = 100.0 * 0.5 * (sum_ab / 1000 + sum_ba / 1000);
    const bool ok = chamfer_cm(a, b) == brute;
    ss << "chamfer exact=" << (ok ? "yes" : "no");
    pass = pass && ok;
  }
  {  // psnr constant-0.1
    Image x(16, 16, 3, 0.35), y(16, 16, 3, 0.45);
    const Real p = psnr(x, y);
    const bool ok = std::abs(p - 20.0) <= 1e-6;
    ss << "; psnr(0.1)=" << p;
    pass = pass && ok;
  }
  {  // ssim self-identity
    std::mt19937_64 rng(717171);
    std::uniform_real_distribution<Real> u(0.0, 1.0);
    Image x(32, 32, 3);
    for (Real& v : x.data) v = u(rng);
    const Real s = ssim(x, x);
    ss << "; ssim(x,x)=" << s;
    pass = pass && s == 1.0;
  }
  {  // p2s of on-surface samples
    const CapsuleScene scene = default_humanoid(rest_pose_skeleton());
    const SurfaceSamples samples = sample_surface(scene, 5000, 7);
    const Real p2s = p2s_cm({samples.points, {}}, scene);
    ss << "; p2s(surface)=" << p2s << " cm";
    pass = pass && p2s < 1e-3;
  }
  {  // NC self-identity
    std::mt19937_64 rng(727272);
    std::normal_distribution<Real> g(0.0, 1.0);
    PointCloud cloud;
    for (int i = 0; i < 2000; ++i) {
      cloud.points.push_back({g(rng), g(rng), g(rng)});
      cloud.normals.push_back(Vec3{g(rng), g(rng), g(rng)}.normalized());
    }
    const Real nc = normal_consistency(cloud, cloud);
    ss << "; nc(self)=" << nc;
    pass = pass && std::abs(nc - 1.0) <= 1e-12;
  }
  out.detail = ss.str();
  out.pass = pass;
  return out;
}

// ---------------------------------------------------------------- criterion 8
Outcome rig_geometry() {
  Outcome out;
  const CameraRig rig = build_rig(RigSpec{});
  bool pass = rig.cameras.size() == 16;
  Real worst_gap = 0, worst_lookat = 0;
  for (size_t k = 0; k < rig.cameras.size(); ++k) {
    const Camera& cam = rig.cameras[k];
    const Camera& next = rig.cameras[(k + 1) % rig.cameras.size()];
    auto azimuth = [](const Camera& c) {
      return rad_to_deg(std::atan2(c.position.x, c.position.z));
    };
    Real gap = azimuth(next) - azimuth(cam);
    while (gap < 0) gap += 360;
    while (gap >= 360) gap -= 360;
    worst_gap = std::max(worst_gap, std::abs(gap - 22.5));

    const Vec3 to_origin = (Vec3{} - cam.position).normalized();
    const Real c = std::clamp<Real>(cam.forward().dot(to_origin), -1.0, 1.0);
    worst_lookat = std::max(worst_lookat, std::acos(c));
  }
  pass = pass && worst_gap <= 1e-9 && worst_lookat < 1e-6;

  const CameraRig four = canonical_four(RigSpec{});
  const Real want[4] = {0, 90, 180, 270};
  for (int k = 0; k < 4; ++k) {
    Real az = rad_to_deg(
        std::atan2(four.cameras[k].position.x, four.cameras[k].position.z));
    if (az < -1e-9) az += 360;
    if (std::abs(az - want[k]) > 1e-9) pass = false;
  }
  std::ostringstream ss;
  ss << "16 cameras, azimuth gap err " << worst_gap << " deg, look-at err "
     << worst_lookat << " rad, canonical four at 0/90/180/270";
  out.detail = ss.str();
  out.pass = pass;
  return out;
}

// ---------------------------------------------------------------- criterion 9
Outcome ray_embedding_invariants() {
  Outcome out;
  RigSpec spec;
  spec.width = spec.height = 128;
  const CameraRig rig = build_rig(spec);
  const Image img(128, 128, 3, 0.5);
  Real worst_norm = 0, worst_orth = 0;
  for (const Camera& cam : rig.cameras) {
    const Image f = ray_feature_map(img, cam);
    for (int y = 0; y < 128; ++y)
      for (int x = 0; x < 128; ++x) {
        const Vec3 d{f.at(y, x, 3), f.at(y, x, 4), f.at(y, x, 5)};
        const Vec3 m{f.at(y, x, 6), f.at(y, x, 7), f.at(y, x, 8)};
        worst_norm = std::max(worst_norm, std::abs(d.norm() - 1.0));
        worst_orth = std::max(worst_orth, std::abs(d.dot(m)));
      }
  }
  std::ostringstream ss;
  ss << "16 cameras x 128x128: |d|-1 err " << worst_norm << ", d.m err "
     << worst_orth;
  out.detail = ss.str();
  out.pass = worst_norm <= 1e-6 && worst_orth <= 1e-6;
  return out;
}

// --------------------------------------------------------------- criterion 10
Outcome determinism() {
  Outcome out;
  ExperimentConfig cfg;
  cfg.grid_res = 32;
  cfg.optim.total_steps = 150;
  cfg.optim.warmup_steps = 15;
  cfg.checkpoint_every = 50;

  const auto root_a = acceptance_root() / "det_a";
  const auto root_b = acceptance_root() / "det_b";
  std::filesystem::remove_all(root_a);
  std::filesystem::remove_all(root_b);
  const RunResult a = run_fit(cfg, root_a);
  const RunResult b = run_from_manifest(a.run_dir / "manifest.json", root_b);

  const bool metrics_equal =
      slurp(a.run_dir / "metrics.json") == slurp(b.run_dir / "metrics.json");
  const bool grid_equal =
      slurp(a.run_dir / "grid_final.bin") == slurp(b.run_dir / "grid_final.bin");
  const bool ckpt_equal = slurp(a.run_dir / "grid_step_50.bin") ==
                          slurp(b.run_dir / "grid_step_50.bin");
  std::ostringstream ss;
  ss << "metrics json " << (metrics_equal ? "identical" : "DIFFER") << ", grids "
     << ((grid_equal && ckpt_equal) ? "identical" : "DIFFER");
  out.detail = ss.str();
  out.pass = metrics_equal && grid_equal && ckpt_equal;
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i)
    if (std::strcmp(argv[i], "--only") == 0 && i + 1 < argc)
      only = std::atoi(argv[i + 1]);

  std::filesystem::create_directories(acceptance_root());

  struct Criterion {
    int id;
    const char* name;
    std::function<Outcome()> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "renderer matches brute-force reference", renderer_equivalence},
      {2, "analytic gradients match finite differences", gradient_fidelity},
      {3, "held-out fit quality", fit_quality},
      {4, "occlusion resilience", occlusion_resilience},
      {5, "stereo input trend", stereo_trend},
      {6, "loss composition identity", loss_composition},
      {7, "metric oracles", metric_oracles},
      {8, "rig geometry", rig_geometry},
      {9, "ray embedding invariants", ray_embedding_invariants},
      {10, "manifest determinism", determinism},
  };

  int failures = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail = std::string("exception: ") + e.what();
    }
    outcome.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    std::printf("[%s] C%-2d %-45s %s (%.1f s)\n",
                outcome.pass ? "PASS" : "FAIL", c.id, c.name,
                outcome.detail.c_str(), outcome.seconds);
    std::fflush(stdout);
    if (!outcome.pass) ++failures;
  }
  if (failures == 0)
    std::printf("acceptance: all criteria passed\n");
  else
    std::printf("acceptance: %d criteria FAILED\n", failures);
  return failures;
}
