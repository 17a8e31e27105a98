#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "splatfit/image_io.hpp"
#include "splatfit/occlusion.hpp"
#include "splatfit/provider.hpp"
#include "splatfit/rig.hpp"
#include "splatfit/serialize.hpp"

using namespace splatfit;

namespace {

struct Fixture {
  CapsuleScene scene = default_humanoid(rest_pose_skeleton());
  RigSpec spec;
  ProviderRequest req;

  explicit Fixture(int res = 64) {
    spec.width = spec.height = res;
    const InputTargets layout = input_plus_targets(spec, 0.0);
    const ReferenceRender input = raymarch_render(scene, layout.input);
    req.inputs = {input.rgb};
    req.input_cams = {layout.input};
    req.targets = layout.targets;
    req.scene = &scene;
  }
};

std::filesystem::path temp_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("oracle views equal reference renders and ignore occlusion") {
  Fixture fx;
  const ProviderResponse clean = oracle_provide(fx.req);
  CHECK(clean.provenance.tag() == "oracle");

  for (int k = 0; k < 4; ++k) {
    const ReferenceRender want = raymarch_render(fx.scene, fx.req.targets[k]);
    CHECK(image_max_abs_diff(clean.views[k], want.rgb) == 0.0);
    CHECK(image_max_abs_diff(clean.silhouettes[k], want.alpha) == 0.0);
  }

  // occlude the input; the oracle reads only cameras + scene
  Fixture occluded;
  OcclusionSpec ospec;
  ospec.fraction = 0.5;
  ospec.seed = 3;
  const Image sil = raymarch_render(fx.scene, fx.req.input_cams[0]).alpha;
  const Image mask = generate_mask(sil, ospec);
  occluded.req.inputs[0] = apply_occlusion(occluded.req.inputs[0], mask, ospec.fill);
  const ProviderResponse from_occluded = oracle_provide(occluded.req);
  for (int k = 0; k < 4; ++k)
    CHECK(image_max_abs_diff(clean.views[k], from_occluded.views[k]) == 0.0);
}

TEST_CASE("oracle first view matches the clean input render") {
  Fixture fx;
  const ProviderResponse r = oracle_provide(fx.req);
  const ReferenceRender input = raymarch_render(fx.scene, fx.req.input_cams[0]);
  CHECK(image_max_abs_diff(r.views[0], input.rgb) == 0.0);
}

TEST_CASE("provider request validation") {
  Fixture fx;
  ProviderRequest bad = fx.req;
  bad.scene = nullptr;
  CHECK_THROWS(oracle_provide(bad));

  bad = fx.req;
  bad.input_cams[0] = orbit_camera(fx.spec, 90.0);  // breaks anchoring
  CHECK_THROWS_AS(oracle_provide(bad), std::invalid_argument);
}

TEST_CASE("file provider round-trips oracle output at 8-bit precision") {
  Fixture fx;
  const ProviderResponse oracle = oracle_provide(fx.req);
  const auto dir = temp_dir("splatfit_provider_rt");
  for (int k = 0; k < 4; ++k) {
    write_png(dir / ("view_" + std::to_string(k) + ".png"), oracle.views[k]);
    write_mask_png(dir / ("mask_" + std::to_string(k) + ".png"),
                   oracle.silhouettes[k]);
  }
  const ProviderResponse loaded = file_provide(dir, fx.req);
  CHECK(loaded.provenance.tag() == "file:" + dir.string());
  for (int k = 0; k < 4; ++k) {
    CHECK(image_max_abs_diff(loaded.views[k], oracle.views[k]) <=
          0.5 / 255.0 + 1e-12);
    CHECK(image_max_abs_diff(loaded.silhouettes[k], oracle.silhouettes[k]) ==
          0.0);
  }
  CHECK(loaded.provenance.warnings.empty());
}

TEST_CASE("file provider names missing and mis-sized files") {
  Fixture fx;
  const ProviderResponse oracle = oracle_provide(fx.req);
  const auto dir = temp_dir("splatfit_provider_missing");
  for (int k = 0; k < 4; ++k) {
    write_png(dir / ("view_" + std::to_string(k) + ".png"), oracle.views[k]);
    if (k != 2)
      write_mask_png(dir / ("mask_" + std::to_string(k) + ".png"),
                     oracle.silhouettes[k]);
  }
  bool threw = false;
  try {
    file_provide(dir, fx.req);
  } catch (const std::runtime_error& e) {
    threw = true;
    CHECK(std::string(e.what()).find("mask_2.png") != std::string::npos);
  }
  CHECK(threw);

  write_mask_png(dir / "mask_2.png", oracle.silhouettes[2]);
  write_png(dir / "view_1.png", Image(16, 16, 3, 0.5));  // wrong resolution
  threw = false;
  try {
    file_provide(dir, fx.req);
  } catch (const std::runtime_error& e) {
    threw = true;
    const std::string msg = e.what();
    CHECK(msg.find("expected 64x64") != std::string::npos);
    CHECK(msg.find("16x16") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("file provider cross-checks cameras.json") {
  Fixture fx;
  const ProviderResponse oracle = oracle_provide(fx.req);
  const auto dir = temp_dir("splatfit_provider_cams");
  for (int k = 0; k < 4; ++k) {
    write_png(dir / ("view_" + std::to_string(k) + ".png"), oracle.views[k]);
    write_mask_png(dir / ("mask_" + std::to_string(k) + ".png"),
                   oracle.silhouettes[k]);
  }
  nlohmann::json cams = nlohmann::json::array();
  for (int k = 0; k < 4; ++k) cams.push_back(camera_to_json(fx.req.targets[k]));
  {
    std::ofstream f(dir / "cameras.json");
    f << cams.dump();
  }
  CHECK(file_provide(dir, fx.req).provenance.warnings.empty());

  cams[1] = camera_to_json(orbit_camera(fx.spec, 17.0));
  {
    std::ofstream f(dir / "cameras.json");
    f << cams.dump();
  }
  const ProviderResponse warned = file_provide(dir, fx.req);
  REQUIRE(warned.provenance.warnings.size() == 1);
  CHECK(warned.provenance.warnings[0].find("entry 1") != std::string::npos);
}

TEST_CASE("degenerate degradation equals the oracle") {
  Fixture fx;
  const ProviderResponse oracle = oracle_provide(fx.req);
  const ProviderResponse degraded = degraded_provide(fx.req, 0.0, 0.0, 5);
  for (int k = 0; k < 4; ++k)
    CHECK(image_max_abs_diff(oracle.views[k], degraded.views[k]) == 0.0);
  CHECK(degraded.provenance.tag() == "degraded(sigma=0, jitter=0)");
}

TEST_CASE("noise sigma matches the folded-normal expectation") {
  // Mid-gray scene keeps clipping inactive where we measure.
  CapsuleScene gray;
  gray.bones.push_back({{0, -0.4, 0}, {0, 0.4, 0}, 0.35, {0.5, 0.5, 0.5}});
  RigSpec spec;
  spec.width = spec.height = 96;
  const InputTargets layout = input_plus_targets(spec, 0.0);
  ProviderRequest req;
  req.inputs = {raymarch_render(gray, layout.input).rgb};
  req.input_cams = {layout.input};
  req.targets = layout.targets;
  req.scene = &gray;
  req.trace.shading = ShadingMode::kFlat;

  const Real sigma = 0.1;
  const ProviderResponse oracle = oracle_provide(req);
  const ProviderResponse noisy = degraded_provide(req, sigma, 0.0, 12345);

  Real sum = 0;
  int64_t count = 0;
  for (int k = 0; k < 4; ++k)
    for (size_t i = 0; i < oracle.views[k].data.size(); ++i) {
      const Real clean = oracle.views[k].data[i];
      if (clean < 0.3 || clean > 0.7) continue;  // avoid clipped pixels
      sum += std::abs(noisy.views[k].data[i] - clean);
      ++count;
    }
  REQUIRE(count > 2000);
  const Real mad = sum / count;
  const Real expected = sigma * std::sqrt(2.0 / kPi);
  CHECK(std::abs(mad - expected) < 0.05 * expected);
}

TEST_CASE("pose jitter changes silhouettes on an asymmetric scene") {
  CapsuleScene asym;
  asym.bones.push_back({{0, -0.5, 0}, {0, 0.5, 0}, 0.25, {0.8, 0.4, 0.2}});
  asym.bones.push_back({{0, 0.3, 0}, {0.65, 0.45, 0}, 0.1, {0.2, 0.6, 0.8}});
  RigSpec spec;
  spec.width = spec.height = 64;
  const InputTargets layout = input_plus_targets(spec, 0.0);
  ProviderRequest req;
  req.inputs = {raymarch_render(asym, layout.input).rgb};
  req.input_cams = {layout.input};
  req.targets = layout.targets;
  req.scene = &asym;

  const ProviderResponse oracle = oracle_provide(req);
  const ProviderResponse jittered = degraded_provide(req, 0.0, 5.0, 99);
  // at least one view's silhouette must differ (IoU < 1)
  bool changed = false;
  for (int k = 0; k < 4; ++k)
    if (image_max_abs_diff(oracle.silhouettes[k], jittered.silhouettes[k]) > 0)
      changed = true;
  CHECK(changed);

  // determinism under seed
  const ProviderResponse again = degraded_provide(req, 0.0, 5.0, 99);
  for (int k = 0; k < 4; ++k)
    CHECK(image_max_abs_diff(jittered.views[k], again.views[k]) == 0.0);
}

TEST_CASE("responses stay in range at the requested resolution") {
  Fixture fx(32);
  for (const ProviderResponse& r :
       {oracle_provide(fx.req), degraded_provide(fx.req, 0.2, 3.0, 7)}) {
    for (int k = 0; k < 4; ++k) {
      CHECK(r.views[k].width == 32);
      CHECK(r.views[k].height == 32);
      for (Real v : r.views[k].data) {
        CHECK(v >= 0.0);
        CHECK(v <= 1.0);
      }
      for (Real v : r.silhouettes[k].data) CHECK((v == 0.0 || v == 1.0));
    }
  }
}
