#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cgflow/flow.hpp"
#include "cgflow/latent_io.hpp"
#include "cgflow/pipeline.hpp"

using namespace cgflow;
using doctest::Approx;
using doctest::Contains;

namespace fs = std::filesystem;

namespace {

// Stage results for the default block preset, computed once per process.
struct BlockRun {
  SceneSpec scene;
  StageOneResult s1;
  StageTwoResult s2;
};

const BlockRun& block_run() {
  static const BlockRun run = [] {
    BlockRun r;
    r.scene = load_scene("preset:falling_block");
    r.s1 = run_stage_one(r.scene, build_orbit_oracle(r.scene));
    r.s2 = run_stage_two(r.scene, r.s1, build_sim_oracle(r.scene));
    return r;
  }();
  return run;
}

SceneSpec static_scene() {
  return parse_scene(ConfigFile::parse_string(R"(
[scene]
name = static_ball
seed = 5

[camera]
width = 32
height = 32
fov_deg = 40

[orbit]
center = 0 0 0.45
radius = 1.5
elevation_deg = 16
k_frames = 12

[object.ball]
id = 1
shape = sphere
center = 0 0 0.45
radius = 0.12
color = 0.2 0.7 0.3
velocity = 0 0 0

[ground]
radius = 1.2

[sim]
frames = 6
gravity = 0 0 0

[reconstruction]
splat_radius_px = 0.5
)"));
}

// Frame permutation with no fixed point; a control clip with the same frame
// statistics but scrambled motion.
double shuffled_control_mse(const Latent& out, const Latent& guide,
                            const VideoMask& mask, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<int> perm(guide.frames);
  for (int i = 0; i < guide.frames; ++i) perm[i] = i;
  for (int i = guide.frames - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform() * (i + 1));
    std::swap(perm[i], perm[j]);
  }
  for (int i = 0; i < guide.frames; ++i)
    if (perm[i] == i) std::swap(perm[i], perm[(i + 1) % guide.frames]);
  Latent sh = guide;
  VideoMask sm = mask;
  for (int f = 0; f < guide.frames; ++f)
    for (int y = 0; y < guide.height; ++y)
      for (int x = 0; x < guide.width; ++x) {
        sm.at(f, y, x) = mask.at(perm[f], y, x);
        for (int c = 0; c < guide.channels; ++c)
          sh.at(f, y, x, c) = guide.at(perm[f], y, x, c);
      }
  return masked_mse(out, sh, sm);
}

}  // namespace

TEST_CASE("stage one pins observed pixels and only adds geometry") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const StageOneResult s1 = run_stage_one(scene, build_orbit_oracle(scene));

  // Observed pixels survive the SDE loop; the final generation leg leaves
  // only a floating-point residual on them.
  CHECK(masked_mse(s1.phi.video, s1.guide_video, s1.observed) <= 1e-20);

  // The completed cloud starts from the input-view cloud verbatim.
  REQUIRE(s1.completed_cloud.size() >= s1.input_cloud.size());
  for (std::size_t i = 0; i < s1.input_cloud.size(); ++i) {
    CHECK(s1.completed_cloud.positions[i] == s1.input_cloud.positions[i]);
    CHECK(s1.completed_cloud.object_ids[i] == s1.input_cloud.object_ids[i]);
  }
  CHECK(s1.surface_coverage >= 0.0);
  CHECK(s1.surface_coverage <= 1.0);
}

TEST_CASE("golden block orbit completion covers the ground-truth surface") {
  const BlockRun& run = block_run();
  MESSAGE("golden surface coverage = ", run.s1.surface_coverage);
  CHECK(run.s1.surface_coverage >= 0.95);
}

TEST_CASE("a two-pose orbit still completes") {
  SceneSpec scene = load_scene("preset:falling_block");
  scene.orbit.k_frames = 2;
  scene.input_pose = orbit_trajectory(scene.orbit).front();
  const StageOneResult s1 = run_stage_one(scene, build_orbit_oracle(scene));
  REQUIRE(s1.completed_cloud.size() >= s1.input_cloud.size());
  for (std::size_t i = 0; i < s1.input_cloud.size(); ++i)
    CHECK(s1.completed_cloud.positions[i] == s1.input_cloud.positions[i]);
  CHECK(s1.phi.video.frames == 2);
}

TEST_CASE("stage two keeps unmasked pixels at the noised background") {
  const BlockRun& run = block_run();
  const StageTwoResult& s2 = run.s2;

  // Replay the initialization: noise drawn from the stage seed, applied to
  // the background, must match every pixel the sim mask never claimed.
  SdeConfig sde = run.scene.sde;
  sde.stage = Stage::two;
  sde.seed = run.scene.seed ^ 0x57A6E002ULL;
  Rng rng(sde.seed);
  const Latent& bg = s2.background_video;
  const Latent eps = normal_latent(bg.frames, bg.height, bg.width, bg.channels, rng);
  const Latent z_noisy = forward_noise(bg, sde.tau, eps);

  std::size_t unmasked = 0;
  for (int f = 0; f < bg.frames; ++f)
    for (int y = 0; y < bg.height; ++y)
      for (int x = 0; x < bg.width; ++x) {
        if (s2.foreground.at(f, y, x)) continue;
        ++unmasked;
        for (int c = 0; c < bg.channels; ++c)
          CHECK(s2.phi.z_tau_init.at(f, y, x, c) == z_noisy.at(f, y, x, c));
      }
  CHECK(unmasked > 0);

  // Fitted ground sits on the true plane.
  CHECK(std::abs(s2.fitted_ground.normal.z()) >= 0.999);
  CHECK(std::abs(s2.fitted_ground.signed_distance(Vec3::Zero())) <= 5e-3);
  CHECK(s2.ground_inliers >= 100);
  CHECK(s2.ground_fit_rms <= 1e-2);
}

TEST_CASE("a static scene generates a static video up to the SDE noise floor") {
  SceneSpec scene = static_scene();
  const StageOneResult s1 = run_stage_one(scene, build_orbit_oracle(scene));
  const StageTwoResult s2 = run_stage_two(scene, s1, build_sim_oracle(scene));

  // Zero velocity and zero gravity: the guide frames are identical.
  const Latent& guide = s2.sim_video;
  for (int f = 1; f < guide.frames; ++f)
    for (int y = 0; y < guide.height; ++y)
      for (int x = 0; x < guide.width; ++x)
        for (int c = 0; c < guide.channels; ++c)
          REQUIRE(guide.at(f, y, x, c) == guide.at(0, y, x, c));

  // The output can only move within the SDE's own residual.
  const double floor = masked_mse(s2.phi.video, guide, s2.foreground);
  double f2f = 0.0;
  std::size_t n = 0;
  for (int f = 1; f < guide.frames; ++f)
    for (int y = 0; y < guide.height; ++y)
      for (int x = 0; x < guide.width; ++x) {
        if (!s2.foreground.at(f, y, x) || !s2.foreground.at(f - 1, y, x))
          continue;
        for (int c = 0; c < guide.channels; ++c) {
          const double d =
              s2.phi.video.at(f, y, x, c) - s2.phi.video.at(f - 1, y, x, c);
          f2f += d * d;
          ++n;
        }
      }
  REQUIRE(n > 0);
  f2f /= static_cast<double>(n);
  MESSAGE("static scene: frame-to-frame MSE = ", f2f,
          ", SDE noise floor (output vs static guide) = ", floor);
  CHECK(f2f <= 4.0 * floor + 1e-18);
}

TEST_CASE("an all-zero sim mask degenerates to generation from the noised background") {
  SceneSpec scene = static_scene();
  const VelocityOracle oracle = build_sim_oracle(scene);
  const Latent bg_frame = video_latent({render_background(scene, scene.input_pose)});
  Latent bg(scene.sim_frames, bg_frame.height, bg_frame.width, bg_frame.channels);
  for (int f = 0; f < scene.sim_frames; ++f)
    for (int y = 0; y < bg.height; ++y)
      for (int x = 0; x < bg.width; ++x)
        for (int c = 0; c < bg.channels; ++c)
          bg.at(f, y, x, c) = bg_frame.at(0, y, x, c);
  const VideoMask zero(bg.frames, bg.height, bg.width);

  SdeConfig sde = scene.sde;
  sde.stage = Stage::two;
  sde.seed = 77;
  const TimeSchedule schedule = make_schedule(scene.schedule_steps, sde.tau.value);
  const PhiCfResult res =
      run_phi_cf(bg, Condition{"input", std::nullopt}, bg, zero, oracle,
                 schedule, sde);

  // Nothing is masked, so the latent never leaves its initialization...
  REQUIRE(res.z_tau_star.data.size() == res.z_tau_init.data.size());
  for (std::size_t i = 0; i < res.z_tau_init.data.size(); ++i)
    REQUIRE(res.z_tau_star.data[i] == res.z_tau_init.data[i]);

  // ...which is exactly the noised background, and the output is the plain
  // generation from it.
  Rng rng(sde.seed);
  const Latent eps = normal_latent(bg.frames, bg.height, bg.width, bg.channels, rng);
  const Latent z_noisy = forward_noise(bg, sde.tau, eps);
  for (std::size_t i = 0; i < z_noisy.data.size(); ++i)
    REQUIRE(res.z_tau_init.data[i] == z_noisy.data[i]);
  const Latent plain =
      generate_to_data(z_noisy, Condition{"input", std::nullopt}, schedule, oracle);
  for (std::size_t i = 0; i < plain.data.size(); ++i)
    REQUIRE(res.video.data[i] == plain.data[i]);
}

TEST_CASE("the falling block adheres to its simulation, not to shuffled frames") {
  const BlockRun& run = block_run();
  const double adherence =
      masked_mse(run.s2.phi.video, run.s2.sim_video, run.s2.foreground);
  const double control = shuffled_control_mse(run.s2.phi.video, run.s2.sim_video,
                                              run.s2.foreground, 99);
  MESSAGE("adherence MSE = ", adherence, ", shuffled control = ", control);
  CHECK(adherence <= 0.5 * control);
}

TEST_CASE("run directories are complete, deterministic, and round-trip") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const std::string config_text = scene_preset_text("falling_ball");
  const fs::path base = fs::temp_directory_path() / "cgflow_pipeline_test";
  fs::remove_all(base);
  const fs::path dir_a = base / "a";
  const fs::path dir_b = base / "b";

  const PipelineResult res = run_pipeline(scene, dir_a.string(), config_text);
  (void)run_pipeline(scene, dir_b.string(), config_text);

  const char* required[] = {
      "config.txt",     "input.ppm",       "orbit_poses.txt",
      "orbit_guide.cgfl", "orbit/mask.cgfl", "trace_stage1.txt",
      "cloud_input.ply", "cloud.ply",       "particles.ply",
      "traj.cgtj",      "sim_mask.cgfl",   "final_video.cgfl",
      "trace_stage2.txt", "metrics.txt",    "manifest.txt",
  };
  for (const char* name : required) CHECK(fs::exists(dir_a / name));
  for (int f = 0; f < scene.orbit.k_frames; ++f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.ppm", f);
    CHECK(fs::exists(dir_a / "orbit" / buf));
  }
  for (int f = 0; f < scene.sim_frames; ++f) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "frame_%04d.ppm", f);
    CHECK(fs::exists(dir_a / "sim" / buf));
    CHECK(fs::exists(dir_a / "final" / buf));
  }

  // Same seed, same artifacts: the manifests hash identically.
  CHECK(sha256_hex_of_file((dir_a / "manifest.txt").string()) ==
        sha256_hex_of_file((dir_b / "manifest.txt").string()));

  // Serialized artifacts reload to what the run produced (latent files are
  // float32 on disk) and re-save byte-identically.
  const Latent final_video = load_latent((dir_a / "final_video.cgfl").string());
  REQUIRE(final_video.data.size() == res.stage2.phi.video.data.size());
  double max_diff = 0.0;
  for (std::size_t i = 0; i < final_video.data.size(); ++i)
    max_diff = std::max(
        max_diff, std::abs(final_video.data[i] - res.stage2.phi.video.data[i]));
  CHECK(max_diff <= 1e-5);
  const fs::path resaved = base / "resaved.cgfl";
  save_latent(resaved.string(), final_video);
  CHECK(sha256_hex_of_file(resaved.string()) ==
        sha256_hex_of_file((dir_a / "final_video.cgfl").string()));

  const PointTrajectories traj = load_trajectory((dir_a / "traj.cgtj").string());
  CHECK(traj.frames.size() == res.stage2.trajectory.frames.size());
  CHECK(traj.point_count() == res.stage2.trajectory.point_count());

  fs::remove_all(base);
}

TEST_CASE("a corrupt scene file fails naming the offending key") {
  const fs::path path = fs::temp_directory_path() / "cgflow_corrupt_scene.txt";
  std::ofstream(path) << "[scene]\nname = broken\n"
                         "[object.a]\nid = 1\nshape = sphere\n"
                         "center = 0 0 0.3\nradius = 0.1\ncolor = 1 0 0\n"
                         "zoom = 3\n";
  CHECK_THROWS_WITH_AS(load_scene(path.string()), Contains("zoom"), ConfigError);
  fs::remove(path);
}
