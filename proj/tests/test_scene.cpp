#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cgflow/config.hpp"
#include "cgflow/scene.hpp"

using namespace cgflow;
using doctest::Approx;
using doctest::Contains;

TEST_CASE("config exposes typed values with fallbacks") {
  const ConfigFile cfg = ConfigFile::parse_string(
      "# comment\n"
      "[run]\n"
      "name = demo\n"
      "scale = 2.5\n"
      "steps = 40\n"
      "seed = 12345678901\n"
      "fancy = true\n"
      "origin = 1 -2 0.5\n");
  CHECK(cfg.get_string("run", "name") == "demo");
  CHECK(cfg.get_string("run", "missing", "dflt") == "dflt");
  CHECK(cfg.get_double("run", "scale") == 2.5);
  CHECK(cfg.get_double("run", "missing", 7.0) == 7.0);
  CHECK(cfg.get_int("run", "steps") == 40);
  CHECK(cfg.get_int("run", "missing", -3) == -3);
  CHECK(cfg.get_u64("run", "seed", 0) == 12345678901ULL);
  CHECK(cfg.get_bool("run", "fancy", false));
  CHECK(cfg.get_bool("run", "missing", true));
  const std::vector<double> v = cfg.get_doubles("run", "origin", 3);
  CHECK(v[0] == 1.0);
  CHECK(v[1] == -2.0);
  CHECK(v[2] == 0.5);
  CHECK(cfg.has_section("run"));
  CHECK_FALSE(cfg.has_section("nope"));
  CHECK(cfg.has("run", "name"));
  CHECK_FALSE(cfg.has("run", "nope"));
  cfg.require_all_consumed();
}

TEST_CASE("config parser rejects malformed input with line numbers") {
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a\n"),
                       Contains("1: unterminated section"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[bad name]\n"),
                       Contains("bad section name"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nx = 1\n[a]\n"),
                       Contains("3: duplicate section [a]"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nnonsense\n"),
                       Contains("2: expected 'key = value'"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nbad key! = 1\n"),
                       Contains("bad key"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nx =\n"),
                       Contains("empty value for key 'x'"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("x = 1\n"),
                       Contains("before any [section]"), ConfigError);
  CHECK_THROWS_WITH_AS(ConfigFile::parse_string("[a]\nx = 1\nx = 2\n"),
                       Contains("3: duplicate key 'x'"), ConfigError);
}

TEST_CASE("config getters validate their conversions") {
  const ConfigFile cfg = ConfigFile::parse_string(
      "[a]\nfrac = 2.5\njunk = 1.0x\nflag = yes\ntriple = 1 2\n");
  CHECK_THROWS_WITH_AS(cfg.get_int("a", "frac"), Contains("integer"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_double("a", "junk"), Contains("trailing"),
                       ConfigError);
  CHECK_THROWS_AS(cfg.get_bool("a", "flag", false), ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_doubles("a", "triple", 3), Contains("expects 3"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(cfg.get_string("a", "absent"),
                       Contains("missing required key 'absent'"), ConfigError);
}

TEST_CASE("config overrides rewrite values and canonical text is stable") {
  ConfigFile cfg = ConfigFile::parse_string("[a]\nx = 1\ny = 2\n");
  cfg.set_dotted("a.x=10");
  cfg.set_dotted("b.z=3");
  CHECK(cfg.get_int("a", "x") == 10);
  CHECK(cfg.get_int("b", "z") == 3);
  CHECK_THROWS_WITH_AS(cfg.set_dotted("ax=10"), Contains("section.key=value"),
                       ConfigError);

  const std::string canon = cfg.canonical_text();
  const ConfigFile again = ConfigFile::parse_string(canon);
  CHECK(again.canonical_text() == canon);
}

TEST_CASE("unread keys are reported after parsing") {
  const ConfigFile cfg = ConfigFile::parse_string("[a]\nx = 1\ntypo_key = 2\n");
  (void)cfg.get_int("a", "x");
  CHECK_THROWS_WITH_AS(cfg.require_all_consumed(),
                       Contains("unknown key 'typo_key'"), ConfigError);
  (void)cfg.get_int("a", "typo_key");
  cfg.require_all_consumed();
}

TEST_CASE("scene presets load and validate") {
  for (const std::string& name : scene_preset_names()) {
    const SceneSpec scene = load_scene(cat("preset:", name));
    CHECK(scene.name == name);
    CHECK(scene.objects.size() == 1);
    CHECK(scene.objects[0].object_id == 1);
    CHECK(scene.orbit.k_frames >= 2);
    CHECK(scene.intrinsics.width == 32);
    CHECK(scene.sim_frames >= 2);
    // Input view defaults to the first orbit pose.
    const CameraPose first = orbit_trajectory(scene.orbit).front();
    CHECK((scene.input_pose.R - first.R).norm() == 0.0);
    CHECK((scene.input_pose.t - first.t).norm() == 0.0);
  }
  CHECK_THROWS_WITH_AS(load_scene("preset:nope"),
                       Contains("unknown scene preset"), ConfigError);
}

TEST_CASE("scene parsing is strict about sections and keys") {
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.a]\nid = 1\nshape = sphere\ncenter = 0 0 0.3\n"
          "radius = 0.1\ncolor = 1 0 0\n[weird]\nx = 1\n")),
      Contains("unknown section [weird]"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.a]\nid = 1\nshape = sphere\ncenter = 0 0 0.3\n"
          "radius = 0.1\ncolor = 1 0 0\n[camera]\nzoom = 2\n")),
      Contains("unknown key 'zoom'"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.a]\nid = 1\nshape = cone\ncenter = 0 0 0.3\n"
          "radius = 0.1\ncolor = 1 0 0\n")),
      Contains("shape must be box or sphere"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.a]\nid = 1\nshape = sphere\ncenter = 0 0 0.3\n"
          "radius = 0.1\ncolor = 1 0 0\nmaterial = jelly\n")),
      Contains("material must be elastic or snow"), ConfigError);
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.a]\nid = 1\nshape = sphere\ncenter = 0 0 0.3\n"
          "radius = 0.1\ncolor = 1 0 0\nrotate_deg = 10 0 0\n")),
      Contains("rotate_deg only applies to boxes"), ConfigError);
  CHECK_THROWS_WITH_AS(parse_scene(ConfigFile::parse_string("[scene]\nseed = 3\n")),
                       Contains("no objects"), ConfigError);
}

TEST_CASE("composite objects merge parts under one id") {
  const SceneSpec scene = parse_scene(ConfigFile::parse_string(
      "[object.body]\nid = 1\nshape = box\ncenter = 0 0 0.3\n"
      "half = 0.1 0.1 0.1\ncolor = 0.2 0.4 0.8\nvelocity = 0 0 -1\n"
      "[object.cap]\nid = 1\nshape = sphere\ncenter = 0 0 0.45\n"
      "radius = 0.08\ncolor = 0.8 0.4 0.2\n"));
  REQUIRE(scene.objects.size() == 1);
  CHECK(scene.objects[0].parts.size() == 2);
  CHECK(scene.objects[0].v0.z() == -1.0);

  // Material keys may only appear on the first part of an id.
  CHECK_THROWS_WITH_AS(
      parse_scene(ConfigFile::parse_string(
          "[object.body]\nid = 1\nshape = box\ncenter = 0 0 0.3\n"
          "half = 0.1 0.1 0.1\ncolor = 0.2 0.4 0.8\n"
          "[object.cap]\nid = 1\nshape = sphere\ncenter = 0 0 0.45\n"
          "radius = 0.08\ncolor = 0.8 0.4 0.2\nmaterial = snow\n")),
      Contains("belongs to the first section"), ConfigError);
}

TEST_CASE("surface sampling covers primitives at the requested density") {
  const SceneSpec ball = load_scene("preset:falling_ball");
  const PointCloud sphere_cloud = sample_object_surfaces(ball, 0.02);
  // Fibonacci count: ceil(4 pi 0.12^2 / 0.02^2) = 453.
  CHECK(sphere_cloud.size() == 453);
  const Vec3 c = ball.objects[0].parts[0].center;
  for (const Vec3& p : sphere_cloud.positions)
    CHECK((p - c).norm() == Approx(0.12).epsilon(1e-12));
  for (int id : sphere_cloud.object_ids) CHECK(id == 1);

  const SceneSpec block = load_scene("preset:falling_block");
  const PointCloud box_cloud = sample_object_surfaces(block, 0.02);
  // 11^2 ticks per axis pair: 2*121 + 2*11*9 + 2*9*9 = 602 lattice points.
  CHECK(box_cloud.size() == 602);
  // The preset block is rotated; points lie on faces in its local frame.
  const ScenePrimitive& prim = block.objects[0].parts[0];
  for (const Vec3& p : box_cloud.positions) {
    const Vec3 d = (prim.rotation.transpose() * (p - prim.center)).cwiseAbs();
    CHECK(d.maxCoeff() == Approx(0.1).epsilon(1e-12));  // on some face
    CHECK(d.maxCoeff() <= 0.1 + 1e-9);
  }
}

TEST_CASE("volume fill and simulation scene carry scene materials") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  const PointCloud particles = sample_volume_particles(scene, surfaces);
  CHECK(particles.size() > 100);
  // The fill voxelizes the surface cloud first, so particles can overshoot
  // the exact surface by up to one voxel diagonal.
  const Vec3 c = scene.objects[0].parts[0].center;
  const double overshoot = scene.voxel_size * std::sqrt(3.0);
  for (const Vec3& p : particles.positions)
    CHECK((p - c).norm() <= 0.12 + overshoot);

  const SimScene sim = make_sim_scene(scene, particles);
  CHECK(sim.particles.materials.size() == 1);
  CHECK(sim.point_count() == particles.size());
  const double mass = 40.0 * std::pow(scene.particle_spacing, 3);
  for (double m : sim.particles.masses) CHECK(m == Approx(mass).epsilon(1e-12));
  for (const Vec3& v : sim.particles.velocities)
    CHECK((v - scene.objects[0].v0).norm() == 0.0);
}

TEST_CASE("analytic backdrop gives sky above the horizon and ground on the plane") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const CameraPose pose = scene.input_pose;
  const RenderResult bg = render_background(scene, pose);
  CHECK(bg.mask.count() == 0);

  // Top row: sky gradient start, no geometry.
  CHECK(bg.frame.at(0, 0, 0) == Approx(scene.sky_top.x()));
  CHECK(bg.ids.at(0, 0) == -1);
  CHECK(std::isinf(bg.depth.at(0, 0)));

  // Every ground pixel back-projects onto the plane z = 0.
  int ground_pixels = 0;
  for (int y = 0; y < bg.depth.height; ++y)
    for (int x = 0; x < bg.depth.width; ++x) {
      if (!std::isfinite(bg.depth.at(y, x))) continue;
      ++ground_pixels;
      CHECK(bg.ids.at(y, x) == 0);
      const Vec3 dir((x - scene.intrinsics.cx) / scene.intrinsics.fx,
                     (y - scene.intrinsics.cy) / scene.intrinsics.fy, 1.0);
      const Vec3 world = pose.to_world(bg.depth.at(y, x) * dir);
      CHECK(std::abs(world.z()) < 1e-9);
      CHECK(world.head<2>().norm() <= scene.ground_radius + 1e-9);
    }
  CHECK(ground_pixels > 50);
}

TEST_CASE("the ground plane occludes splats behind it") {
  SceneSpec scene = load_scene("preset:falling_ball");

  PointCloud buried;
  buried.positions = {Vec3(0, 0, -0.3)};
  buried.colors = {Vec3(1, 1, 0)};
  buried.object_ids = {1};
  const RenderResult hidden = render_view(scene, buried, scene.input_pose);
  CHECK(hidden.mask.count() == 0);

  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  const RenderResult visible = render_view(scene, surfaces, scene.input_pose);
  CHECK(visible.mask.count() > 10);
  int object_ids_seen = 0;
  for (int y = 0; y < visible.ids.height; ++y)
    for (int x = 0; x < visible.ids.width; ++x) {
      if (visible.mask.at(y, x)) {
        CHECK(visible.ids.at(y, x) == 1);
        ++object_ids_seen;
      }
    }
  CHECK(object_ids_seen == static_cast<int>(visible.mask.count()));
}

TEST_CASE("unprojecting a rendered view lands on scene geometry") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  const RenderResult view = render_view(scene, surfaces, scene.input_pose);
  const PointCloud back = unproject_view(scene, view, scene.input_pose);
  CHECK(back.size() > 100);

  const Vec3 c = scene.objects[0].parts[0].center;
  int object_points = 0;
  for (std::size_t i = 0; i < back.size(); ++i) {
    if (back.object_ids[i] == 0) {
      CHECK(std::abs(back.positions[i].z()) < 1e-9);  // exact plane hit
    } else {
      ++object_points;
      // A splat disc smears depth over ~1 px, so allow the lateral error of
      // one pixel at the viewing distance.
      CHECK(std::abs((back.positions[i] - c).norm() - 0.12) < 0.06);
    }
  }
  CHECK(object_points > 10);
}

TEST_CASE("video latents store colors plus depth with empty sky as zero") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const RenderResult view = render_view(
      scene, sample_object_surfaces(scene, scene.surface_step), scene.input_pose);
  const Latent video = video_latent({view, view});
  CHECK(video.frames == 2);
  CHECK(video.channels == 4);
  CHECK(video.at(0, 0, 0, 3) == 0.0);  // sky pixel

  const Image img = latent_frame_image(video, 0);
  const DepthMap depth = latent_frame_depth(video, 0, scene.depth_near);
  const MaskImage fg = latent_frame_fg(video, 0, scene.depth_near);
  int finite = 0;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      for (int ch = 0; ch < 3; ++ch)
        CHECK(img.at(y, x, ch) == view.frame.at(y, x, ch));
      const double d0 = view.depth.at(y, x);
      if (std::isfinite(d0)) {
        ++finite;
        CHECK(depth.at(y, x) == d0);
        CHECK(fg.at(y, x) == 1);
      } else {
        CHECK(std::isinf(depth.at(y, x)));
        CHECK(fg.at(y, x) == 0);
      }
    }
  CHECK(finite > 50);
  CHECK_THROWS_AS(latent_frame_image(video, 2), ConfigError);
  CHECK_THROWS_AS(video_latent({}), ConfigError);
}

TEST_CASE("ground-truth videos are deterministic and non-static") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const std::vector<RenderResult> orbit = ground_truth_orbit_frames(scene);
  CHECK(static_cast<int>(orbit.size()) == scene.orbit.k_frames);
  for (const RenderResult& rr : orbit) CHECK(rr.mask.count() > 0);

  PointTrajectories traj;
  const std::vector<RenderResult> sim = ground_truth_sim_frames(scene, &traj);
  CHECK(static_cast<int>(sim.size()) == scene.sim_frames);
  CHECK(traj.frames.size() == static_cast<std::size_t>(scene.sim_frames) + 1);
  for (const RenderResult& rr : sim) CHECK(rr.mask.count() > 0);

  // The ball moves: first and last frames differ on many pixels.
  const Latent a = video_latent({sim.front()});
  const Latent b = video_latent({sim.back()});
  double diff = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    diff = std::max(diff, std::abs(a.data[i] - b.data[i]));
  CHECK(diff > 0.05);

  const std::vector<RenderResult> sim2 = ground_truth_sim_frames(scene);
  const Latent b2 = video_latent({sim2.back()});
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(b.data[i] == b2.data[i]);
}

TEST_CASE("oracle datasets key the exact video as input plus jitters") {
  const SceneSpec scene = load_scene("preset:falling_ball");
  const VelocityOracle oracle = build_orbit_oracle(scene);
  REQUIRE(oracle.samples().size() ==
          static_cast<std::size_t>(1 + scene.dataset.jitter_count));
  CHECK(oracle.samples()[0].condition_key == "input");
  for (int j = 0; j < scene.dataset.jitter_count; ++j)
    CHECK(oracle.samples()[j + 1].condition_key == cat("jitter", j));

  // Jitters actually differ from the target.
  const Latent& x0 = oracle.samples()[0].sample;
  for (int j = 1; j <= scene.dataset.jitter_count; ++j) {
    double diff = 0.0;
    for (std::size_t i = 0; i < x0.size(); ++i)
      diff = std::max(diff,
                      std::abs(x0.data[i] - oracle.samples()[j].sample.data[i]));
    CHECK(diff > 1e-3);
  }

  // Exact-key conditioning collapses the posterior onto the target sample,
  // so the velocity is (x0 - z)/t for any state.
  Latent z = x0;
  for (std::size_t i = 0; i < z.size(); ++i)
    z.data[i] += 0.1 * std::sin(0.37 * static_cast<double>(i));
  const TimePoint t(0.63);
  const Condition cond{"input", std::nullopt};
  const Latent v = oracle.velocity(z, t, cond);
  for (std::size_t i = 0; i < v.size(); ++i)
    CHECK(v.data[i] == Approx((x0.data[i] - z.data[i]) / t.value).epsilon(1e-12));

  // Rebuilding the dataset reproduces it bitwise.
  const VelocityOracle oracle2 = build_orbit_oracle(scene);
  for (std::size_t s = 0; s < oracle.samples().size(); ++s)
    for (std::size_t i = 0; i < oracle.samples()[s].sample.size(); ++i)
      CHECK(oracle.samples()[s].sample.data[i] ==
            oracle2.samples()[s].sample.data[i]);
}

TEST_CASE("simulation oracle renders the trajectory under jittered cameras") {
  SceneSpec scene = load_scene("preset:falling_block");
  scene.dataset.jitter_count = 2;  // keep the test quick
  const VelocityOracle oracle = build_sim_oracle(scene);
  REQUIRE(oracle.samples().size() == 3);
  for (const OracleSample& s : oracle.samples()) {
    CHECK(s.sample.frames == scene.sim_frames);
    CHECK(s.sample.channels == 4);
  }
  const Latent& x0 = oracle.samples()[0].sample;
  const Latent& x1 = oracle.samples()[1].sample;
  double diff = 0.0;
  for (std::size_t i = 0; i < x0.size(); ++i)
    diff = std::max(diff, std::abs(x0.data[i] - x1.data[i]));
  CHECK(diff > 1e-3);
}
