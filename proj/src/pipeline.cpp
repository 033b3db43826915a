#include "cgflow/pipeline.hpp"

#include <openssl/evp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>

#include "cgflow/latent_io.hpp"

namespace fs = std::filesystem;

namespace cgflow {

namespace {

PointCloud filter_by_id(const PointCloud& cloud, bool ground) {
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if ((cloud.object_ids[i] == 0) != ground) continue;
    out.positions.push_back(cloud.positions[i]);
    out.colors.push_back(cloud.colors[i]);
    out.object_ids.push_back(cloud.object_ids[i]);
  }
  return out;
}

// Nearest-neighbor label transfer from the exactly-labeled input points.
// A point farther than `max_dist` from every reference point keeps id 0:
// labels only propagate locally, stray depths never inherit an object id.
void transfer_ids(const PointCloud& reference, PointCloud& cloud,
                  double max_dist) {
  const double cap = max_dist * max_dist;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    double best = cap;
    int id = 0;
    for (std::size_t j = 0; j < reference.size(); ++j) {
      const double d = (cloud.positions[i] - reference.positions[j]).squaredNorm();
      if (d < best) {
        best = d;
        id = reference.object_ids[j];
      }
    }
    cloud.object_ids[i] = id;
  }
}

// Farthest a genuine surface point can sit from the visible part of its
// object: the object diameter, plus slack for depth fuzz.
double label_transfer_radius(const SceneSpec& scene) {
  double diam = 0.0;
  for (const SceneObject& obj : scene.objects)
    for (const ScenePrimitive& prim : obj.parts)
      diam = std::max(diam, prim.kind == ScenePrimitive::Kind::sphere
                                ? 2.0 * prim.radius
                                : 2.0 * prim.half.norm());
  return diam + 2.0 * scene.voxel_size;
}

// Points whose depth is not meaningfully nearer than the analytic backdrop
// are background, never object candidates.
constexpr double kBackgroundDepthMargin = 0.05;

}  // namespace

StageOneResult run_stage_one(const SceneSpec& scene,
                             const VelocityOracle& oracle) {
  StageOneResult r;
  const PointCloud gt_surfaces = sample_object_surfaces(scene, scene.surface_step);
  r.input_view = render_view(scene, gt_surfaces, scene.input_pose);
  r.input_cloud = unproject_view(scene, r.input_view, scene.input_pose);
  r.orbit_poses = orbit_trajectory(scene.orbit);

  std::vector<RenderResult> partial;
  std::vector<MaskImage> masks;
  partial.reserve(r.orbit_poses.size());
  for (const CameraPose& pose : r.orbit_poses) {
    RenderResult rr = render_view(scene, r.input_cloud, pose);
    masks.push_back(rr.mask);
    partial.push_back(std::move(rr));
  }
  r.guide_video = video_latent(partial);
  r.observed = stack_masks(masks);

  const TimeSchedule schedule =
      make_schedule(scene.schedule_steps, scene.sde.tau.value);
  SdeConfig sde = scene.sde;
  sde.stage = Stage::one;
  sde.seed = scene.seed ^ 0x57A6E001ULL;
  r.phi = run_phi_cf(r.guide_video, Condition{"input", std::nullopt},
                     std::nullopt, r.observed, oracle, schedule, sde);

  r.completed_cloud = r.input_cloud;
  const PointCloud input_objects = filter_by_id(r.input_cloud, false);
  const double label_radius = label_transfer_radius(scene);
  for (int f = 0; f < r.phi.video.frames; ++f) {
    const Image colors = latent_frame_image(r.phi.video, f);
    const DepthMap depth = latent_frame_depth(r.phi.video, f, scene.depth_near);
    const RenderResult bg = render_background(scene, r.orbit_poses[f]);
    MaskImage fg(depth.width, depth.height);
    MaskImage ground(depth.width, depth.height);
    for (int y = 0; y < depth.height; ++y)
      for (int x = 0; x < depth.width; ++x) {
        const double d = depth.at(y, x);
        if (!std::isfinite(d)) continue;
        const double bgd = bg.depth.at(y, x);
        if (!std::isfinite(bgd) || d < bgd - kBackgroundDepthMargin)
          fg.at(y, x) = 1;
        else if (bg.ids.at(y, x) == 0)
          ground.at(y, x) = 1;
      }
    PointCloud pts =
        unproject(depth, scene.intrinsics, r.orbit_poses[f], colors, fg);
    transfer_ids(input_objects, pts, label_radius);
    r.completed_cloud.append(pts);
    r.completed_cloud.append(
        unproject(depth, scene.intrinsics, r.orbit_poses[f], colors, ground));
  }

  r.surface_coverage = voxel_coverage(
      gt_surfaces, filter_by_id(r.completed_cloud, false), scene.voxel_size);
  return r;
}

StageTwoResult run_stage_two(const SceneSpec& scene, const StageOneResult& s1,
                             const VelocityOracle& oracle) {
  StageTwoResult r;
  SimConfig sim_cfg = scene.sim;
  if (sim_cfg.ground.has_value()) {
    const PointCloud ground_pts = filter_by_id(s1.completed_cloud, true);
    if (ground_pts.size() < 3)
      throw NumericError(cat("only ", ground_pts.size(),
                             " reconstructed ground points; cannot fit the "
                             "ground plane"));
    const RansacResult fit =
        ransac_plane(ground_pts, scene.ransac_iters, scene.ransac_thresh,
                     scene.seed ^ 0x6F17D3ULL);
    r.fitted_ground = fit.plane;
    r.ground_inliers = fit.inliers.size();
    double sq = 0.0;
    for (int idx : fit.inliers) {
      const double d = fit.plane.signed_distance(ground_pts.positions[idx]);
      sq += d * d;
    }
    r.ground_fit_rms = std::sqrt(sq / static_cast<double>(fit.inliers.size()));
    sim_cfg.ground = r.fitted_ground;
  } else {
    r.fitted_ground = scene.ground;
  }

  r.particles = sample_volume_particles(scene, s1.completed_cloud);
  const SimScene sim = make_sim_scene(scene, r.particles);
  r.trajectory = simulate(sim, sim_cfg, scene.drivers, scene.sim_frames);

  std::vector<RenderResult> frames;
  std::vector<MaskImage> masks;
  for (int f = 1; f < static_cast<int>(r.trajectory.frames.size()); ++f) {
    RenderResult rr = render_view(
        scene, trajectory_frame_cloud(r.trajectory, f), scene.input_pose);
    masks.push_back(rr.mask);
    frames.push_back(std::move(rr));
  }
  r.sim_video = video_latent(frames);
  r.foreground = stack_masks(masks);

  const RenderResult bg = render_background(scene, scene.input_pose);
  r.background_video = video_latent(
      std::vector<RenderResult>(frames.size(), bg));

  const TimeSchedule schedule =
      make_schedule(scene.schedule_steps, scene.sde.tau.value);
  SdeConfig sde = scene.sde;
  sde.stage = Stage::two;
  sde.seed = scene.seed ^ 0x57A6E002ULL;
  r.phi = run_phi_cf(r.sim_video, Condition{"input", std::nullopt},
                     r.background_video, r.foreground, oracle, schedule, sde);
  return r;
}

// --- artifacts -----------------------------------------------------------------

std::string sha256_hex_of_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(cat("cannot open ", path, " for hashing"));
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (ctx == nullptr) throw NumericError("digest context allocation failed");
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  char buf[1 << 16];
  while (in.read(buf, sizeof buf), in.gcount() > 0)
    EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int n = 0;
  EVP_DigestFinal_ex(ctx, md, &n);
  EVP_MD_CTX_free(ctx);
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < n; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 0xF]);
  }
  return out;
}

namespace {

std::string frame_name(const std::string& stem, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "frame_%04d.ppm", i);
  return cat(stem, "/", buf);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out << text;
}

void write_frames(const fs::path& dir, const std::string& stem,
                  const Latent& video, std::vector<std::string>& names) {
  for (int f = 0; f < video.frames; ++f) {
    const std::string rel = frame_name(stem, f);
    save_ppm((dir / rel).string(), latent_frame_image(video, f));
    names.push_back(rel);
  }
}

void write_run_dir(const SceneSpec& scene, const PipelineResult& res,
                   const std::string& out_dir, const std::string& config_text) {
  const fs::path dir(out_dir);
  fs::create_directories(dir / "orbit");
  fs::create_directories(dir / "sim");
  fs::create_directories(dir / "final");

  std::vector<std::string> names;
  auto put = [&](const std::string& rel) { names.push_back(rel); };

  if (!config_text.empty()) {
    write_text((dir / "config.txt").string(), config_text);
    put("config.txt");
  }

  const StageOneResult& s1 = res.stage1;
  const StageTwoResult& s2 = res.stage2;

  save_ppm((dir / "input.ppm").string(), s1.input_view.frame);
  put("input.ppm");
  PoseTrajectory orbit_poses;
  orbit_poses.poses = s1.orbit_poses;
  save_pose_trajectory((dir / "orbit_poses.txt").string(), orbit_poses);
  put("orbit_poses.txt");
  save_latent((dir / "orbit_guide.cgfl").string(), s1.guide_video);
  put("orbit_guide.cgfl");
  save_mask((dir / "orbit/mask.cgfl").string(), s1.observed);
  put("orbit/mask.cgfl");
  write_frames(dir, "orbit", s1.phi.video, names);
  write_trace((dir / "trace_stage1.txt").string(), s1.phi.trace);
  put("trace_stage1.txt");
  save_ply((dir / "cloud_input.ply").string(), s1.input_cloud);
  put("cloud_input.ply");
  save_ply((dir / "cloud.ply").string(), s1.completed_cloud);
  put("cloud.ply");

  save_ply((dir / "particles.ply").string(), s2.particles);
  put("particles.ply");
  save_trajectory((dir / "traj.cgtj").string(), s2.trajectory);
  put("traj.cgtj");
  write_frames(dir, "sim", s2.sim_video, names);
  save_mask((dir / "sim_mask.cgfl").string(), s2.foreground);
  put("sim_mask.cgfl");
  write_frames(dir, "final", s2.phi.video, names);
  save_latent((dir / "final_video.cgfl").string(), s2.phi.video);
  put("final_video.cgfl");
  write_trace((dir / "trace_stage2.txt").string(), s2.phi.trace);
  put("trace_stage2.txt");

  const NormTraceReport n1 = latent_norm_trace(s1.phi.trace);
  const NormTraceReport n2 = latent_norm_trace(s2.phi.trace);
  std::size_t observed_on = 0;
  for (std::uint8_t m : s1.observed.data) observed_on += m;
  const double observed_frac =
      static_cast<double>(observed_on) /
      static_cast<double>(s1.observed.size());
  write_text(
      (dir / "metrics.txt").string(),
      cat("scene=", scene.name, "\n",
          "seed=", scene.seed, "\n",
          "stage1_coverage=", s1.surface_coverage, "\n",
          "stage1_observed_fraction=", observed_frac, "\n",
          "stage1_guide_mse=",
          masked_mse(s1.phi.video, s1.guide_video, s1.observed), "\n",
          "stage1_norm_max_rel_dev=", n1.max_rel_deviation, "\n",
          "stage1_diverged=", n1.diverged ? 1 : 0, "\n",
          "ground_offset=", s2.fitted_ground.offset, "\n",
          "ground_normal_z=", s2.fitted_ground.normal.z(), "\n",
          "ground_fit_rms=", s2.ground_fit_rms, "\n",
          "ground_inliers=", s2.ground_inliers, "\n",
          "particle_count=", s2.particles.size(), "\n",
          "stage2_fg_mse=",
          masked_mse(s2.phi.video, s2.sim_video, s2.foreground), "\n",
          "stage2_norm_max_rel_dev=", n2.max_rel_deviation, "\n",
          "stage2_diverged=", n2.diverged ? 1 : 0, "\n"));
  put("metrics.txt");

  std::sort(names.begin(), names.end());
  std::string manifest;
  for (const std::string& rel : names)
    manifest += cat(sha256_hex_of_file((dir / rel).string()), "  ", rel, "\n");
  write_text((dir / "manifest.txt").string(), manifest);
}

}  // namespace

PipelineResult run_pipeline(const SceneSpec& scene, const std::string& out_dir,
                            const std::string& config_text) {
  PipelineResult res;
  res.stage1 = run_stage_one(scene, build_orbit_oracle(scene));
  res.stage2 = run_stage_two(scene, res.stage1, build_sim_oracle(scene));
  if (!out_dir.empty()) write_run_dir(scene, res, out_dir, config_text);
  return res;
}

}  // namespace cgflow
