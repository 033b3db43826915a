#pragma once

// Synthetic desk-scale scenes with exact ground truth: colored primitive
// objects over a ground plane, an analytic sky/ground backdrop, a camera
// orbit, and everything needed to build the matching velocity-oracle
// datasets for the two reconstruction passes.

#include <optional>
#include <string>
#include <vector>

#include "cgflow/config.hpp"
#include "cgflow/geometry.hpp"
#include "cgflow/oracle.hpp"
#include "cgflow/render.hpp"
#include "cgflow/sde.hpp"
#include "cgflow/sim.hpp"

namespace cgflow {

struct ScenePrimitive {
  enum class Kind { box, sphere };
  Kind kind = Kind::box;
  Vec3 center = Vec3::Zero();
  Vec3 half = Vec3(0.1, 0.1, 0.1);  // box half extents
  double radius = 0.1;              // sphere radius
  Mat3 rotation = Mat3::Identity();  // box orientation (world from local)
  Vec3 color = Vec3(0.8, 0.3, 0.2);
};

// One simulated body. Several primitives under the same object id form a
// composite that moves as one material.
struct SceneObject {
  std::string name;
  int object_id = 1;  // >= 1; id 0 is the ground
  std::vector<ScenePrimitive> parts;
  MaterialParams material;
  Vec3 v0 = Vec3::Zero();
};

// Velocity-oracle dataset shape: the exact target render keyed "input" plus
// jittered variants keyed "jitter<i>" that give the unconditional prior its
// spread.
struct DatasetSpec {
  int jitter_count = 6;
  double pose_jitter = 0.035;  // radians
  double color_jitter = 0.04;
  double condition_sigma = 0.0;  // 0 = exact key match
};

struct SceneSpec {
  std::string name = "scene";
  std::uint64_t seed = 1;

  std::vector<SceneObject> objects;
  Plane ground;  // z = 0 unless configured otherwise
  double ground_radius = 1.2;
  Vec3 ground_color = Vec3(0.45, 0.42, 0.38);
  Vec3 sky_top = Vec3(0.55, 0.65, 0.80);
  Vec3 sky_bottom = Vec3(0.85, 0.88, 0.92);

  CameraIntrinsics intrinsics;
  CameraPose input_pose;
  OrbitSpec orbit;

  SimConfig sim;
  Drivers drivers;
  int sim_frames = 24;

  SdeConfig sde;           // stage is set by the caller
  int schedule_steps = 40;

  DatasetSpec dataset;

  double surface_step = 0.02;      // ground-truth surface sampling
  double voxel_size = 0.05;        // reconstruction voxelization
  double particle_spacing = 0.025; // simulation particle lattice
  double splat_radius_px = 1.0;
  double depth_near = 0.2;         // latent depth below this reads as empty
  double ransac_thresh = 0.01;
  int ransac_iters = 256;

  void validate() const;
};

// Strict parse; every key must be recognized.
SceneSpec parse_scene(const ConfigFile& cfg);
// "preset:<name>" or a config file path.
SceneSpec load_scene(const std::string& ref);
std::vector<std::string> scene_preset_names();
std::string scene_preset_text(const std::string& name);

// Dense surface samples of every object (colors and ids filled; the ground
// is not sampled, it lives in the analytic backdrop).
PointCloud sample_object_surfaces(const SceneSpec& scene, double step);

// Per-object volumetric particle fill of a surface cloud; points with id 0
// are ignored. Result order follows ascending object id.
PointCloud sample_volume_particles(const SceneSpec& scene,
                                   const PointCloud& surfaces);

// Simulation scene from sampled particles: materials and initial velocities
// come from the owning SceneObject.
SimScene make_sim_scene(const SceneSpec& scene, const PointCloud& particles);

// Positions of trajectory state `frame` bundled with the constant colors/ids.
PointCloud trajectory_frame_cloud(const PointTrajectories& traj, int frame);

// Analytic backdrop: vertical sky gradient plus the ray-traced ground disc.
// Ground pixels carry depth and id 0; sky pixels keep +inf depth and id -1;
// the mask is left empty (nothing splatted).
RenderResult render_background(const SceneSpec& scene, const CameraPose& pose);

// Splats `cloud` over the analytic backdrop in one depth-consistent pass:
// the ground plane occludes splats behind it, uncovered pixels inherit the
// backdrop color/depth/id. The mask marks pixels a splat won.
RenderResult render_view(const SceneSpec& scene, const PointCloud& cloud,
                         const CameraPose& pose);

// Back-projects every finite-depth pixel (splats and ground alike), keeping
// colors and ids.
PointCloud unproject_view(const SceneSpec& scene, const RenderResult& view,
                          const CameraPose& pose);

// --- latent bridging --------------------------------------------------------

// Channels (r, g, b, depth); +inf depth is stored as 0 (empty sky).
Latent video_latent(const std::vector<RenderResult>& frames);
Image latent_frame_image(const Latent& video, int frame);
// Depth channel of one frame; entries below `near` become +inf (empty).
DepthMap latent_frame_depth(const Latent& video, int frame, double near);
MaskImage latent_frame_fg(const Latent& video, int frame, double near);

// --- ground truth videos and oracles -----------------------------------------

// Full-scene surfaces rendered along the orbit (K frames).
std::vector<RenderResult> ground_truth_orbit_frames(const SceneSpec& scene);

// Ground-truth simulation video: sampled particles simulated for sim_frames
// advances, states 1..L rendered from the input pose. Optionally returns the
// trajectory itself.
std::vector<RenderResult> ground_truth_sim_frames(
    const SceneSpec& scene, PointTrajectories* traj_out = nullptr);

// Empirical oracles over the ground-truth video ("input") and jittered
// variants ("jitter<i>"), per DatasetSpec.
VelocityOracle build_orbit_oracle(const SceneSpec& scene);
VelocityOracle build_sim_oracle(const SceneSpec& scene);

}  // namespace cgflow
