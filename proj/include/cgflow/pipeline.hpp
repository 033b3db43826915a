#pragma once

// The two-pass reconstruction: a single input view is lifted to a point
// cloud, completed into a full orbit video (pass one), then filled with
// particles, simulated, and re-rendered into the final video with the
// background pinned to the static backdrop (pass two).

#include <string>
#include <vector>

#include "cgflow/metrics.hpp"
#include "cgflow/scene.hpp"

namespace cgflow {

struct StageOneResult {
  RenderResult input_view;
  PointCloud input_cloud;  // unprojected input view, exact ids
  std::vector<CameraPose> orbit_poses;
  Latent guide_video;   // the input cloud re-rendered along the orbit
  VideoMask observed;   // pixels the re-rendered splats cover
  PhiCfResult phi;      // completed orbit video
  // Input points plus every foreground pixel of the generated frames,
  // back-projected with the generated depth; ids transferred from the
  // nearest input point.
  PointCloud completed_cloud;
  double surface_coverage = 0.0;  // vs. the exact object surfaces
};

struct StageTwoResult {
  Plane fitted_ground;  // consensus plane over reconstructed ground points
  double ground_fit_rms = 0.0;
  std::size_t ground_inliers = 0;
  PointCloud particles;  // volumetric fill of the completed objects
  PointTrajectories trajectory;
  Latent sim_video;      // simulation re-rendered from the input pose
  VideoMask foreground;  // pixels the simulated objects cover
  Latent background_video;
  PhiCfResult phi;  // final video
};

struct PipelineResult {
  StageOneResult stage1;
  StageTwoResult stage2;
};

// The oracle plays the role of the pretrained video prior; run_pipeline feeds
// build_orbit_oracle / build_sim_oracle, tests may pass anything else.
StageOneResult run_stage_one(const SceneSpec& scene,
                             const VelocityOracle& oracle);
StageTwoResult run_stage_two(const SceneSpec& scene, const StageOneResult& s1,
                             const VelocityOracle& oracle);

// Both passes. A nonempty out_dir receives every artifact (frames, clouds,
// trajectory, traces, metrics.txt) plus manifest.txt listing the sha-256 of
// each file; config_text, when nonempty, is stored as config.txt.
PipelineResult run_pipeline(const SceneSpec& scene,
                            const std::string& out_dir = "",
                            const std::string& config_text = "");

std::string sha256_hex_of_file(const std::string& path);

}  // namespace cgflow
