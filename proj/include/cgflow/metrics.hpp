#pragma once

#include <string>
#include <vector>

#include "cgflow/geometry.hpp"
#include "cgflow/latent.hpp"

namespace cgflow {

// Ordered camera poses, compared through relative motion anchored at the
// first pose so that a global rigid re-anchoring of either trajectory does
// not change any error below.
struct PoseTrajectory {
  std::vector<CameraPose> poses;

  std::size_t size() const { return poses.size(); }
};

// Mean geodesic angle, in degrees, between the frame-0-relative rotations of
// the two trajectories. Zero iff the trajectories differ only by a fixed
// world transform.
double rot_err(const PoseTrajectory& a, const PoseTrajectory& b);

// Mean L2 distance between frame-0-relative translations after each
// trajectory is scaled by its own largest relative-translation norm. A
// trajectory that never moves compares as all-zero vectors.
double trans_err(const PoseTrajectory& a, const PoseTrajectory& b);

// Mean squared difference over masked pixels (all channels of a masked pixel
// count). The mask must select at least one pixel.
double masked_mse(const Latent& a, const Latent& b, const VideoMask& m);

struct MomentReport {
  std::vector<double> mean_dev;  // per-dimension relative deviations
  std::vector<double> var_dev;
  double max_mean_dev = 0.0;
  double max_var_dev = 0.0;
  double tol = 0.0;
  bool pass = false;

  // Text table followed by a machine-readable key=value block.
  std::string to_text() const;
};

// Compares empirical first and second moments of a sample set against a
// diagonal Gaussian target. Each sample is one flattened vector; at least
// 1000 samples are required for the variance estimate to be meaningful.
MomentReport moment_check(const std::vector<std::vector<double>>& samples,
                          const std::vector<double>& target_mean,
                          const std::vector<double>& target_var,
                          double tol);

// Fraction of voxels occupied by ground-truth points that contain at least
// one reconstructed point. Voxels are axis-aligned cubes of size `voxel_size`
// anchored at the origin.
double voxel_coverage(const PointCloud& ground_truth, const PointCloud& recon,
                      double voxel_size);

// Text format: one pose per line, 12 floats (row-major rotation, then the
// camera center).
void save_pose_trajectory(const std::string& path, const PoseTrajectory& traj);
PoseTrajectory load_pose_trajectory(const std::string& path);

}  // namespace cgflow
