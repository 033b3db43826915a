#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "cgflow/image.hpp"
#include "cgflow/latent.hpp"

namespace cgflow {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Camera convention: right-handed camera frame with +Z forward, +X right,
// +Y down (image rows grow downward); world up is +Z. Poses are
// world-from-camera: p_world = R * p_cam + t, so t is the camera center.

struct CameraIntrinsics {
  double fx = 1.0, fy = 1.0, cx = 0.0, cy = 0.0;
  int width = 0, height = 0;

  void validate() const;
};

struct CameraPose {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  void validate() const;  // R orthonormal with det +1
  Vec3 to_camera(const Vec3& p_world) const { return R.transpose() * (p_world - t); }
  Vec3 to_world(const Vec3& p_cam) const { return R * p_cam + t; }
};

// Camera at `eye` looking at `center`; errors when the view direction is
// parallel to `up`.
CameraPose look_at(const Vec3& eye, const Vec3& center,
                   const Vec3& up = Vec3(0, 0, 1));

struct OrbitSpec {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
  double elevation = 0.0;       // radians above the horizontal plane
  double start_azimuth = 0.0;   // radians
  int k_frames = 36;

  void validate() const;
};

// Evenly spaced azimuths around the vertical axis through `center`, all
// looking at `center`. Consecutive poses differ by a rotation of exactly
// 2*pi/k about the axis.
std::vector<CameraPose> orbit_trajectory(const OrbitSpec& spec);

struct PointCloud {
  std::vector<Vec3> positions;
  std::vector<Vec3> colors;     // per point, entries in [0, 1]
  std::vector<int> object_ids;  // >= 0; 0 is background/ground by convention

  std::size_t size() const { return positions.size(); }
  void validate() const;
  void append(const PointCloud& other);
};

// Plane n . p = d with |n| = 1, canonicalized so the first nonzero component
// among (z, x, y) is positive.
struct Plane {
  Vec3 normal = Vec3(0, 0, 1);
  double offset = 0.0;

  double signed_distance(const Vec3& p) const { return normal.dot(p) - offset; }
  void canonicalize();
};

// Back-projects every masked pixel through the pinhole model:
// world = R * (depth * K^-1 [u, v, 1]^T) + t. Masked pixels must carry finite
// positive depth. `ids` is optional; without it points get object id 0.
PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& intr,
                     const CameraPose& pose, const Image& colors,
                     const MaskImage& fg_mask, const IdImage* ids = nullptr);

struct RansacResult {
  Plane plane;
  std::vector<int> inliers;  // indices into the input cloud, ascending
};

// 3-point RANSAC with least-squares refit on the winning consensus set; the
// returned inliers are re-evaluated against the refit plane. Collinear
// samples are skipped; all-degenerate draws are an error.
RansacResult ransac_plane(const PointCloud& cloud, int n_iters, double thresh,
                          std::uint64_t seed);

// Voxelizes the surface cloud, closes the interior by per-axis scanline
// containment (a voxel is interior when occupied voxels exist on both sides
// along all three axes), then emits a regular particle lattice inside the
// occupied volume. Colors and ids come from the nearest surface point.
PointCloud volumetric_sample(const PointCloud& cloud, double voxel_size,
                             double particle_spacing);

// Per-frame coverage masks stacked along the frame axis.
VideoMask stack_masks(const std::vector<MaskImage>& masks);

// ASCII PLY with uchar colors and an int object_id property per vertex.
void save_ply(const std::string& path, const PointCloud& cloud);
PointCloud load_ply(const std::string& path);

// Geodesic angle between rotations, in radians.
double rotation_angle(const Mat3& a, const Mat3& b);

}  // namespace cgflow
