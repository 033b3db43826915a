#include "cgflow/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <sstream>

#include "cgflow/rng.hpp"

namespace cgflow {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0))
    throw ConfigError(cat("focal lengths must be positive, got fx = ", fx,
                          ", fy = ", fy));
  if (width <= 0 || height <= 0)
    throw ConfigError(cat("image size must be positive, got ", width, "x", height));
  if (!is_finite(cx) || !is_finite(cy))
    throw ConfigError("principal point must be finite");
}

void CameraPose::validate() const {
  const Mat3 should_be_identity = R.transpose() * R;
  if ((should_be_identity - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9)
    throw ConfigError("camera rotation is not orthonormal");
  if (std::fabs(R.determinant() - 1.0) > 1e-9)
    throw ConfigError("camera rotation must have determinant +1");
  if (!t.allFinite()) throw ConfigError("camera position must be finite");
}

CameraPose look_at(const Vec3& eye, const Vec3& center, const Vec3& up) {
  const Vec3 forward = center - eye;
  if (forward.norm() < 1e-12)
    throw ConfigError("look_at: eye and center coincide");
  const Vec3 z = forward.normalized();
  const Vec3 xr = z.cross(up);
  if (xr.norm() < 1e-9)
    throw ConfigError("look_at: view direction parallel to up vector");
  const Vec3 x = xr.normalized();
  const Vec3 y = z.cross(x);
  CameraPose pose;
  pose.R.col(0) = x;
  pose.R.col(1) = y;
  pose.R.col(2) = z;
  pose.t = eye;
  pose.validate();
  return pose;
}

void OrbitSpec::validate() const {
  if (!(radius > 0.0)) throw ConfigError(cat("orbit radius must be positive, got ", radius));
  if (k_frames < 1) throw ConfigError(cat("orbit needs >= 1 frame, got ", k_frames));
  const double lim = M_PI / 2 - 1e-6;
  if (!(elevation > -lim && elevation < lim))
    throw ConfigError(cat("orbit elevation ", elevation,
                          " rad too close to the pole for a z-up look-at"));
  if (!center.allFinite() || !is_finite(start_azimuth))
    throw ConfigError("orbit center and start azimuth must be finite");
}

std::vector<CameraPose> orbit_trajectory(const OrbitSpec& spec) {
  spec.validate();
  std::vector<CameraPose> poses;
  poses.reserve(spec.k_frames);
  const double ce = std::cos(spec.elevation), se = std::sin(spec.elevation);
  for (int i = 0; i < spec.k_frames; ++i) {
    const double az = spec.start_azimuth + 2.0 * M_PI * i / spec.k_frames;
    const Vec3 eye = spec.center + spec.radius * Vec3(std::cos(az) * ce,
                                                      std::sin(az) * ce, se);
    poses.push_back(look_at(eye, spec.center));
  }
  return poses;
}

void PointCloud::validate() const {
  if (colors.size() != positions.size() || object_ids.size() != positions.size())
    throw ConfigError(cat("point cloud arrays disagree: ", positions.size(),
                          " positions, ", colors.size(), " colors, ",
                          object_ids.size(), " ids"));
  for (std::size_t i = 0; i < positions.size(); ++i) {
    if (!positions[i].allFinite())
      throw NumericError(cat("non-finite point at index ", i));
    for (int c = 0; c < 3; ++c)
      if (!(colors[i][c] >= 0.0 && colors[i][c] <= 1.0))
        throw ConfigError(cat("color out of [0, 1] at index ", i));
    if (object_ids[i] < 0)
      throw ConfigError(cat("negative object id at index ", i));
  }
}

void PointCloud::append(const PointCloud& other) {
  positions.insert(positions.end(), other.positions.begin(), other.positions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
  object_ids.insert(object_ids.end(), other.object_ids.begin(), other.object_ids.end());
}

void Plane::canonicalize() {
  const double n = normal.norm();
  if (n < 1e-12) throw NumericError("degenerate plane normal");
  normal /= n;
  offset /= n;
  double lead = normal.z();
  if (std::fabs(lead) < 1e-12) lead = normal.x();
  if (std::fabs(lead) < 1e-12) lead = normal.y();
  if (lead < 0.0) {
    normal = -normal;
    offset = -offset;
  }
}

PointCloud unproject(const DepthMap& depth, const CameraIntrinsics& intr,
                     const CameraPose& pose, const Image& colors,
                     const MaskImage& fg_mask, const IdImage* ids) {
  intr.validate();
  pose.validate();
  if (depth.height != intr.height || depth.width != intr.width)
    throw ConfigError("unproject: depth map size does not match intrinsics");
  if (colors.height != intr.height || colors.width != intr.width)
    throw ConfigError("unproject: color image size does not match intrinsics");
  if (fg_mask.height != intr.height || fg_mask.width != intr.width)
    throw ConfigError("unproject: mask size does not match intrinsics");
  if (ids && (ids->height != intr.height || ids->width != intr.width))
    throw ConfigError("unproject: id image size does not match intrinsics");

  PointCloud cloud;
  for (int y = 0; y < intr.height; ++y) {
    for (int x = 0; x < intr.width; ++x) {
      if (!fg_mask.at(y, x)) continue;
      const double d = depth.at(y, x);
      if (!std::isfinite(d) || !(d > 0.0))
        throw NumericError(cat("masked pixel (", x, ", ", y,
                               ") lacks a positive finite depth"));
      const Vec3 p_cam(d * (x - intr.cx) / intr.fx, d * (y - intr.cy) / intr.fy, d);
      cloud.positions.push_back(pose.to_world(p_cam));
      cloud.colors.push_back(Vec3(std::clamp(colors.at(y, x, 0), 0.0, 1.0),
                                  std::clamp(colors.at(y, x, 1), 0.0, 1.0),
                                  std::clamp(colors.at(y, x, 2), 0.0, 1.0)));
      cloud.object_ids.push_back(ids ? std::max(0, ids->at(y, x)) : 0);
    }
  }
  return cloud;
}

RansacResult ransac_plane(const PointCloud& cloud, int n_iters, double thresh,
                          std::uint64_t seed) {
  cloud.validate();
  const std::size_t n = cloud.size();
  if (n < 3) throw ConfigError(cat("plane fit needs >= 3 points, got ", n));
  if (n_iters < 1 || !(thresh > 0.0))
    throw ConfigError("ransac needs n_iters >= 1 and thresh > 0");

  Rng rng(seed);
  std::size_t best_count = 0;
  Plane best_plane;
  bool found = false;
  for (int it = 0; it < n_iters; ++it) {
    std::size_t ia = rng.uniform_index(n);
    std::size_t ib = rng.uniform_index(n);
    std::size_t ic = rng.uniform_index(n);
    if (ia == ib || ib == ic || ia == ic) continue;
    const Vec3& a = cloud.positions[ia];
    const Vec3 ab = cloud.positions[ib] - a;
    const Vec3 ac = cloud.positions[ic] - a;
    const Vec3 nrm = ab.cross(ac);
    const double scale = std::max(ab.norm(), ac.norm());
    if (nrm.norm() < 1e-12 * std::max(1.0, scale * scale)) continue;  // collinear
    Plane p;
    p.normal = nrm;
    p.offset = nrm.dot(a);
    p.canonicalize();
    std::size_t count = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (std::fabs(p.signed_distance(cloud.positions[i])) <= thresh) ++count;
    if (count > best_count) {
      best_count = count;
      best_plane = p;
      found = true;
    }
  }
  if (!found)
    throw NumericError("all ransac hypotheses were degenerate");

  // Least-squares refit on the consensus set.
  std::vector<int> support;
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(best_plane.signed_distance(cloud.positions[i])) <= thresh)
      support.push_back(static_cast<int>(i));
  Vec3 centroid = Vec3::Zero();
  for (int i : support) centroid += cloud.positions[i];
  centroid /= static_cast<double>(support.size());
  Mat3 scatter = Mat3::Zero();
  for (int i : support) {
    const Vec3 d = cloud.positions[i] - centroid;
    scatter += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Mat3> eig(scatter);
  Plane refit;
  refit.normal = eig.eigenvectors().col(0);  // smallest eigenvalue
  refit.offset = refit.normal.dot(centroid);
  refit.canonicalize();

  RansacResult res;
  res.plane = refit;
  for (std::size_t i = 0; i < n; ++i)
    if (std::fabs(refit.signed_distance(cloud.positions[i])) <= thresh)
      res.inliers.push_back(static_cast<int>(i));
  return res;
}

namespace {

struct VoxelGrid {
  Vec3 origin;
  double size = 0.0;
  std::array<int, 3> dims{1, 1, 1};

  std::array<int, 3> index_of(const Vec3& p) const {
    std::array<int, 3> idx;
    for (int a = 0; a < 3; ++a) {
      int i = static_cast<int>(std::floor((p[a] - origin[a]) / size));
      idx[a] = std::clamp(i, 0, dims[a] - 1);
    }
    return idx;
  }
  std::size_t flat(const std::array<int, 3>& i) const {
    return (static_cast<std::size_t>(i[2]) * dims[1] + i[1]) * dims[0] + i[0];
  }
  std::size_t cell_count() const {
    return static_cast<std::size_t>(dims[0]) * dims[1] * dims[2];
  }
};

}  // namespace

PointCloud volumetric_sample(const PointCloud& cloud, double voxel_size,
                             double particle_spacing) {
  cloud.validate();
  if (cloud.size() == 0) throw ConfigError("cannot sample an empty cloud");
  if (!(voxel_size > 0.0) || !(particle_spacing > 0.0))
    throw ConfigError("voxel size and particle spacing must be positive");

  Vec3 lo = cloud.positions[0], hi = cloud.positions[0];
  for (const Vec3& p : cloud.positions) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Vec3 extent = hi - lo;
  const double max_extent = extent.maxCoeff();
  if (max_extent == 0.0) {
    // Degenerate cloud: a single location yields a single particle.
    PointCloud out;
    out.positions.push_back(cloud.positions[0]);
    out.colors.push_back(cloud.colors[0]);
    out.object_ids.push_back(cloud.object_ids[0]);
    return out;
  }
  if (particle_spacing > max_extent)
    throw ConfigError(cat("particle spacing ", particle_spacing,
                          " exceeds cloud extent ", max_extent));

  VoxelGrid grid;
  grid.origin = lo;
  grid.size = voxel_size;
  for (int a = 0; a < 3; ++a)
    grid.dims[a] = std::max(1, static_cast<int>(std::floor(extent[a] / voxel_size)) + 1);

  std::vector<std::uint8_t> occupied(grid.cell_count(), 0);
  std::vector<std::vector<int>> bucket(grid.cell_count());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const std::size_t f = grid.flat(grid.index_of(cloud.positions[i]));
    occupied[f] = 1;
    bucket[f].push_back(static_cast<int>(i));
  }

  // Scanline closure: a voxel counts as enclosed along an axis when occupied
  // voxels exist strictly before and after it on its line; the interior is
  // the intersection over the three axes.
  auto closure = [&](int axis) {
    std::vector<std::uint8_t> closed(grid.cell_count(), 0);
    std::array<int, 3> i{};
    const int a0 = axis, a1 = (axis + 1) % 3, a2 = (axis + 2) % 3;
    for (i[a1] = 0; i[a1] < grid.dims[a1]; ++i[a1])
      for (i[a2] = 0; i[a2] < grid.dims[a2]; ++i[a2]) {
        int first = -1, last = -1;
        for (i[a0] = 0; i[a0] < grid.dims[a0]; ++i[a0])
          if (occupied[grid.flat(i)]) {
            if (first < 0) first = i[a0];
            last = i[a0];
          }
        if (first < 0) continue;
        for (i[a0] = first; i[a0] <= last; ++i[a0]) closed[grid.flat(i)] = 1;
      }
    return closed;
  };
  const auto cx = closure(0), cy = closure(1), cz = closure(2);
  std::vector<std::uint8_t> solid(grid.cell_count(), 0);
  for (std::size_t i = 0; i < solid.size(); ++i)
    solid[i] = occupied[i] || (cx[i] && cy[i] && cz[i]);

  // Nearest surface point via expanding voxel rings.
  auto nearest_surface = [&](const Vec3& p) -> int {
    const auto c = grid.index_of(p);
    const int max_r = std::max({grid.dims[0], grid.dims[1], grid.dims[2]});
    int best = -1;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= max_r; ++r) {
      if (best >= 0 && static_cast<double>(r - 1) * voxel_size >
                           std::sqrt(best_d2))
        break;
      std::array<int, 3> i{};
      for (i[0] = std::max(0, c[0] - r); i[0] <= std::min(grid.dims[0] - 1, c[0] + r); ++i[0])
        for (i[1] = std::max(0, c[1] - r); i[1] <= std::min(grid.dims[1] - 1, c[1] + r); ++i[1])
          for (i[2] = std::max(0, c[2] - r); i[2] <= std::min(grid.dims[2] - 1, c[2] + r); ++i[2]) {
            const int ring = std::max({std::abs(i[0] - c[0]), std::abs(i[1] - c[1]),
                                       std::abs(i[2] - c[2])});
            if (ring != r) continue;
            for (int idx : bucket[grid.flat(i)]) {
              const double d2 = (cloud.positions[idx] - p).squaredNorm();
              if (d2 < best_d2) {
                best_d2 = d2;
                best = idx;
              }
            }
          }
    }
    return best;
  };

  // Particle lattice centered half a spacing inside the bounds; axes thinner
  // than one spacing collapse to the axis midpoint.
  std::array<std::vector<double>, 3> ticks;
  for (int a = 0; a < 3; ++a) {
    for (double x = lo[a] + 0.5 * particle_spacing; x <= hi[a] + 1e-12;
         x += particle_spacing)
      ticks[a].push_back(x);
    if (ticks[a].empty()) ticks[a].push_back(0.5 * (lo[a] + hi[a]));
  }

  PointCloud out;
  for (double z : ticks[2])
    for (double y : ticks[1])
      for (double x : ticks[0]) {
        const Vec3 p(x, y, z);
        if (!solid[grid.flat(grid.index_of(p))]) continue;
        const int src = nearest_surface(p);
        out.positions.push_back(p);
        out.colors.push_back(cloud.colors[src]);
        out.object_ids.push_back(cloud.object_ids[src]);
      }
  return out;
}

VideoMask stack_masks(const std::vector<MaskImage>& masks) {
  if (masks.empty()) throw ConfigError("cannot stack zero masks");
  const int h = masks[0].height, w = masks[0].width;
  for (const auto& m : masks)
    if (m.height != h || m.width != w)
      throw ConfigError("stacked masks must share one size");
  VideoMask out(static_cast<int>(masks.size()), h, w);
  for (std::size_t f = 0; f < masks.size(); ++f)
    std::copy(masks[f].data.begin(), masks[f].data.end(),
              out.data.begin() + static_cast<std::ptrdiff_t>(f) * h * w);
  return out;
}

void save_ply(const std::string& path, const PointCloud& cloud) {
  cloud.validate();
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out << "ply\nformat ascii 1.0\n";
  out << "element vertex " << cloud.size() << "\n";
  out << "property float x\nproperty float y\nproperty float z\n";
  out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "property int object_id\nend_header\n";
  out.precision(9);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.positions[i];
    const Vec3& c = cloud.colors[i];
    out << p.x() << " " << p.y() << " " << p.z();
    for (int k = 0; k < 3; ++k)
      out << " " << std::lround(std::clamp(c[k], 0.0, 1.0) * 255.0);
    out << " " << cloud.object_ids[i] << "\n";
  }
  if (!out) throw ConfigError(cat("short write to ", path));
}

PointCloud load_ply(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(cat("cannot open ", path));
  std::string line;
  std::size_t count = 0;
  bool header_done = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    if (line == "end_header") {
      header_done = true;
      break;
    }
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "element") {
      std::string what;
      ls >> what >> count;
      if (what != "vertex") throw ConfigError(cat(path, ": only vertex elements supported"));
    } else if (tok == "property") {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    }
  }
  if (!header_done) throw ConfigError(cat(path, ": missing end_header"));
  const std::vector<std::string> want = {"x", "y", "z", "red", "green", "blue", "object_id"};
  if (props != want)
    throw ConfigError(cat(path, ": unexpected vertex properties"));
  PointCloud cloud;
  cloud.positions.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    if (!std::getline(in, line))
      throw ConfigError(cat(path, ": truncated at vertex ", i));
    std::istringstream ls(line);
    double x, y, z;
    int r, g, b, id;
    if (!(ls >> x >> y >> z >> r >> g >> b >> id))
      throw ConfigError(cat(path, ": malformed vertex ", i));
    cloud.positions.emplace_back(x, y, z);
    cloud.colors.emplace_back(r / 255.0, g / 255.0, b / 255.0);
    cloud.object_ids.push_back(id);
  }
  cloud.validate();
  return cloud;
}

double rotation_angle(const Mat3& a, const Mat3& b) {
  // acos of a trace that rounds 1 ulp below 3 reads as ~3e-8 rad; identical
  // matrices are exactly zero apart.
  if (a == b) return 0.0;
  const Mat3 rel = a.transpose() * b;
  const double c = std::clamp((rel.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

}  // namespace cgflow
