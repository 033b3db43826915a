#include "cgflow/metrics.hpp"

#include <array>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>
#include <sstream>

namespace cgflow {

namespace {

constexpr double kRadToDeg = 180.0 / 3.14159265358979323846;

void require_comparable(const PoseTrajectory& a, const PoseTrajectory& b) {
  if (a.size() != b.size())
    throw ConfigError(cat("pose trajectory length mismatch: ", a.size(),
                          " vs ", b.size()));
  if (a.size() < 2)
    throw ConfigError("pose trajectories need at least 2 poses");
}

// Relative translations T_0^-1 T_i expressed in the frame-0 camera frame,
// scaled by the trajectory's largest relative-translation norm (or left as
// zeros when the trajectory never moves).
std::vector<Vec3> normalized_relative_translations(const PoseTrajectory& t) {
  std::vector<Vec3> rel(t.size() - 1);
  double max_norm = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    rel[i - 1] = t.poses[0].R.transpose() * (t.poses[i].t - t.poses[0].t);
    max_norm = std::max(max_norm, rel[i - 1].norm());
  }
  if (max_norm > 0.0)
    for (Vec3& v : rel) v /= max_norm;
  return rel;
}

}  // namespace

double rot_err(const PoseTrajectory& a, const PoseTrajectory& b) {
  require_comparable(a, b);
  double sum = 0.0;
  for (std::size_t i = 1; i < a.size(); ++i) {
    const Mat3 rel_a = a.poses[0].R.transpose() * a.poses[i].R;
    const Mat3 rel_b = b.poses[0].R.transpose() * b.poses[i].R;
    sum += rotation_angle(rel_a, rel_b) * kRadToDeg;
  }
  return sum / static_cast<double>(a.size() - 1);
}

double trans_err(const PoseTrajectory& a, const PoseTrajectory& b) {
  require_comparable(a, b);
  const std::vector<Vec3> rel_a = normalized_relative_translations(a);
  const std::vector<Vec3> rel_b = normalized_relative_translations(b);
  double sum = 0.0;
  for (std::size_t i = 0; i < rel_a.size(); ++i)
    sum += (rel_a[i] - rel_b[i]).norm();
  return sum / static_cast<double>(rel_a.size());
}

double masked_mse(const Latent& a, const Latent& b, const VideoMask& m) {
  require_same_shape(a, b, "masked_mse");
  if (!m.compatible_with(a))
    throw ConfigError(cat("mask shape (", m.frames, ", ", m.height, ", ",
                          m.width, ") does not match video ", a.shape_str()));
  double sum = 0.0;
  std::size_t count = 0;
  for (int f = 0; f < a.frames; ++f)
    for (int y = 0; y < a.height; ++y)
      for (int x = 0; x < a.width; ++x) {
        if (!m.at(f, y, x)) continue;
        for (int c = 0; c < a.channels; ++c) {
          const double d = a.at(f, y, x, c) - b.at(f, y, x, c);
          sum += d * d;
        }
        count += static_cast<std::size_t>(a.channels);
      }
  if (count == 0) throw ConfigError("masked_mse: mask selects no pixels");
  return sum / static_cast<double>(count);
}

MomentReport moment_check(const std::vector<std::vector<double>>& samples,
                          const std::vector<double>& target_mean,
                          const std::vector<double>& target_var,
                          double tol) {
  if (samples.size() < 1000)
    throw ConfigError(cat("moment_check needs at least 1000 samples, got ",
                          samples.size()));
  const std::size_t dim = target_mean.size();
  if (dim == 0 || target_var.size() != dim)
    throw ConfigError(cat("moment_check target dims mismatch: mean ", dim,
                          ", var ", target_var.size()));
  if (!(tol > 0.0)) throw ConfigError("moment_check tol must be positive");
  for (std::size_t d = 0; d < dim; ++d)
    if (!is_finite(target_mean[d]) || !is_finite(target_var[d]) ||
        target_var[d] <= 0.0)
      throw ConfigError("moment_check targets must be finite with positive variance");

  const double n = static_cast<double>(samples.size());
  std::vector<double> mean(dim, 0.0), var(dim, 0.0);
  for (const std::vector<double>& s : samples) {
    if (s.size() != dim)
      throw ConfigError(cat("moment_check sample dim ", s.size(),
                            " does not match target dim ", dim));
    for (std::size_t d = 0; d < dim; ++d) {
      if (!is_finite(s[d])) throw NumericError("moment_check: non-finite sample");
      mean[d] += s[d];
    }
  }
  for (std::size_t d = 0; d < dim; ++d) mean[d] /= n;
  for (const std::vector<double>& s : samples)
    for (std::size_t d = 0; d < dim; ++d) {
      const double c = s[d] - mean[d];
      var[d] += c * c;
    }
  for (std::size_t d = 0; d < dim; ++d) var[d] /= (n - 1.0);

  MomentReport report;
  report.tol = tol;
  report.mean_dev.resize(dim);
  report.var_dev.resize(dim);
  for (std::size_t d = 0; d < dim; ++d) {
    const double mean_scale = std::max(std::abs(target_mean[d]), 1e-12);
    report.mean_dev[d] = std::abs(mean[d] - target_mean[d]) / mean_scale;
    report.var_dev[d] = std::abs(var[d] - target_var[d]) / target_var[d];
    report.max_mean_dev = std::max(report.max_mean_dev, report.mean_dev[d]);
    report.max_var_dev = std::max(report.max_var_dev, report.var_dev[d]);
  }
  report.pass = report.max_mean_dev <= tol && report.max_var_dev <= tol;
  return report;
}

std::string MomentReport::to_text() const {
  std::ostringstream out;
  out << "dim  mean_dev  var_dev\n";
  for (std::size_t d = 0; d < mean_dev.size(); ++d)
    out << d << "  " << std::setprecision(6) << mean_dev[d] << "  "
        << var_dev[d] << "\n";
  out << "max_mean_dev=" << std::setprecision(17) << max_mean_dev << "\n";
  out << "max_var_dev=" << max_var_dev << "\n";
  out << "tol=" << tol << "\n";
  out << "pass=" << (pass ? 1 : 0) << "\n";
  return out.str();
}

double voxel_coverage(const PointCloud& ground_truth, const PointCloud& recon,
                      double voxel_size) {
  if (!(voxel_size > 0.0))
    throw ConfigError(cat("voxel_coverage: voxel size ", voxel_size,
                          " must be positive"));
  if (ground_truth.size() == 0)
    throw ConfigError("voxel_coverage: empty ground-truth cloud");
  auto key = [voxel_size](const Vec3& p) {
    return std::array<long long, 3>{
        static_cast<long long>(std::floor(p.x() / voxel_size)),
        static_cast<long long>(std::floor(p.y() / voxel_size)),
        static_cast<long long>(std::floor(p.z() / voxel_size))};
  };
  std::set<std::array<long long, 3>> gt_voxels, recon_voxels;
  for (const Vec3& p : ground_truth.positions) gt_voxels.insert(key(p));
  for (const Vec3& p : recon.positions) recon_voxels.insert(key(p));
  std::size_t covered = 0;
  for (const auto& v : gt_voxels) covered += recon_voxels.count(v);
  return static_cast<double>(covered) / static_cast<double>(gt_voxels.size());
}

void save_pose_trajectory(const std::string& path, const PoseTrajectory& traj) {
  if (traj.poses.empty())
    throw ConfigError("refusing to save an empty pose trajectory");
  std::ofstream out(path);
  if (!out) throw ConfigError(cat("cannot open ", path, " for writing"));
  out << std::setprecision(17);
  for (const CameraPose& pose : traj.poses) {
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) out << pose.R(r, c) << " ";
    out << pose.t.x() << " " << pose.t.y() << " " << pose.t.z() << "\n";
  }
  if (!out) throw ConfigError(cat("short write to ", path));
}

PoseTrajectory load_pose_trajectory(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(cat("cannot open ", path));
  PoseTrajectory traj;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream row(line);
    double v[12];
    for (int i = 0; i < 12; ++i)
      if (!(row >> v[i]))
        throw ConfigError(cat(path, ":", line_no, ": expected 12 floats per pose"));
    std::string extra;
    if (row >> extra)
      throw ConfigError(cat(path, ":", line_no, ": trailing tokens after 12 floats"));
    CameraPose pose;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) pose.R(r, c) = v[3 * r + c];
    pose.t = Vec3(v[9], v[10], v[11]);
    pose.validate();
    traj.poses.push_back(pose);
  }
  if (traj.poses.empty()) throw ConfigError(cat(path, ": no poses found"));
  return traj;
}

}  // namespace cgflow
