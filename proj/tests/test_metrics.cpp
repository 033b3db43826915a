#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "cgflow/metrics.hpp"
#include "cgflow/rng.hpp"

using namespace cgflow;
namespace fs = std::filesystem;

namespace {

constexpr double kPi = 3.14159265358979323846;

fs::path test_dir() {
  const fs::path dir = fs::temp_directory_path() / "cgflow_metrics_test";
  fs::create_directories(dir);
  return dir;
}

PoseTrajectory sample_orbit(int k) {
  OrbitSpec spec;
  spec.center = Vec3(0.1, -0.2, 0.3);
  spec.radius = 1.5;
  spec.elevation = 0.4;
  spec.k_frames = k;
  return PoseTrajectory{orbit_trajectory(spec)};
}

Mat3 yaw(double degrees) {
  return Eigen::AngleAxisd(degrees * kPi / 180.0, Vec3::UnitZ())
      .toRotationMatrix();
}

}  // namespace

TEST_CASE("pose errors vanish on identical trajectories") {
  const PoseTrajectory a = sample_orbit(8);
  CHECK(rot_err(a, a) == 0.0);
  CHECK(trans_err(a, a) == 0.0);
}

TEST_CASE("pose errors ignore a global rigid re-anchoring") {
  const PoseTrajectory a = sample_orbit(8);
  const Mat3 r_fix =
      (Eigen::AngleAxisd(0.7, Vec3(1, 2, 3).normalized())).toRotationMatrix();
  const Vec3 t_fix(4.0, -1.0, 2.5);
  PoseTrajectory b = a;
  for (CameraPose& pose : b.poses) {
    pose.R = r_fix * pose.R;
    pose.t = r_fix * pose.t + t_fix;
  }
  CHECK(rot_err(a, b) < 1e-6);  // degrees; rounding from the re-anchoring
  CHECK(trans_err(a, b) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(rot_err(a, b) == rot_err(b, a));
}

TEST_CASE("a constant extra yaw on every relative pose reads back exactly") {
  const PoseTrajectory a = sample_orbit(12);
  PoseTrajectory b = a;
  for (std::size_t i = 1; i < b.poses.size(); ++i)
    b.poses[i].R = b.poses[i].R * yaw(10.0);
  CHECK(rot_err(a, b) == doctest::Approx(10.0).epsilon(1e-9));
  CHECK(std::abs(rot_err(a, b) - 10.0) < 1e-6);
}

TEST_CASE("translation error is scale invariant and catches direction error") {
  const PoseTrajectory a = sample_orbit(8);
  PoseTrajectory b = a;
  for (CameraPose& pose : b.poses) pose.t *= 3.0;
  CHECK(trans_err(a, b) == doctest::Approx(0.0).epsilon(1e-12));

  // Two-pose trajectories moving along orthogonal unit directions disagree by
  // sqrt(2) after per-trajectory normalization.
  PoseTrajectory u, v;
  u.poses.resize(2);
  v.poses.resize(2);
  u.poses[1].t = Vec3(1, 0, 0);
  v.poses[1].t = Vec3(0, 1, 0);
  CHECK(trans_err(u, v) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));

  // A static trajectory compares through zero vectors, not a 0/0.
  PoseTrajectory still;
  still.poses.resize(2);
  CHECK(trans_err(still, still) == 0.0);
  CHECK(trans_err(still, u) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("pose errors reject unusable inputs") {
  const PoseTrajectory a = sample_orbit(8);
  PoseTrajectory b = sample_orbit(9);
  CHECK_THROWS_AS(static_cast<void>(rot_err(a, b)), ConfigError);
  CHECK_THROWS_AS(static_cast<void>(trans_err(a, b)), ConfigError);
  PoseTrajectory single;
  single.poses.resize(1);
  CHECK_THROWS_AS(static_cast<void>(rot_err(single, single)), ConfigError);
}

TEST_CASE("masked mse averages over masked pixels only") {
  Latent a(2, 3, 4, 2);
  Rng rng(7);
  for (double& v : a.data) v = rng.normal();
  Latent b = a;
  VideoMask m(2, 3, 4, 1);
  CHECK(masked_mse(a, b, m) == 0.0);

  for (double& v : b.data) v += 1.0;
  CHECK(masked_mse(a, b, m) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(masked_mse(a, b, m) == masked_mse(b, a, m));

  // Differences confined to unmasked pixels are invisible.
  VideoMask half(2, 3, 4, 0);
  for (int f = 0; f < 2; ++f)
    for (int y = 0; y < 3; ++y)
      for (int x = 0; x < 2; ++x) half.at(f, y, x) = 1;
  Latent c = a;
  for (int f = 0; f < 2; ++f)
    for (int y = 0; y < 3; ++y)
      for (int x = 2; x < 4; ++x)
        for (int ch = 0; ch < 2; ++ch) c.at(f, y, x, ch) += 9.0;
  CHECK(masked_mse(a, c, half) == 0.0);

  VideoMask empty(2, 3, 4, 0);
  CHECK_THROWS_AS(static_cast<void>(masked_mse(a, b, empty)), ConfigError);
  VideoMask wrong(1, 3, 4, 1);
  CHECK_THROWS_AS(static_cast<void>(masked_mse(a, b, wrong)), ConfigError);
  Latent d(2, 3, 4, 1);
  CHECK_THROWS_AS(static_cast<void>(masked_mse(a, d, m)), ConfigError);
}

TEST_CASE("moment check accepts samples drawn from the target") {
  const std::vector<double> mean = {1.0, -2.0, 0.5};
  const std::vector<double> var = {1.0, 0.25, 4.0};
  Rng rng(1234);
  std::vector<std::vector<double>> samples(20000);
  for (auto& s : samples) {
    s.resize(3);
    for (int d = 0; d < 3; ++d)
      s[d] = mean[d] + std::sqrt(var[d]) * rng.normal();
  }
  const MomentReport report = moment_check(samples, mean, var, 0.05);
  CHECK(report.pass);
  CHECK(report.max_mean_dev < 0.05);
  CHECK(report.max_var_dev < 0.05);
  CHECK(report.to_text().find("pass=1") != std::string::npos);

  // A 10-sigma mean shift cannot pass.
  for (auto& s : samples) s[0] += 10.0;
  const MomentReport shifted = moment_check(samples, mean, var, 0.05);
  CHECK_FALSE(shifted.pass);
  CHECK(shifted.max_mean_dev > 1.0);
  CHECK(shifted.to_text().find("pass=0") != std::string::npos);
}

TEST_CASE("moment check validates its inputs") {
  std::vector<std::vector<double>> few(10, std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(few, {0.0, 0.0}, {1.0, 1.0}, 0.05)),
      ConfigError);

  std::vector<std::vector<double>> samples(1500, std::vector<double>(2, 0.0));
  CHECK_THROWS_AS(static_cast<void>(moment_check(samples, {}, {}, 0.05)),
                  ConfigError);
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(samples, {0.0, 0.0}, {1.0}, 0.05)),
      ConfigError);
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(samples, {0.0}, {1.0}, 0.05)),
      ConfigError);
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(samples, {0.0, 0.0}, {1.0, 0.0}, 0.05)),
      ConfigError);
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(samples, {0.0, 0.0}, {1.0, 1.0}, 0.0)),
      ConfigError);

  samples[3][1] = std::nan("");
  CHECK_THROWS_AS(
      static_cast<void>(moment_check(samples, {0.0, 0.0}, {1.0, 1.0}, 0.05)),
      NumericError);
}

TEST_CASE("voxel coverage counts ground-truth voxels hit by the recon") {
  PointCloud gt;
  for (int i = 0; i < 10; ++i) {
    gt.positions.push_back(Vec3(0.05 + 0.1 * i, 0.05, 0.05));
    gt.colors.push_back(Vec3(1, 1, 1));
    gt.object_ids.push_back(1);
  }
  CHECK(voxel_coverage(gt, gt, 0.1) == 1.0);

  // Cover 7 of the 10 voxels; stray recon points elsewhere do not help.
  PointCloud recon;
  for (int i = 0; i < 7; ++i) {
    recon.positions.push_back(Vec3(0.08 + 0.1 * i, 0.01, 0.09));
    recon.colors.push_back(Vec3(0, 0, 0));
    recon.object_ids.push_back(1);
  }
  recon.positions.push_back(Vec3(5.0, 5.0, 5.0));
  recon.colors.push_back(Vec3(0, 0, 0));
  recon.object_ids.push_back(1);
  CHECK(voxel_coverage(gt, recon, 0.1) == doctest::Approx(0.7).epsilon(1e-15));

  PointCloud empty;
  CHECK(voxel_coverage(gt, empty, 0.1) == 0.0);
  CHECK_THROWS_AS(static_cast<void>(voxel_coverage(empty, recon, 0.1)),
                  ConfigError);
  CHECK_THROWS_AS(static_cast<void>(voxel_coverage(gt, recon, 0.0)),
                  ConfigError);
}

TEST_CASE("pose trajectories round trip through the text format") {
  const PoseTrajectory a = sample_orbit(6);
  const fs::path path = test_dir() / "poses.txt";
  save_pose_trajectory(path.string(), a);
  const PoseTrajectory b = load_pose_trajectory(path.string());
  REQUIRE(b.size() == a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a.poses[i].R - b.poses[i].R).norm() == 0.0);
    CHECK((a.poses[i].t - b.poses[i].t).norm() == 0.0);
  }

  CHECK_THROWS_AS(static_cast<void>(load_pose_trajectory(
                      (test_dir() / "missing.txt").string())),
                  ConfigError);

  const fs::path bad = test_dir() / "bad.txt";
  std::ofstream(bad) << "1 0 0 0 1 0 0 0 1 0 0\n";  // 11 floats
  CHECK_THROWS_AS(static_cast<void>(load_pose_trajectory(bad.string())),
                  ConfigError);

  const fs::path skewed = test_dir() / "skewed.txt";
  std::ofstream(skewed) << "1 0 0 0 1 0 0 0 2 0 0 0\n";  // not a rotation
  CHECK_THROWS_AS(static_cast<void>(load_pose_trajectory(skewed.string())),
                  ConfigError);

  const fs::path empty = test_dir() / "empty.txt";
  std::ofstream(empty) << "\n";
  CHECK_THROWS_AS(static_cast<void>(load_pose_trajectory(empty.string())),
                  ConfigError);

  PoseTrajectory none;
  CHECK_THROWS_AS(save_pose_trajectory((test_dir() / "x.txt").string(), none),
                  ConfigError);
}
