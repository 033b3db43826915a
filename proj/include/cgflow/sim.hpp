#pragma once

// Frame-level simulation driver: advances MPM particle bodies and XPBD
// cloths together under a shared clock and driver set, and records the
// point trajectories that downstream rendering consumes.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cgflow/cloth.hpp"
#include "cgflow/drivers.hpp"
#include "cgflow/mpm.hpp"

namespace cgflow {

struct ClothItem {
  ClothState cloth;
  Vec3 color = Vec3(0.8, 0.8, 0.8);
  int object_id = 0;
};

// Kinematic sphere following the strike trajectory along a vertical axis.
struct StrikeDriver {
  double x = 0.0, y = 0.0;  // horizontal position of the strike axis
  double z0 = 0.0;          // rest height of the struck surface
  double h = 0.3;           // hover height above z0
  double d = 0.05;          // indentation depth below z0
  double n_hz = 1.0;        // strike frequency
  double radius = 0.05;
};

struct VortexDriver {
  double strength = 1.0;
  double omega = 1.0;  // rad/s
};

struct Drivers {
  std::vector<ForceField> fields;
  std::optional<VortexDriver> vortex;
  std::optional<SteamParams> steam;
  std::optional<StrikeDriver> strike;
  std::optional<WindParams> wind;  // applied to cloths each frame
  std::uint64_t seed = 0;          // steam jitter stream
};

struct SimScene {
  ParticleSet particles;
  std::vector<Vec3> particle_colors;      // per particle, entries in [0, 1]
  std::vector<int> particle_object_ids;   // per particle, in [0, 65535]
  std::vector<ClothItem> cloths;

  std::size_t point_count() const;
  void validate() const;
};

struct PointTrajectories {
  std::vector<std::vector<Vec3>> frames;  // n_frames + 1 states, index 0 initial
  std::vector<Vec3> colors;               // constant across frames
  std::vector<int> object_ids;
  std::vector<double> kinetic_energy;     // parallel to frames (empty when loaded)

  std::size_t point_count() const { return colors.size(); }
};

// Runs n_frames frame advances and returns the state after each, plus the
// initial state. Frame i applies, in order: steam modifiers, the MPM step
// (with force fields and the strike collider), then per cloth the wind
// impulse and the XPBD step.
PointTrajectories simulate(const SimScene& scene, const SimConfig& cfg,
                           const Drivers& drivers, int n_frames);

// Binary trajectory container: magic "CGTJ", u32 version, u32 frame count,
// u32 point count, then per frame point records of 3x f32 position,
// 3x u8 color, u16 object id (little-endian).
void save_trajectory(const std::string& path, const PointTrajectories& traj);
PointTrajectories load_trajectory(const std::string& path);

}  // namespace cgflow
