#pragma once

// Analytic scene drivers: a cosine strike trajectory for a kinematic
// end-effector, a tangential vortex acceleration about the z axis, steam
// particle modifiers (height-scaled lateral jitter, upper-air damping,
// recycle teleport), and a periodic wind impulse.

#include "cgflow/cloth.hpp"
#include "cgflow/mpm.hpp"
#include "cgflow/rng.hpp"

namespace cgflow {

// z(t) = z0 + h - (h + d) * (1 - cos(2 pi n t)) / 2: starts at z0 + h,
// bottoms out at z0 - d every half period of the frequency n.
double strike_z(double t, double z0, double h, double d, double n);

// Tangential acceleration about the z axis through the origin:
// c * exp(-r / 0.20) * sin(omega t) * (-sin th, cos th, 0) with (r, th) the
// cylindrical coordinates of pos. r = 0 uses th = 0.
Vec3 vortex_force(const Vec3& pos, double t, double c, double omega);

struct SteamParams {
  double jitter_per_height = 0.02;  // lateral velocity noise stddev per meter
  double damp_z = 0.7;              // height above which v_z is damped
  double damp_factor = 0.9;
  bool recycle = true;
  double recycle_z = 0.85;  // teleport height
  Vec3 source_center = Vec3(0.0, 0.0, 0.05);
  double source_radius = 0.05;
};

// Applies, in order: lateral velocity jitter with stddev
// jitter_per_height * max(z, 0); v_z *= damp_factor above damp_z; particles
// above recycle_z teleport back near the source with zero velocity.
void steam_modifiers(ParticleSet& p, double t, const SteamParams& cfg, Rng& rng);

struct WindParams {
  double amplitude = 0.5;  // m/s
  int period_frames = 8;   // impulse cadence
  int cycle_frames = 64;   // full sinusoid period, in frames
  Vec3 direction = Vec3(1.0, 0.0, 0.0);
};

// On frames where frame_index % period_frames == 0, adds
// amplitude * sin(2 pi frame_index / cycle_frames) * direction to every
// velocity (the cloth overload skips pinned particles). Other frames are a
// no-op.
void wind_impulse(ParticleSet& p, int frame_index, const WindParams& w);
void wind_impulse(ClothState& c, int frame_index, const WindParams& w);

}  // namespace cgflow
