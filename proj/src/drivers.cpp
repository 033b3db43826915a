#include "cgflow/drivers.hpp"

#include <cmath>

namespace cgflow {

double strike_z(double t, double z0, double h, double d, double n) {
  const double s = 0.5 * (1.0 - std::cos(2.0 * M_PI * n * t));
  return z0 + h - (h + d) * s;
}

Vec3 vortex_force(const Vec3& pos, double t, double c, double omega) {
  const double r = std::hypot(pos.x(), pos.y());
  const double th = std::atan2(pos.y(), pos.x());  // r = 0 gives th = 0
  const double mag = c * std::exp(-r / 0.20) * std::sin(omega * t);
  return mag * Vec3(-std::sin(th), std::cos(th), 0.0);
}

void steam_modifiers(ParticleSet& p, double /*t*/, const SteamParams& cfg,
                     Rng& rng) {
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double z = p.positions[i].z();
    const double sigma = cfg.jitter_per_height * std::max(z, 0.0);
    p.velocities[i].x() += sigma * rng.normal();
    p.velocities[i].y() += sigma * rng.normal();
    if (z > cfg.damp_z) p.velocities[i].z() *= cfg.damp_factor;
    if (cfg.recycle && z > cfg.recycle_z) {
      p.positions[i] = cfg.source_center +
                       Vec3(rng.uniform(-cfg.source_radius, cfg.source_radius),
                            rng.uniform(-cfg.source_radius, cfg.source_radius),
                            rng.uniform(0.0, cfg.source_radius));
      p.velocities[i] = Vec3::Zero();
      p.C[i] = Mat3::Zero();
      p.F[i] = Mat3::Identity();
    }
  }
}

namespace {

Vec3 wind_increment(int frame_index, const WindParams& w) {
  if (w.period_frames < 1)
    throw ConfigError(cat("wind period must be >= 1 frame, got ", w.period_frames));
  if (w.cycle_frames < 1)
    throw ConfigError(cat("wind cycle must be >= 1 frame, got ", w.cycle_frames));
  if (frame_index % w.period_frames != 0) return Vec3::Zero();
  return w.amplitude * std::sin(2.0 * M_PI * frame_index / w.cycle_frames) *
         w.direction;
}

}  // namespace

void wind_impulse(ParticleSet& p, int frame_index, const WindParams& w) {
  const Vec3 dv = wind_increment(frame_index, w);
  if (dv.isZero()) return;
  for (Vec3& v : p.velocities) v += dv;
}

void wind_impulse(ClothState& c, int frame_index, const WindParams& w) {
  const Vec3 dv = wind_increment(frame_index, w);
  if (dv.isZero()) return;
  for (std::size_t i = 0; i < c.size(); ++i)
    if (c.inv_mass[i] > 0.0) c.velocities[i] += dv;
}

}  // namespace cgflow
