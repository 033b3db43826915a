#include "cgflow/sim.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "cgflow/rng.hpp"

namespace cgflow {

std::size_t SimScene::point_count() const {
  std::size_t n = particles.size();
  for (const ClothItem& c : cloths) n += c.cloth.size();
  return n;
}

void SimScene::validate() const {
  if (particles.size() > 0) particles.validate();
  if (particle_colors.size() != particles.size() ||
      particle_object_ids.size() != particles.size())
    throw ConfigError("particle colors/object ids must match the particle count");
  for (const Vec3& c : particle_colors)
    if (!(c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0))
      throw ConfigError("particle colors must lie in [0, 1]");
  auto check_id = [](int id) {
    if (id < 0 || id > 65535)
      throw ConfigError(cat("object id ", id, " outside [0, 65535]"));
  };
  for (int id : particle_object_ids) check_id(id);
  for (const ClothItem& c : cloths) {
    c.cloth.validate();
    check_id(c.object_id);
    if (!(c.color.minCoeff() >= 0.0 && c.color.maxCoeff() <= 1.0))
      throw ConfigError("cloth color must lie in [0, 1]");
  }
  if (point_count() == 0) throw ConfigError("scene has no particles");
}

namespace {

std::vector<Vec3> gather_positions(const ParticleSet& p,
                                   const std::vector<ClothItem>& cloths) {
  std::vector<Vec3> out = p.positions;
  for (const ClothItem& c : cloths)
    out.insert(out.end(), c.cloth.positions.begin(), c.cloth.positions.end());
  return out;
}

double kinetic_energy_of(const ParticleSet& p,
                         const std::vector<ClothItem>& cloths) {
  double ke = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    ke += 0.5 * p.masses[i] * p.velocities[i].squaredNorm();
  for (const ClothItem& c : cloths)
    for (std::size_t i = 0; i < c.cloth.size(); ++i)
      if (c.cloth.inv_mass[i] > 0.0)
        ke += 0.5 / c.cloth.inv_mass[i] * c.cloth.velocities[i].squaredNorm();
  return ke;
}

}  // namespace

PointTrajectories simulate(const SimScene& scene, const SimConfig& cfg,
                           const Drivers& drivers, int n_frames) {
  scene.validate();
  cfg.validate();
  if (n_frames < 0) throw ConfigError(cat("frame count must be >= 0, got ", n_frames));

  std::vector<ForceField> fields = drivers.fields;
  if (drivers.vortex) {
    const VortexDriver v = *drivers.vortex;
    fields.push_back({[v](const Vec3& pos, double t) {
      return vortex_force(pos, t, v.strength, v.omega);
    }});
  }
  std::vector<SphereCollider> colliders;
  if (drivers.strike) {
    const StrikeDriver s = *drivers.strike;
    colliders.push_back({[s](double t) {
                           return Vec3(s.x, s.y,
                                       strike_z(t, s.z0, s.h, s.d, s.n_hz));
                         },
                         s.radius});
  }

  PointTrajectories traj;
  traj.colors = scene.particle_colors;
  traj.object_ids = scene.particle_object_ids;
  for (const ClothItem& c : scene.cloths)
    for (std::size_t i = 0; i < c.cloth.size(); ++i) {
      traj.colors.push_back(c.color);
      traj.object_ids.push_back(c.object_id);
    }

  ParticleSet particles = scene.particles;
  std::vector<ClothItem> cloths = scene.cloths;
  Rng steam_rng(drivers.seed);

  traj.frames.push_back(gather_positions(particles, cloths));
  traj.kinetic_energy.push_back(kinetic_energy_of(particles, cloths));

  double t = 0.0;
  for (int frame = 1; frame <= n_frames; ++frame) {
    if (drivers.steam && particles.size() > 0)
      steam_modifiers(particles, t, *drivers.steam, steam_rng);
    if (particles.size() > 0)
      particles = mpm_step(particles, cfg, fields, colliders, t);
    for (ClothItem& c : cloths) {
      if (drivers.wind) wind_impulse(c.cloth, frame, *drivers.wind);
      c.cloth = pbd_cloth_step(c.cloth, cfg);
    }
    t += cfg.dt;
    traj.frames.push_back(gather_positions(particles, cloths));
    traj.kinetic_energy.push_back(kinetic_energy_of(particles, cloths));
  }
  return traj;
}

namespace {

constexpr char kMagic[4] = {'C', 'G', 'T', 'J'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u16(std::string& buf, std::uint16_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_f32(std::string& buf, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(buf, bits);
}

std::uint32_t get_u32(const std::string& buf, std::size_t& pos) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i)
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
  pos += 4;
  return v;
}

std::uint16_t get_u16(const std::string& buf, std::size_t& pos) {
  const std::uint16_t v = static_cast<std::uint16_t>(
      static_cast<unsigned char>(buf[pos]) |
      (static_cast<unsigned char>(buf[pos + 1]) << 8));
  pos += 2;
  return v;
}

float get_f32(const std::string& buf, std::size_t& pos) {
  const std::uint32_t bits = get_u32(buf, pos);
  float v;
  std::memcpy(&v, &bits, 4);
  return v;
}

}  // namespace

void save_trajectory(const std::string& path, const PointTrajectories& traj) {
  const std::size_t n = traj.point_count();
  if (traj.frames.empty() || n == 0)
    throw ConfigError("trajectory must hold at least one frame and one point");
  if (traj.object_ids.size() != n)
    throw ConfigError("trajectory colors and object ids disagree");
  for (const auto& frame : traj.frames)
    if (frame.size() != n)
      throw ConfigError("trajectory frames disagree on point count");
  for (int id : traj.object_ids)
    if (id < 0 || id > 65535)
      throw ConfigError(cat("object id ", id, " outside [0, 65535]"));

  std::string buf;
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(traj.frames.size()));
  put_u32(buf, static_cast<std::uint32_t>(n));
  for (const auto& frame : traj.frames)
    for (std::size_t i = 0; i < n; ++i) {
      for (int a = 0; a < 3; ++a)
        put_f32(buf, static_cast<float>(frame[i][a]));
      for (int a = 0; a < 3; ++a)
        buf.push_back(static_cast<char>(
            std::lround(std::clamp(traj.colors[i][a], 0.0, 1.0) * 255.0)));
      put_u16(buf, static_cast<std::uint16_t>(traj.object_ids[i]));
    }

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError(cat("cannot write ", path));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ConfigError(cat("short write to ", path));
}

PointTrajectories load_trajectory(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError(cat("cannot open ", path));
  std::string buf((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  if (buf.size() < 16 || std::memcmp(buf.data(), kMagic, 4) != 0)
    throw ConfigError(cat(path, ": not a trajectory container"));
  std::size_t pos = 4;
  if (get_u32(buf, pos) != kVersion)
    throw ConfigError(cat(path, ": unsupported version"));
  const std::uint32_t n_frames = get_u32(buf, pos);
  const std::uint32_t n_points = get_u32(buf, pos);
  if (n_frames == 0 || n_points == 0)
    throw ConfigError(cat(path, ": empty trajectory"));
  const std::size_t record = 3 * 4 + 3 + 2;
  if (buf.size() != pos + static_cast<std::size_t>(n_frames) * n_points * record)
    throw ConfigError(cat(path, ": payload size mismatch"));

  PointTrajectories traj;
  traj.colors.resize(n_points);
  traj.object_ids.resize(n_points);
  traj.frames.assign(n_frames, std::vector<Vec3>(n_points));
  for (std::uint32_t f = 0; f < n_frames; ++f)
    for (std::uint32_t i = 0; i < n_points; ++i) {
      Vec3 p;
      for (int a = 0; a < 3; ++a) {
        p[a] = get_f32(buf, pos);
        if (!is_finite(p[a]))
          throw NumericError(cat(path, ": non-finite position at frame ", f));
      }
      traj.frames[f][i] = p;
      Vec3 color;
      for (int a = 0; a < 3; ++a)
        color[a] = static_cast<unsigned char>(buf[pos++]) / 255.0;
      const int id = get_u16(buf, pos);
      if (f == 0) {
        traj.colors[i] = color;
        traj.object_ids[i] = id;
      } else if (traj.object_ids[i] != id) {
        throw ConfigError(cat(path, ": object id changes at frame ", f));
      }
    }
  return traj;
}

}  // namespace cgflow
