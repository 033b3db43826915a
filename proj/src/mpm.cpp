#include "cgflow/mpm.hpp"

#include <cmath>

namespace cgflow {

void MaterialParams::validate() const {
  if (!(youngs_E > 0.0))
    throw ConfigError(cat("Young's modulus must be positive, got ", youngs_E));
  if (!(poisson_nu >= 0.0 && poisson_nu < 0.5))
    throw ConfigError(cat("Poisson ratio must lie in [0, 0.5), got ", poisson_nu));
  if (!(density_rho > 0.0))
    throw ConfigError(cat("density must be positive, got ", density_rho));
}

Lame lame_from_material(const MaterialParams& m) {
  m.validate();
  Lame l;
  l.mu = m.youngs_E / (2.0 * (1.0 + m.poisson_nu));
  l.lambda = m.youngs_E * m.poisson_nu /
             ((1.0 + m.poisson_nu) * (1.0 - 2.0 * m.poisson_nu));
  return l;
}

void ParticleSet::add_points(const std::vector<Vec3>& pts, int material,
                             double particle_mass, const Vec3& v0) {
  if (material < 0 || material >= static_cast<int>(materials.size()))
    throw ConfigError(cat("material index ", material, " out of range"));
  if (!(particle_mass > 0.0))
    throw ConfigError(cat("particle mass must be positive, got ", particle_mass));
  for (const Vec3& p : pts) {
    positions.push_back(p);
    velocities.push_back(v0);
    F.push_back(Mat3::Identity());
    C.push_back(Mat3::Zero());
    masses.push_back(particle_mass);
    material_id.push_back(material);
  }
}

void ParticleSet::validate() const {
  const std::size_t n = positions.size();
  if (velocities.size() != n || F.size() != n || C.size() != n ||
      masses.size() != n || material_id.size() != n)
    throw ConfigError("particle arrays disagree in length");
  for (const MaterialParams& m : materials) m.validate();
  for (std::size_t i = 0; i < n; ++i) {
    if (!(masses[i] > 0.0))
      throw ConfigError(cat("particle ", i, " has non-positive mass"));
    if (material_id[i] < 0 || material_id[i] >= static_cast<int>(materials.size()))
      throw ConfigError(cat("particle ", i, " has invalid material id"));
    if (materials[material_id[i]].kind == MaterialKind::elastic &&
        !(F[i].determinant() > 0.0))
      throw NumericError(cat("particle ", i, " has a non-positive volume change"));
  }
}

void SimConfig::validate() const {
  if (!(dt > 0.0)) throw ConfigError(cat("dt must be positive, got ", dt));
  if (substeps < 1) throw ConfigError(cat("substeps must be >= 1, got ", substeps));
  if (grid_res < 8) throw ConfigError(cat("grid resolution too small: ", grid_res));
  if (!(grid_dx > 0.0)) throw ConfigError(cat("grid spacing must be positive, got ", grid_dx));
  if (!gravity.allFinite() || !grid_origin.allFinite())
    throw ConfigError("gravity and grid origin must be finite");
  if (!(friction_mu >= 0.0) || !(coupling_friction >= 0.0))
    throw ConfigError("friction coefficients must be >= 0");
}

namespace {

struct Grid {
  int n = 0;  // nodes per axis
  std::vector<Vec3> momentum;  // momentum during scatter, velocity after
  std::vector<double> mass;

  void reset(int nodes) {
    n = nodes;
    momentum.assign(static_cast<std::size_t>(n) * n * n, Vec3::Zero());
    mass.assign(static_cast<std::size_t>(n) * n * n, 0.0);
  }
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * n + j) * n + k;
  }
};

// Quadratic B-spline weights for fx = x/dx - base in [0.5, 1.5].
inline void bspline_weights(const Vec3& fx, Vec3 w[3]) {
  w[0] = (0.5 * (Vec3::Constant(1.5) - fx).array().square()).matrix();
  w[1] = (0.75 - (fx - Vec3::Constant(1.0)).array().square()).matrix();
  w[2] = (0.5 * (fx - Vec3::Constant(0.5)).array().square()).matrix();
}

inline void apply_friction_contact(Vec3& v, const Vec3& n, double mu_f) {
  const double vn = v.dot(n);
  if (vn >= 0.0) return;  // separating: leave untouched
  Vec3 vt = v - vn * n;
  const double vt_norm = vt.norm();
  if (vt_norm > 1e-12) {
    const double scale = std::max(0.0, 1.0 - mu_f * (-vn) / vt_norm);
    vt *= scale;
  } else {
    vt.setZero();
  }
  v = vt;
}

}  // namespace

ParticleSet mpm_step(const ParticleSet& p, const SimConfig& cfg,
                     const std::vector<ForceField>& external,
                     const std::vector<SphereCollider>& colliders,
                     double t0, MpmStats* stats) {
  cfg.validate();
  p.validate();

  ParticleSet out = p;
  const std::size_t n = out.size();
  const double h = cfg.dt / cfg.substeps;
  const double dx = cfg.grid_dx;
  const double inv_dx = 1.0 / dx;

  std::vector<Lame> lame;
  lame.reserve(out.materials.size());
  for (const MaterialParams& m : out.materials) lame.push_back(lame_from_material(m));

  Grid grid;
  const int nodes = cfg.grid_res + 1;

  for (int sub = 0; sub < cfg.substeps; ++sub) {
    const double t = t0 + sub * h;

    // Substep guards: finite state and the advection CFL bound.
    double max_speed = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!out.positions[i].allFinite() || !out.velocities[i].allFinite() ||
          !out.F[i].allFinite() || !out.C[i].allFinite())
        throw NumericError(cat("non-finite particle state at substep ", sub));
      max_speed = std::max(max_speed, out.velocities[i].norm());
    }
    if (stats) stats->max_speed = std::max(stats->max_speed, max_speed);
    if (!(max_speed * h < dx))
      throw NumericError(cat("CFL violation at substep ", sub, ": speed ",
                             max_speed, " * h ", h, " >= dx ", dx));

    grid.reset(nodes);

    // Particle to grid.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 xp = (out.positions[i] - cfg.grid_origin) * inv_dx;
      const Eigen::Vector3i base =
          (xp.array() - 0.5).floor().cast<int>().matrix();
      if ((base.array() < 0).any() ||
          (base.array() > cfg.grid_res - 2).any())
        throw NumericError(cat("particle ", i, " left the grid at substep ", sub));
      const Vec3 fx = xp - base.cast<double>();
      Vec3 w[3];
      bspline_weights(fx, w);

      out.F[i] = (Mat3::Identity() + h * out.C[i]) * out.F[i];
      const Lame& lm = lame[out.material_id[i]];
      const MaterialParams& mat = out.materials[out.material_id[i]];

      Eigen::JacobiSVD<Mat3> svd(out.F[i],
                                 Eigen::ComputeFullU | Eigen::ComputeFullV);
      Vec3 sig = svd.singularValues();
      if (mat.kind == MaterialKind::snow) {
        // Plasticity: clamp principal stretches to the critical
        // compression/stretch band.
        for (int d = 0; d < 3; ++d)
          sig[d] = std::clamp(sig[d], 1.0 - 2.5e-2, 1.0 + 7.5e-3);
        out.F[i] = svd.matrixU() * sig.asDiagonal() * svd.matrixV().transpose();
      }
      const double J = out.F[i].determinant();
      if (!(J > 0.0))
        throw NumericError(cat("particle ", i, " inverted at substep ", sub));
      const Mat3 R = svd.matrixU() * svd.matrixV().transpose();

      const double vol = out.masses[i] / mat.density_rho;
      const Mat3 stress =
          (-h * vol * 4.0 * inv_dx * inv_dx) *
          (2.0 * lm.mu * (out.F[i] - R) * out.F[i].transpose() +
           lm.lambda * (J - 1.0) * J * Mat3::Identity());
      const Mat3 affine = stress + out.masses[i] * out.C[i];

      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            const Vec3 dpos = (Vec3(a, b, c) - fx) * dx;
            const double weight = w[a].x() * w[b].y() * w[c].z();
            const std::size_t g = grid.flat(base.x() + a, base.y() + b, base.z() + c);
            grid.momentum[g] += weight * (out.masses[i] * out.velocities[i] + affine * dpos);
            grid.mass[g] += weight * out.masses[i];
          }
    }

    if (stats) {
      double total = 0.0;
      for (double m : grid.mass) total += m;
      stats->grid_mass_per_substep.push_back(total);
    }

    // Grid update: momentum to velocity, gravity + external fields, contacts.
    for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < nodes; ++j)
        for (int k = 0; k < nodes; ++k) {
          const std::size_t g = grid.flat(i, j, k);
          if (!(grid.mass[g] > 0.0)) continue;
          Vec3 v = grid.momentum[g] / grid.mass[g];
          const Vec3 pos =
              cfg.grid_origin + dx * Vec3(i, j, k);
          v += h * cfg.gravity;
          for (const ForceField& f : external) v += h * f.accel(pos, t);

          if (cfg.ground && cfg.ground->signed_distance(pos) <= 0.0)
            apply_friction_contact(v, cfg.ground->normal, cfg.friction_mu);
          for (const SphereCollider& col : colliders) {
            const Vec3 c = col.center_at(t);
            const Vec3 d = pos - c;
            const double dist = d.norm();
            if (dist >= col.radius || dist < 1e-12) continue;
            const Vec3 cn = d / dist;
            const Vec3 vc = (col.center_at(t + h) - c) / h;
            Vec3 rel = v - vc;
            apply_friction_contact(rel, cn, cfg.coupling_friction);
            v = rel + vc;
          }

          // Domain faces: clamp outgoing velocity in the two outermost layers.
          for (int a = 0; a < 3; ++a) {
            const int idx = a == 0 ? i : (a == 1 ? j : k);
            if (idx < 2) v[a] = std::max(v[a], 0.0);
            if (idx > cfg.grid_res - 2) v[a] = std::min(v[a], 0.0);
          }
          grid.momentum[g] = v;
        }

    // Grid to particle.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3 xp = (out.positions[i] - cfg.grid_origin) * inv_dx;
      const Eigen::Vector3i base =
          (xp.array() - 0.5).floor().cast<int>().matrix();
      const Vec3 fx = xp - base.cast<double>();
      Vec3 w[3];
      bspline_weights(fx, w);

      Vec3 v_new = Vec3::Zero();
      Mat3 c_new = Mat3::Zero();
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b)
          for (int c = 0; c < 3; ++c) {
            const std::size_t g = grid.flat(base.x() + a, base.y() + b, base.z() + c);
            if (!(grid.mass[g] > 0.0)) continue;
            const Vec3 dpos = (Vec3(a, b, c) - fx) * dx;
            const double weight = w[a].x() * w[b].y() * w[c].z();
            v_new += weight * grid.momentum[g];
            c_new += 4.0 * inv_dx * inv_dx * weight * grid.momentum[g] * dpos.transpose();
          }
      out.velocities[i] = v_new;
      out.C[i] = c_new;
      out.positions[i] += h * v_new;
    }
  }
  return out;
}

}  // namespace cgflow
