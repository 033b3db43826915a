#pragma once

// Explicit MLS-MPM solver on a dense collocated grid: quadratic B-spline
// transfers, APIC affine velocity, fixed-corotated elasticity, and a
// singular-value-clamped snow variant. Boundaries are a ground plane with a
// separating contact + Coulomb friction and optional one-way kinematic
// sphere colliders.

#include <functional>
#include <optional>
#include <vector>

#include "cgflow/geometry.hpp"

namespace cgflow {

enum class MaterialKind { elastic, snow };

// E/nu/rho triple per body. Reference fluid parameters (viscosity 5e-3,
// particle size 1.3e-2) belong to an SPH solver that is out of scope here;
// particle spacing doubles as the seeding distance for granular bodies.
struct MaterialParams {
  double youngs_E = 8e4;      // Pa
  double poisson_nu = 0.32;
  double density_rho = 40.0;  // kg/m^3
  MaterialKind kind = MaterialKind::elastic;

  void validate() const;
};

struct Lame {
  double lambda = 0.0;  // Pa
  double mu = 0.0;      // Pa
};

// mu = E / (2 (1 + nu)), lambda = E nu / ((1 + nu)(1 - 2 nu)).
Lame lame_from_material(const MaterialParams& m);

struct ParticleSet {
  std::vector<MaterialParams> materials;

  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<Mat3> F;  // deformation gradient
  std::vector<Mat3> C;  // affine velocity (1/s)
  std::vector<double> masses;
  std::vector<int> material_id;  // index into materials

  std::size_t size() const { return positions.size(); }
  void add_points(const std::vector<Vec3>& pts, int material, double particle_mass,
                  const Vec3& v0 = Vec3::Zero());
  void validate() const;
};

// Time-varying acceleration field, evaluated at grid nodes (m/s^2).
struct ForceField {
  std::function<Vec3(const Vec3& pos, double t)> accel;
};

// One-way kinematic collider: it pushes particles, nothing pushes back.
struct SphereCollider {
  std::function<Vec3(double t)> center_at;
  double radius = 0.1;
};

struct SimConfig {
  double dt = 4e-3;   // frame step, split into substeps
  int substeps = 10;
  int grid_res = 64;  // cells per axis; nodes are (res + 1)^3
  double grid_dx = 2.0 / 64;
  Vec3 grid_origin = Vec3(-1.0, -1.0, -0.5);
  Vec3 gravity = Vec3(0.0, 0.0, -9.81);
  std::optional<Plane> ground = Plane{};  // z = 0 by default
  double friction_mu = 0.2;        // ground Coulomb friction
  double coupling_friction = 0.3;  // kinematic collider friction

  void validate() const;
};

// Per-frame diagnostics; grid mass is recorded once per substep right after
// the particle-to-grid scatter.
struct MpmStats {
  std::vector<double> grid_mass_per_substep;
  double max_speed = 0.0;
};

// Advances one frame (cfg.substeps substeps of dt / substeps). `t0` is the
// simulated time at the start of the frame, used by force fields and
// colliders. Particle count, masses, and material ids are unchanged; the
// substep loop rejects CFL violations (max speed * h >= dx) and non-finite
// states, naming the substep.
ParticleSet mpm_step(const ParticleSet& p, const SimConfig& cfg,
                     const std::vector<ForceField>& external = {},
                     const std::vector<SphereCollider>& colliders = {},
                     double t0 = 0.0, MpmStats* stats = nullptr);

}  // namespace cgflow
