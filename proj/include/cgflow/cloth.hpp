#pragma once

// XPBD cloth: distance constraints for stretch, dihedral constraints for
// bending, pinned particles held at fixed anchors. Compliances follow the
// usual XPBD convention (alpha / h^2 regularization per substep).

#include <vector>

#include "cgflow/mpm.hpp"

namespace cgflow {

struct ClothEdge {
  int a = 0, b = 0;
  double rest = 0.0;
};

// Two triangles (a, b, c) and (a, b, d) sharing edge a-b; rest_angle is the
// dihedral angle in the rest pose (pi when flat).
struct ClothBend {
  int a = 0, b = 0, c = 0, d = 0;
  double rest_angle = M_PI;
};

struct ClothState {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  std::vector<double> inv_mass;  // 0 marks pinned particles
  std::vector<ClothEdge> edges;
  std::vector<ClothBend> bends;
  std::vector<int> pinned;     // indices into positions
  std::vector<Vec3> anchors;   // parallel to pinned

  double stretch_compliance = 1e-7;  // 1/Pa
  double bend_compliance = 1e-5;
  double velocity_damping = 0.01;  // per-substep velocity decay
  int solver_iterations = 8;

  std::size_t size() const { return positions.size(); }
  void validate() const;
};

// Marks `indices` as pinned at their current positions.
void pin_particles(ClothState& c, const std::vector<int>& indices);

// Regular (nx + 1) x (ny + 1) grid of particles spanning spacing-sized
// quads from `origin` along unit directions du/dv, triangulated with one
// diagonal per quad; bend constraints cover every shared triangle edge.
ClothState make_grid_cloth(int nx, int ny, double spacing, const Vec3& origin,
                           const Vec3& du, const Vec3& dv, double particle_mass);

// One frame advance (cfg.substeps XPBD substeps of dt / substeps with
// cfg.gravity). Pinned particles end each substep exactly at their anchors
// with zero velocity.
ClothState pbd_cloth_step(const ClothState& c, const SimConfig& cfg);

}  // namespace cgflow
