#include "cgflow/cloth.hpp"

#include <cmath>

namespace cgflow {

void ClothState::validate() const {
  const std::size_t n = positions.size();
  if (n == 0) throw ConfigError("cloth has no particles");
  if (velocities.size() != n || inv_mass.size() != n)
    throw ConfigError("cloth arrays disagree in length");
  for (std::size_t i = 0; i < n; ++i)
    if (!(inv_mass[i] >= 0.0))
      throw ConfigError(cat("cloth particle ", i, " has negative inverse mass"));
  auto check_index = [&](int idx) {
    if (idx < 0 || idx >= static_cast<int>(n))
      throw ConfigError(cat("cloth constraint index ", idx, " out of range"));
  };
  for (const ClothEdge& e : edges) {
    check_index(e.a);
    check_index(e.b);
    if (!(e.rest > 0.0))
      throw ConfigError(cat("edge rest length must be positive, got ", e.rest));
  }
  for (const ClothBend& b : bends) {
    check_index(b.a);
    check_index(b.b);
    check_index(b.c);
    check_index(b.d);
    if (!(b.rest_angle >= 0.0 && b.rest_angle <= M_PI))
      throw ConfigError(cat("bend rest angle must lie in [0, pi], got ", b.rest_angle));
  }
  if (pinned.size() != anchors.size())
    throw ConfigError("pinned indices and anchors disagree in length");
  for (int idx : pinned) check_index(idx);
  if (!(stretch_compliance >= 0.0) || !(bend_compliance >= 0.0))
    throw ConfigError("compliances must be >= 0");
  if (!(velocity_damping >= 0.0 && velocity_damping < 1.0))
    throw ConfigError(cat("velocity damping must lie in [0, 1), got ", velocity_damping));
  if (solver_iterations < 1)
    throw ConfigError(cat("solver iterations must be >= 1, got ", solver_iterations));
}

void pin_particles(ClothState& c, const std::vector<int>& indices) {
  for (int idx : indices) {
    if (idx < 0 || idx >= static_cast<int>(c.size()))
      throw ConfigError(cat("pin index ", idx, " out of range"));
    c.inv_mass[idx] = 0.0;
    c.velocities[idx] = Vec3::Zero();
    c.pinned.push_back(idx);
    c.anchors.push_back(c.positions[idx]);
  }
}

namespace {

double dihedral_angle(const Vec3& p1, const Vec3& p2, const Vec3& p3,
                      const Vec3& p4) {
  const Vec3 e2 = p2 - p1, e3 = p3 - p1, e4 = p4 - p1;
  const Vec3 n1 = e2.cross(e3).normalized();
  const Vec3 n2 = e2.cross(e4).normalized();
  return std::acos(std::clamp(n1.dot(n2), -1.0, 1.0));
}

}  // namespace

ClothState make_grid_cloth(int nx, int ny, double spacing, const Vec3& origin,
                           const Vec3& du, const Vec3& dv, double particle_mass) {
  if (nx < 1 || ny < 1) throw ConfigError("cloth grid needs at least one quad per axis");
  if (!(spacing > 0.0) || !(particle_mass > 0.0))
    throw ConfigError("cloth spacing and particle mass must be positive");
  const Vec3 ux = du.normalized(), uy = dv.normalized();
  if (std::fabs(ux.dot(uy)) > 1e-9)
    throw ConfigError("cloth grid directions must be orthogonal");

  ClothState c;
  auto vid = [&](int i, int j) { return i * (ny + 1) + j; };
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      c.positions.push_back(origin + spacing * (i * ux + j * uy));
      c.velocities.push_back(Vec3::Zero());
      c.inv_mass.push_back(1.0 / particle_mass);
    }

  auto add_edge = [&](int a, int b) {
    c.edges.push_back(
        {a, b, (c.positions[a] - c.positions[b]).norm()});
  };
  for (int i = 0; i <= nx; ++i)
    for (int j = 0; j <= ny; ++j) {
      if (i < nx) add_edge(vid(i, j), vid(i + 1, j));
      if (j < ny) add_edge(vid(i, j), vid(i, j + 1));
      if (i < nx && j < ny) add_edge(vid(i + 1, j), vid(i, j + 1));
    }

  auto add_bend = [&](int a, int b, int cc, int dd) {
    c.bends.push_back({a, b, cc, dd,
                       dihedral_angle(c.positions[a], c.positions[b],
                                      c.positions[cc], c.positions[dd])});
  };
  for (int i = 0; i < nx; ++i)
    for (int j = 0; j < ny; ++j) {
      // Diagonal shared by the two triangles of the quad.
      add_bend(vid(i + 1, j), vid(i, j + 1), vid(i, j), vid(i + 1, j + 1));
      // Shared edges with the right and upper neighbor quads.
      if (i + 1 < nx)
        add_bend(vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1), vid(i + 2, j));
      if (j + 1 < ny)
        add_bend(vid(i, j + 1), vid(i + 1, j + 1), vid(i + 1, j), vid(i, j + 2));
    }
  return c;
}

ClothState pbd_cloth_step(const ClothState& c, const SimConfig& cfg) {
  cfg.validate();
  c.validate();

  ClothState out = c;
  const double h = cfg.dt / cfg.substeps;
  const double alpha_stretch = out.stretch_compliance / (h * h);
  const double alpha_bend = out.bend_compliance / (h * h);
  std::vector<Vec3> prev(out.size());
  std::vector<double> lambda_stretch(out.edges.size());
  std::vector<double> lambda_bend(out.bends.size());

  for (int sub = 0; sub < cfg.substeps; ++sub) {
    prev = out.positions;
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.inv_mass[i] > 0.0) {
        out.velocities[i] *= 1.0 - out.velocity_damping;
        out.velocities[i] += h * cfg.gravity;
        out.positions[i] += h * out.velocities[i];
      } else {
        out.velocities[i] = Vec3::Zero();
      }
    }

    std::fill(lambda_stretch.begin(), lambda_stretch.end(), 0.0);
    std::fill(lambda_bend.begin(), lambda_bend.end(), 0.0);
    for (int iter = 0; iter < out.solver_iterations; ++iter) {
      for (std::size_t e = 0; e < out.edges.size(); ++e) {
        const ClothEdge& edge = out.edges[e];
        const double wsum = out.inv_mass[edge.a] + out.inv_mass[edge.b];
        if (wsum == 0.0) continue;
        const Vec3 d = out.positions[edge.a] - out.positions[edge.b];
        const double len = d.norm();
        if (len < 1e-12) continue;
        const Vec3 dir = d / len;
        const double viol = len - edge.rest;
        const double dlambda = (-viol - alpha_stretch * lambda_stretch[e]) /
                               (wsum + alpha_stretch);
        lambda_stretch[e] += dlambda;
        out.positions[edge.a] += out.inv_mass[edge.a] * dlambda * dir;
        out.positions[edge.b] -= out.inv_mass[edge.b] * dlambda * dir;
      }

      for (std::size_t bi = 0; bi < out.bends.size(); ++bi) {
        const ClothBend& bend = out.bends[bi];
        const Vec3& p1 = out.positions[bend.a];
        const Vec3 e2 = out.positions[bend.b] - p1;
        const Vec3 e3 = out.positions[bend.c] - p1;
        const Vec3 e4 = out.positions[bend.d] - p1;
        const Vec3 c23 = e2.cross(e3);
        const Vec3 c24 = e2.cross(e4);
        const double l23 = c23.norm(), l24 = c24.norm();
        if (l23 < 1e-12 || l24 < 1e-12) continue;
        const Vec3 n1 = c23 / l23, n2 = c24 / l24;
        const double dcos = std::clamp(n1.dot(n2), -1.0, 1.0);
        const double sin_theta = std::sqrt(std::max(0.0, 1.0 - dcos * dcos));
        if (sin_theta < 1e-6) continue;  // flat/folded: gradient degenerates
        const double viol = std::acos(dcos) - bend.rest_angle;

        // Gradients of cos(theta), then of theta = acos.
        const Vec3 q3 = (e2.cross(n2) + n1.cross(e2) * dcos) / l23;
        const Vec3 q4 = (e2.cross(n1) + n2.cross(e2) * dcos) / l24;
        const Vec3 q2 = -(e3.cross(n2) + n1.cross(e3) * dcos) / l23 -
                        (e4.cross(n1) + n2.cross(e4) * dcos) / l24;
        const Vec3 q1 = -(q2 + q3 + q4);
        const double scale = -1.0 / sin_theta;
        const Vec3 g1 = scale * q1, g2 = scale * q2, g3 = scale * q3,
                   g4 = scale * q4;
        const double denom =
            out.inv_mass[bend.a] * g1.squaredNorm() +
            out.inv_mass[bend.b] * g2.squaredNorm() +
            out.inv_mass[bend.c] * g3.squaredNorm() +
            out.inv_mass[bend.d] * g4.squaredNorm() + alpha_bend;
        if (denom < 1e-12) continue;
        const double dlambda =
            (-viol - alpha_bend * lambda_bend[bi]) / denom;
        lambda_bend[bi] += dlambda;
        out.positions[bend.a] += out.inv_mass[bend.a] * dlambda * g1;
        out.positions[bend.b] += out.inv_mass[bend.b] * dlambda * g2;
        out.positions[bend.c] += out.inv_mass[bend.c] * dlambda * g3;
        out.positions[bend.d] += out.inv_mass[bend.d] * dlambda * g4;
      }
    }

    for (std::size_t k = 0; k < out.pinned.size(); ++k)
      out.positions[out.pinned[k]] = out.anchors[k];

    for (std::size_t i = 0; i < out.size(); ++i) {
      if (out.inv_mass[i] > 0.0) {
        out.velocities[i] = (out.positions[i] - prev[i]) / h;
      } else {
        out.velocities[i] = Vec3::Zero();
      }
      if (!out.positions[i].allFinite() || !out.velocities[i].allFinite())
        throw NumericError(cat("non-finite cloth state at substep ", sub));
    }
  }
  return out;
}

}  // namespace cgflow
