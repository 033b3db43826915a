#include "cgflow/scene.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "cgflow/rng.hpp"

namespace cgflow {

namespace {

constexpr double kPi = 3.14159265358979323846;

double deg2rad(double d) { return d * kPi / 180.0; }

Vec3 vec3_of(const std::vector<double>& v) { return Vec3(v[0], v[1], v[2]); }

void require_unit_color(const Vec3& c, const std::string& what) {
  if (!(c.minCoeff() >= 0.0 && c.maxCoeff() <= 1.0))
    throw ConfigError(cat(what, " color must lie in [0, 1]"));
}

}  // namespace

void SceneSpec::validate() const {
  if (objects.empty()) throw ConfigError("scene has no objects");
  std::set<int> ids;
  for (const SceneObject& o : objects) {
    if (o.object_id < 1 || o.object_id > 65535)
      throw ConfigError(cat("object '", o.name, "' id ", o.object_id,
                            " outside [1, 65535]"));
    if (!ids.insert(o.object_id).second)
      throw ConfigError(cat("duplicate object id ", o.object_id));
    if (o.parts.empty())
      throw ConfigError(cat("object '", o.name, "' has no primitives"));
    for (const ScenePrimitive& part : o.parts) {
      if (part.kind == ScenePrimitive::Kind::sphere && !(part.radius > 0.0))
        throw ConfigError(cat("object '", o.name, "' sphere radius must be positive"));
      if (part.kind == ScenePrimitive::Kind::box && !(part.half.minCoeff() > 0.0))
        throw ConfigError(cat("object '", o.name, "' box half extents must be positive"));
      require_unit_color(part.color, cat("object '", o.name, "'"));
      if (!part.center.allFinite())
        throw ConfigError(cat("object '", o.name, "' center must be finite"));
    }
    o.material.validate();
    if (!o.v0.allFinite())
      throw ConfigError(cat("object '", o.name, "' velocity must be finite"));
  }
  require_unit_color(ground_color, "ground");
  require_unit_color(sky_top, "sky_top");
  require_unit_color(sky_bottom, "sky_bottom");
  if (!(ground_radius > 0.0)) throw ConfigError("ground radius must be positive");
  intrinsics.validate();
  input_pose.validate();
  orbit.validate();
  sim.validate();
  if (sim_frames < 0) throw ConfigError("sim frames must be >= 0");
  sde.validate();
  if (schedule_steps < 2)
    throw ConfigError(cat("schedule needs at least 2 steps, got ", schedule_steps));
  if (dataset.jitter_count < 0)
    throw ConfigError("dataset jitter count must be >= 0");
  if (!(dataset.pose_jitter >= 0.0) || !(dataset.color_jitter >= 0.0) ||
      !(dataset.condition_sigma >= 0.0))
    throw ConfigError("dataset jitter magnitudes must be >= 0");
  if (!(surface_step > 0.0)) throw ConfigError("surface step must be positive");
  if (!(voxel_size > 0.0)) throw ConfigError("voxel size must be positive");
  if (!(particle_spacing > 0.0))
    throw ConfigError("particle spacing must be positive");
  if (!(splat_radius_px >= 0.0))
    throw ConfigError("splat radius must be >= 0");
  if (!(depth_near > 0.0)) throw ConfigError("depth near bound must be positive");
  if (!(ransac_thresh > 0.0) || ransac_iters < 1)
    throw ConfigError("ransac parameters must be positive");
}

// --- parsing -----------------------------------------------------------------

namespace {

ScenePrimitive parse_primitive(const ConfigFile& cfg, const std::string& sec) {
  ScenePrimitive part;
  const std::string shape = cfg.get_string(sec, "shape");
  if (shape == "box") {
    part.kind = ScenePrimitive::Kind::box;
    part.half = vec3_of(cfg.get_doubles(sec, "half", 3));
    if (cfg.has(sec, "rotate_deg")) {
      const Vec3 e = vec3_of(cfg.get_doubles(sec, "rotate_deg", 3)) * kPi / 180.0;
      part.rotation = (Eigen::AngleAxisd(e.z(), Vec3::UnitZ()) *
                       Eigen::AngleAxisd(e.y(), Vec3::UnitY()) *
                       Eigen::AngleAxisd(e.x(), Vec3::UnitX()))
                          .toRotationMatrix();
    }
  } else if (shape == "sphere") {
    part.kind = ScenePrimitive::Kind::sphere;
    part.radius = cfg.get_double(sec, "radius");
    if (cfg.has(sec, "rotate_deg"))
      throw ConfigError(cat("[", sec, "] rotate_deg only applies to boxes"));
  } else {
    throw ConfigError(cat("[", sec, "] shape must be box or sphere, got '",
                          shape, "'"));
  }
  part.center = vec3_of(cfg.get_doubles(sec, "center", 3));
  part.color = vec3_of(cfg.get_doubles(sec, "color", 3));
  return part;
}

const char* kMaterialKeys[] = {"material", "youngs_e", "poisson_nu",
                               "density_rho", "velocity"};

void parse_object_section(const ConfigFile& cfg, const std::string& sec,
                          std::vector<SceneObject>& objects) {
  const int id = cfg.get_int(sec, "id");
  SceneObject* existing = nullptr;
  for (SceneObject& o : objects)
    if (o.object_id == id) existing = &o;

  if (existing != nullptr) {
    // Later parts of a composite may only add geometry.
    for (const char* key : kMaterialKeys)
      if (cfg.has(sec, key))
        throw ConfigError(cat("[", sec, "] '", key,
                              "' belongs to the first section of object id ",
                              id));
    existing->parts.push_back(parse_primitive(cfg, sec));
    return;
  }

  SceneObject obj;
  obj.name = sec.substr(std::string("object.").size());
  obj.object_id = id;
  obj.parts.push_back(parse_primitive(cfg, sec));
  const std::string kind = cfg.get_string(sec, "material", "elastic");
  if (kind == "elastic")
    obj.material.kind = MaterialKind::elastic;
  else if (kind == "snow")
    obj.material.kind = MaterialKind::snow;
  else
    throw ConfigError(cat("[", sec, "] material must be elastic or snow, got '",
                          kind, "'"));
  obj.material.youngs_E = cfg.get_double(sec, "youngs_e", obj.material.youngs_E);
  obj.material.poisson_nu =
      cfg.get_double(sec, "poisson_nu", obj.material.poisson_nu);
  obj.material.density_rho =
      cfg.get_double(sec, "density_rho", obj.material.density_rho);
  obj.v0 = vec3_of(cfg.get_doubles(sec, "velocity", 3, {0.0, 0.0, 0.0}));
  objects.push_back(obj);
}

void parse_drivers(const ConfigFile& cfg, SceneSpec& scene) {
  if (cfg.has_section("driver.vortex")) {
    VortexDriver v;
    v.strength = cfg.get_double("driver.vortex", "strength");
    v.omega = cfg.get_double("driver.vortex", "omega");
    scene.drivers.vortex = v;
  }
  if (cfg.has_section("driver.wind")) {
    WindParams w;
    w.amplitude = cfg.get_double("driver.wind", "amplitude", w.amplitude);
    w.period_frames = cfg.get_int("driver.wind", "period_frames", w.period_frames);
    w.cycle_frames = cfg.get_int("driver.wind", "cycle_frames", w.cycle_frames);
    w.direction = vec3_of(cfg.get_doubles("driver.wind", "direction", 3,
                                          {1.0, 0.0, 0.0}));
    scene.drivers.wind = w;
  }
  if (cfg.has_section("driver.strike")) {
    StrikeDriver s;
    s.x = cfg.get_double("driver.strike", "x", s.x);
    s.y = cfg.get_double("driver.strike", "y", s.y);
    s.z0 = cfg.get_double("driver.strike", "z0", s.z0);
    s.h = cfg.get_double("driver.strike", "h", s.h);
    s.d = cfg.get_double("driver.strike", "d", s.d);
    s.n_hz = cfg.get_double("driver.strike", "n_hz", s.n_hz);
    s.radius = cfg.get_double("driver.strike", "radius", s.radius);
    scene.drivers.strike = s;
  }
  if (cfg.has_section("driver.steam")) {
    SteamParams st;
    st.jitter_per_height =
        cfg.get_double("driver.steam", "jitter_per_height", st.jitter_per_height);
    st.damp_z = cfg.get_double("driver.steam", "damp_z", st.damp_z);
    st.damp_factor = cfg.get_double("driver.steam", "damp_factor", st.damp_factor);
    st.recycle = cfg.get_bool("driver.steam", "recycle", st.recycle);
    st.recycle_z = cfg.get_double("driver.steam", "recycle_z", st.recycle_z);
    st.source_center = vec3_of(cfg.get_doubles("driver.steam", "source_center", 3,
                                               {0.0, 0.0, 0.05}));
    st.source_radius =
        cfg.get_double("driver.steam", "source_radius", st.source_radius);
    scene.drivers.steam = st;
  }
}

}  // namespace

SceneSpec parse_scene(const ConfigFile& cfg) {
  SceneSpec scene;

  scene.name = cfg.get_string("scene", "name", scene.name);
  scene.seed = cfg.get_u64("scene", "seed", scene.seed);

  // Sections must all be recognized.
  static const std::set<std::string> known = {
      "scene", "camera", "orbit", "ground", "background", "sim", "sde",
      "dataset", "reconstruction", "driver.vortex", "driver.wind",
      "driver.strike", "driver.steam"};
  for (const std::string& sec : cfg.section_names()) {
    if (known.count(sec) || sec.rfind("object.", 0) == 0) continue;
    throw ConfigError(cat(cfg.origin(), ": unknown section [", sec, "]"));
  }

  for (const std::string& sec : cfg.section_names())
    if (sec.rfind("object.", 0) == 0) parse_object_section(cfg, sec, scene.objects);

  scene.ground.normal = Vec3(0, 0, 1);
  scene.ground.offset = cfg.get_double("ground", "offset", 0.0);
  scene.ground.canonicalize();
  scene.ground_radius = cfg.get_double("ground", "radius", scene.ground_radius);
  scene.ground_color =
      vec3_of(cfg.get_doubles("ground", "color", 3, {0.45, 0.42, 0.38}));
  scene.sky_top =
      vec3_of(cfg.get_doubles("background", "sky_top", 3, {0.55, 0.65, 0.80}));
  scene.sky_bottom = vec3_of(
      cfg.get_doubles("background", "sky_bottom", 3, {0.85, 0.88, 0.92}));

  scene.orbit.center = vec3_of(cfg.get_doubles("orbit", "center", 3,
                                               {0.0, 0.0, 0.3}));
  scene.orbit.radius = cfg.get_double("orbit", "radius", 1.5);
  scene.orbit.elevation = deg2rad(cfg.get_double("orbit", "elevation_deg", 12.0));
  scene.orbit.start_azimuth =
      deg2rad(cfg.get_double("orbit", "start_azimuth_deg", 0.0));
  scene.orbit.k_frames = cfg.get_int("orbit", "k_frames", 36);

  const int width = cfg.get_int("camera", "width", 32);
  const int height = cfg.get_int("camera", "height", 32);
  scene.intrinsics.width = width;
  scene.intrinsics.height = height;
  if (cfg.has("camera", "fx")) {
    scene.intrinsics.fx = cfg.get_double("camera", "fx");
    scene.intrinsics.fy = cfg.get_double("camera", "fy");
  } else {
    const double fov = deg2rad(cfg.get_double("camera", "fov_deg", 40.0));
    if (!(fov > 0.0 && fov < kPi))
      throw ConfigError(cat("camera fov must lie in (0, 180) degrees"));
    scene.intrinsics.fx = 0.5 * width / std::tan(0.5 * fov);
    scene.intrinsics.fy = scene.intrinsics.fx;
  }
  scene.intrinsics.cx = cfg.get_double("camera", "cx", 0.5 * (width - 1));
  scene.intrinsics.cy = cfg.get_double("camera", "cy", 0.5 * (height - 1));
  if (cfg.has("camera", "eye")) {
    const Vec3 eye = vec3_of(cfg.get_doubles("camera", "eye", 3));
    const Vec3 target = vec3_of(cfg.get_doubles(
        "camera", "target", 3,
        {scene.orbit.center.x(), scene.orbit.center.y(), scene.orbit.center.z()}));
    scene.input_pose = look_at(eye, target);
  } else {
    scene.input_pose = orbit_trajectory(scene.orbit).front();
  }

  scene.sim.dt = cfg.get_double("sim", "dt", scene.sim.dt);
  scene.sim.substeps = cfg.get_int("sim", "substeps", scene.sim.substeps);
  scene.sim.grid_res = cfg.get_int("sim", "grid_res", scene.sim.grid_res);
  scene.sim.grid_dx =
      cfg.get_double("sim", "grid_dx", 2.0 / scene.sim.grid_res);
  scene.sim.grid_origin = vec3_of(
      cfg.get_doubles("sim", "grid_origin", 3, {-1.0, -1.0, -0.5}));
  scene.sim.gravity =
      vec3_of(cfg.get_doubles("sim", "gravity", 3, {0.0, 0.0, -9.81}));
  scene.sim.friction_mu =
      cfg.get_double("sim", "friction_mu", scene.sim.friction_mu);
  scene.sim.coupling_friction =
      cfg.get_double("sim", "coupling_friction", scene.sim.coupling_friction);
  if (cfg.get_bool("sim", "ground_enabled", true))
    scene.sim.ground = scene.ground;
  else
    scene.sim.ground.reset();
  scene.sim_frames = cfg.get_int("sim", "frames", scene.sim_frames);

  scene.sde.tau = TimePoint(cfg.get_double("sde", "tau", 0.8));
  scene.sde.gamma = cfg.get_double("sde", "gamma", 0.2);
  scene.sde.n_steps = cfg.get_int("sde", "steps", 10);
  if (cfg.has("sde", "beta")) scene.sde.beta = cfg.get_double("sde", "beta");
  scene.schedule_steps = cfg.get_int("sde", "schedule_steps", 40);
  scene.sde.seed = scene.seed;

  scene.dataset.jitter_count =
      cfg.get_int("dataset", "jitter_count", scene.dataset.jitter_count);
  scene.dataset.pose_jitter =
      deg2rad(cfg.get_double("dataset", "pose_jitter_deg", 2.0));
  scene.dataset.color_jitter =
      cfg.get_double("dataset", "color_jitter", scene.dataset.color_jitter);
  scene.dataset.condition_sigma =
      cfg.get_double("dataset", "condition_sigma", scene.dataset.condition_sigma);

  scene.surface_step =
      cfg.get_double("reconstruction", "surface_step", scene.surface_step);
  scene.voxel_size =
      cfg.get_double("reconstruction", "voxel_size", scene.voxel_size);
  scene.particle_spacing = cfg.get_double("reconstruction", "particle_spacing",
                                          scene.particle_spacing);
  scene.splat_radius_px = cfg.get_double("reconstruction", "splat_radius_px",
                                         scene.splat_radius_px);
  scene.depth_near =
      cfg.get_double("reconstruction", "depth_near", scene.depth_near);
  scene.ransac_thresh =
      cfg.get_double("reconstruction", "ransac_thresh", scene.ransac_thresh);
  scene.ransac_iters =
      cfg.get_int("reconstruction", "ransac_iters", scene.ransac_iters);

  parse_drivers(cfg, scene);
  scene.drivers.seed = scene.seed ^ 0xD1F7A9B3ULL;

  cfg.require_all_consumed();
  scene.validate();
  return scene;
}

// --- presets -----------------------------------------------------------------

namespace {

const char* kFallingBall = R"(# A colored elastic ball dropped from rest; it reaches the ground and
# rebounds in the last clip frames.
[scene]
name = falling_ball
seed = 11

[camera]
width = 32
height = 32
fov_deg = 40

[orbit]
center = 0.0 0.0 0.45
radius = 1.5
elevation_deg = 16
k_frames = 36

[object.ball]
id = 1
shape = sphere
center = 0.0 0.0 0.6
radius = 0.12
color = 0.85 0.25 0.20
material = elastic
velocity = 0 0 0

[ground]
radius = 1.2
color = 0.45 0.42 0.38

# 0.04 s frames split into 0.4 ms substeps: the explicit elastic update needs
# substeps below grid_dx / wave_speed (~0.6 ms at E = 8e4, rho = 40).
[sim]
frames = 9
dt = 0.04
substeps = 100

[reconstruction]
splat_radius_px = 0.5

[sde]
tau = 0.8
gamma = 0.2
steps = 10
schedule_steps = 40

[dataset]
jitter_count = 6
pose_jitter_deg = 2.0
color_jitter = 0.04
)";

const char* kFallingBlock = R"(# An elastic block dropped from rest toward the ground. The block is tilted
# so every face is seen from the elevated orbit ring (an axis-aligned box
# hides its down face from any orbit above it), and its faces sit off the
# reconstruction voxel grid: a face on a voxel boundary splits its
# unprojected points across two cells.
[scene]
name = falling_block
seed = 7

[camera]
width = 32
height = 32
fov_deg = 32

[orbit]
center = 0.0 0.0 0.45
radius = 1.5
elevation_deg = 20
k_frames = 60

[object.block]
id = 1
shape = box
center = 0.025 0.025 0.70
half = 0.1 0.1 0.1
rotate_deg = 35 0 20
color = 0.25 0.45 0.80
material = elastic
velocity = 0 0 0

[ground]
radius = 1.2
color = 0.45 0.42 0.38

# 0.04 s frames split into 0.4 ms substeps: the explicit elastic update needs
# substeps below grid_dx / wave_speed (~0.6 ms at E = 8e4, rho = 40).
[sim]
frames = 8
dt = 0.04
substeps = 100

[sde]
tau = 0.8
gamma = 0.2
steps = 10
schedule_steps = 40

[dataset]
jitter_count = 6
pose_jitter_deg = 2.0
color_jitter = 0.04

[reconstruction]
splat_radius_px = 0.5
)";

}  // namespace

std::vector<std::string> scene_preset_names() {
  return {"falling_ball", "falling_block"};
}

std::string scene_preset_text(const std::string& name) {
  if (name == "falling_ball") return kFallingBall;
  if (name == "falling_block") return kFallingBlock;
  throw ConfigError(cat("unknown scene preset '", name,
                        "'; available: falling_ball, falling_block"));
}

SceneSpec load_scene(const std::string& ref) {
  const std::string prefix = "preset:";
  if (ref.rfind(prefix, 0) == 0) {
    const std::string name = ref.substr(prefix.size());
    return parse_scene(
        ConfigFile::parse_string(scene_preset_text(name), cat("preset:", name)));
  }
  return parse_scene(ConfigFile::parse_file(ref));
}

// --- ground-truth geometry ---------------------------------------------------

namespace {

void sample_box_surface(const ScenePrimitive& part, int object_id, double step,
                        PointCloud& out) {
  const Vec3 h = part.half;
  // Lattice over each face, inclusive of edges.
  auto emit = [&](const Vec3& p) {
    out.positions.push_back(part.center + part.rotation * p);
    out.colors.push_back(part.color);
    out.object_ids.push_back(object_id);
  };
  auto axis_ticks = [step](double half) {
    const int n = std::max(1, static_cast<int>(std::round(2.0 * half / step)));
    std::vector<double> ticks(n + 1);
    for (int i = 0; i <= n; ++i) ticks[i] = -half + 2.0 * half * i / n;
    return ticks;
  };
  const std::vector<double> xs = axis_ticks(h.x()), ys = axis_ticks(h.y()),
                            zs = axis_ticks(h.z());
  for (double x : xs)
    for (double y : ys) {
      emit(Vec3(x, y, -h.z()));
      emit(Vec3(x, y, h.z()));
    }
  for (double x : xs)
    for (double z : zs) {
      if (z == -h.z() || z == h.z()) continue;  // edges already emitted
      emit(Vec3(x, -h.y(), z));
      emit(Vec3(x, h.y(), z));
    }
  for (double y : ys)
    for (double z : zs) {
      if (z == -h.z() || z == h.z()) continue;
      if (y == -h.y() || y == h.y()) continue;
      emit(Vec3(-h.x(), y, z));
      emit(Vec3(h.x(), y, z));
    }
}

void sample_sphere_surface(const ScenePrimitive& part, int object_id,
                           double step, PointCloud& out) {
  const double area = 4.0 * kPi * part.radius * part.radius;
  const int n = std::max(8, static_cast<int>(std::ceil(area / (step * step))));
  // Fibonacci spiral: near-uniform, deterministic.
  const double golden = kPi * (3.0 - std::sqrt(5.0));
  for (int i = 0; i < n; ++i) {
    const double z = 1.0 - 2.0 * (i + 0.5) / n;
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double th = golden * i;
    out.positions.push_back(part.center +
                            part.radius * Vec3(r * std::cos(th),
                                               r * std::sin(th), z));
    out.colors.push_back(part.color);
    out.object_ids.push_back(object_id);
  }
}

}  // namespace

PointCloud sample_object_surfaces(const SceneSpec& scene, double step) {
  if (!(step > 0.0)) throw ConfigError("surface step must be positive");
  PointCloud out;
  for (const SceneObject& obj : scene.objects)
    for (const ScenePrimitive& part : obj.parts) {
      if (part.kind == ScenePrimitive::Kind::box)
        sample_box_surface(part, obj.object_id, step, out);
      else
        sample_sphere_surface(part, obj.object_id, step, out);
    }
  out.validate();
  return out;
}

PointCloud sample_volume_particles(const SceneSpec& scene,
                                   const PointCloud& surfaces) {
  std::set<int> ids;
  for (int id : surfaces.object_ids)
    if (id > 0) ids.insert(id);
  if (ids.empty())
    throw ConfigError("no object points to fill with particles");
  PointCloud out;
  for (int id : ids) {
    PointCloud sub;
    for (std::size_t i = 0; i < surfaces.size(); ++i)
      if (surfaces.object_ids[i] == id) {
        sub.positions.push_back(surfaces.positions[i]);
        sub.colors.push_back(surfaces.colors[i]);
        sub.object_ids.push_back(id);
      }
    out.append(volumetric_sample(sub, scene.voxel_size, scene.particle_spacing));
  }
  return out;
}

SimScene make_sim_scene(const SceneSpec& scene, const PointCloud& particles) {
  SimScene sim;
  std::map<int, int> material_of_id;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const int id = particles.object_ids[i];
    if (id <= 0)
      throw ConfigError("simulation particles must carry object ids >= 1");
    if (!material_of_id.count(id)) {
      const SceneObject* owner = nullptr;
      for (const SceneObject& o : scene.objects)
        if (o.object_id == id) owner = &o;
      if (owner == nullptr)
        throw ConfigError(cat("particle object id ", id, " not in the scene"));
      material_of_id[id] = static_cast<int>(sim.particles.materials.size());
      sim.particles.materials.push_back(owner->material);
    }
  }
  const double spacing = scene.particle_spacing;
  for (std::size_t i = 0; i < particles.size(); ++i) {
    const int id = particles.object_ids[i];
    const SceneObject* owner = nullptr;
    for (const SceneObject& o : scene.objects)
      if (o.object_id == id) owner = &o;
    const double mass =
        owner->material.density_rho * spacing * spacing * spacing;
    sim.particles.add_points({particles.positions[i]}, material_of_id[id], mass,
                             owner->v0);
    sim.particle_colors.push_back(particles.colors[i]);
    sim.particle_object_ids.push_back(id);
  }
  sim.validate();
  return sim;
}

PointCloud trajectory_frame_cloud(const PointTrajectories& traj, int frame) {
  if (frame < 0 || frame >= static_cast<int>(traj.frames.size()))
    throw ConfigError(cat("trajectory frame ", frame, " outside [0, ",
                          traj.frames.size(), ")"));
  PointCloud out;
  out.positions = traj.frames[frame];
  out.colors = traj.colors;
  out.object_ids = traj.object_ids;
  out.validate();
  return out;
}

// --- rendering ---------------------------------------------------------------

RenderResult render_background(const SceneSpec& scene, const CameraPose& pose) {
  const CameraIntrinsics& intr = scene.intrinsics;
  intr.validate();
  pose.validate();
  RenderResult rr;
  rr.frame = Image(intr.height, intr.width);
  rr.mask = MaskImage(intr.height, intr.width, 0);
  rr.depth = DepthMap(intr.height, intr.width);
  rr.ids = IdImage(intr.height, intr.width);

  // Disc center: the orbit center dropped onto the plane.
  const Vec3 disc_center =
      scene.orbit.center -
      scene.ground.signed_distance(scene.orbit.center) * scene.ground.normal;
  for (int y = 0; y < intr.height; ++y) {
    const double grad = intr.height > 1
                            ? static_cast<double>(y) / (intr.height - 1)
                            : 0.0;
    const Vec3 sky = scene.sky_top * (1.0 - grad) + scene.sky_bottom * grad;
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 dir_cam((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0);
      const Vec3 dir_world = pose.R * dir_cam;
      const double denom = scene.ground.normal.dot(dir_world);
      Vec3 color = sky;
      if (std::abs(denom) > 1e-12) {
        const double s =
            (scene.ground.offset - scene.ground.normal.dot(pose.t)) / denom;
        if (s > 0.0) {
          const Vec3 hit = pose.t + s * dir_world;
          if ((hit - disc_center).norm() <= scene.ground_radius) {
            color = scene.ground_color;
            rr.depth.at(y, x) = s;  // camera z: dir_cam has unit z component
            rr.ids.at(y, x) = 0;
          }
        }
      }
      for (int c = 0; c < 3; ++c) rr.frame.at(y, x, c) = color[c];
    }
  }
  return rr;
}

RenderResult render_view(const SceneSpec& scene, const PointCloud& cloud,
                         const CameraPose& pose) {
  RenderResult bg = render_background(scene, pose);
  RenderResult rr = render_points(cloud, scene.intrinsics, pose,
                                  scene.splat_radius_px, &bg.frame);
  for (int y = 0; y < rr.frame.height; ++y)
    for (int x = 0; x < rr.frame.width; ++x) {
      const double bg_depth = bg.depth.at(y, x);
      if (rr.mask.at(y, x)) {
        if (rr.depth.at(y, x) <= bg_depth) continue;  // splat in front
        rr.mask.at(y, x) = 0;  // ground occludes the splat
      }
      for (int c = 0; c < 3; ++c)
        rr.frame.at(y, x, c) = bg.frame.at(y, x, c);
      rr.depth.at(y, x) = bg_depth;
      rr.ids.at(y, x) = bg.ids.at(y, x);
    }
  return rr;
}

PointCloud unproject_view(const SceneSpec& scene, const RenderResult& view,
                          const CameraPose& pose) {
  MaskImage finite(view.depth.height, view.depth.width, 0);
  for (int y = 0; y < view.depth.height; ++y)
    for (int x = 0; x < view.depth.width; ++x)
      if (std::isfinite(view.depth.at(y, x))) finite.at(y, x) = 1;
  return unproject(view.depth, scene.intrinsics, pose, view.frame, finite,
                   &view.ids);
}

// --- latent bridging ----------------------------------------------------------

Latent video_latent(const std::vector<RenderResult>& frames) {
  if (frames.empty()) throw ConfigError("cannot build a latent from 0 frames");
  const int h = frames[0].frame.height, w = frames[0].frame.width;
  Latent video(static_cast<int>(frames.size()), h, w, 4);
  for (std::size_t f = 0; f < frames.size(); ++f) {
    if (frames[f].frame.height != h || frames[f].frame.width != w)
      throw ConfigError("latent frames must share one resolution");
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x) {
        for (int c = 0; c < 3; ++c)
          video.at(static_cast<int>(f), y, x, c) = frames[f].frame.at(y, x, c);
        const double d = frames[f].depth.at(y, x);
        video.at(static_cast<int>(f), y, x, 3) = std::isfinite(d) ? d : 0.0;
      }
  }
  return video;
}

namespace {

void check_frame_index(const Latent& video, int frame) {
  if (video.channels != 4)
    throw ConfigError(cat("expected a 4-channel video latent, got ",
                          video.channels, " channels"));
  if (frame < 0 || frame >= video.frames)
    throw ConfigError(cat("frame ", frame, " outside [0, ", video.frames, ")"));
}

}  // namespace

Image latent_frame_image(const Latent& video, int frame) {
  check_frame_index(video, frame);
  Image img(video.height, video.width);
  for (int y = 0; y < video.height; ++y)
    for (int x = 0; x < video.width; ++x)
      for (int c = 0; c < 3; ++c)
        img.at(y, x, c) = std::clamp(video.at(frame, y, x, c), 0.0, 1.0);
  return img;
}

DepthMap latent_frame_depth(const Latent& video, int frame, double near) {
  check_frame_index(video, frame);
  DepthMap depth(video.height, video.width);
  for (int y = 0; y < video.height; ++y)
    for (int x = 0; x < video.width; ++x) {
      const double d = video.at(frame, y, x, 3);
      if (d >= near) depth.at(y, x) = d;
    }
  return depth;
}

MaskImage latent_frame_fg(const Latent& video, int frame, double near) {
  check_frame_index(video, frame);
  MaskImage mask(video.height, video.width, 0);
  for (int y = 0; y < video.height; ++y)
    for (int x = 0; x < video.width; ++x)
      if (video.at(frame, y, x, 3) >= near) mask.at(y, x) = 1;
  return mask;
}

// --- ground-truth videos and oracles -------------------------------------------

std::vector<RenderResult> ground_truth_orbit_frames(const SceneSpec& scene) {
  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  std::vector<RenderResult> frames;
  for (const CameraPose& pose : orbit_trajectory(scene.orbit))
    frames.push_back(render_view(scene, surfaces, pose));
  return frames;
}

std::vector<RenderResult> ground_truth_sim_frames(const SceneSpec& scene,
                                                  PointTrajectories* traj_out) {
  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  const PointCloud particles = sample_volume_particles(scene, surfaces);
  const SimScene sim = make_sim_scene(scene, particles);
  const PointTrajectories traj =
      simulate(sim, scene.sim, scene.drivers, scene.sim_frames);
  std::vector<RenderResult> frames;
  for (int f = 1; f < static_cast<int>(traj.frames.size()); ++f)
    frames.push_back(
        render_view(scene, trajectory_frame_cloud(traj, f), scene.input_pose));
  if (traj_out != nullptr) *traj_out = traj;
  return frames;
}

namespace {

Vec3 draw_color_offset(Rng& rng, double magnitude) {
  return Vec3(rng.uniform(-magnitude, magnitude),
              rng.uniform(-magnitude, magnitude),
              rng.uniform(-magnitude, magnitude));
}

PointCloud tint(const PointCloud& cloud, const Vec3& offset) {
  PointCloud out = cloud;
  for (Vec3& c : out.colors)
    c = (c + offset).cwiseMax(0.0).cwiseMin(1.0);
  return out;
}

}  // namespace

VelocityOracle build_orbit_oracle(const SceneSpec& scene) {
  const PointCloud surfaces = sample_object_surfaces(scene, scene.surface_step);
  std::vector<OracleSample> samples;

  std::vector<RenderResult> target;
  for (const CameraPose& pose : orbit_trajectory(scene.orbit))
    target.push_back(render_view(scene, surfaces, pose));
  samples.push_back(OracleSample{video_latent(target), "input", std::nullopt});

  Rng rng(scene.seed ^ 0xA3C59B2DULL);
  for (int j = 0; j < scene.dataset.jitter_count; ++j) {
    OrbitSpec orbit = scene.orbit;
    orbit.start_azimuth += rng.normal() * scene.dataset.pose_jitter;
    orbit.elevation = std::clamp(
        orbit.elevation + rng.normal() * scene.dataset.pose_jitter,
        -1.4, 1.4);
    const PointCloud tinted =
        tint(surfaces, draw_color_offset(rng, scene.dataset.color_jitter));
    std::vector<RenderResult> frames;
    for (const CameraPose& pose : orbit_trajectory(orbit))
      frames.push_back(render_view(scene, tinted, pose));
    samples.push_back(
        OracleSample{video_latent(frames), cat("jitter", j), std::nullopt});
  }
  return VelocityOracle::empirical(std::move(samples),
                                   scene.dataset.condition_sigma);
}

VelocityOracle build_sim_oracle(const SceneSpec& scene) {
  PointTrajectories traj;
  std::vector<RenderResult> target = ground_truth_sim_frames(scene, &traj);
  std::vector<OracleSample> samples;
  samples.push_back(OracleSample{video_latent(target), "input", std::nullopt});

  Rng rng(scene.seed ^ 0x51E0A7E5ULL);
  const Vec3 up(0, 0, 1);
  for (int j = 0; j < scene.dataset.jitter_count; ++j) {
    const double yaw = rng.normal() * scene.dataset.pose_jitter;
    const Mat3 spin = Eigen::AngleAxisd(yaw, up).toRotationMatrix();
    const Vec3 eye = scene.orbit.center +
                     spin * (scene.input_pose.t - scene.orbit.center);
    const CameraPose pose = look_at(eye, scene.orbit.center);
    const Vec3 offset = draw_color_offset(rng, scene.dataset.color_jitter);
    std::vector<RenderResult> frames;
    for (int f = 1; f < static_cast<int>(traj.frames.size()); ++f)
      frames.push_back(
          render_view(scene, tint(trajectory_frame_cloud(traj, f), offset), pose));
    samples.push_back(
        OracleSample{video_latent(frames), cat("jitter", j), std::nullopt});
  }
  return VelocityOracle::empirical(std::move(samples),
                                   scene.dataset.condition_sigma);
}

}  // namespace cgflow
