#include "cgflow/render.hpp"

#include <algorithm>
#include <cmath>

namespace cgflow {

RenderResult render_points(const PointCloud& cloud, const CameraIntrinsics& intr,
                           const CameraPose& pose, double radius_px,
                           const Image* background) {
  cloud.validate();
  intr.validate();
  pose.validate();
  if (!(radius_px >= 0.0) || !is_finite(radius_px))
    throw ConfigError(cat("splat radius must be >= 0, got ", radius_px));
  if (background && (background->height != intr.height || background->width != intr.width))
    throw ConfigError("background size does not match intrinsics");

  RenderResult res{Image(intr.height, intr.width), MaskImage(intr.height, intr.width),
                   DepthMap(intr.height, intr.width), IdImage(intr.height, intr.width)};
  if (background) res.frame.rgb = background->rgb;

  const double r2 = radius_px * radius_px;
  const int reach = static_cast<int>(std::floor(radius_px));
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3 p_cam = pose.to_camera(cloud.positions[i]);
    if (!(p_cam.z() > 0.0)) continue;
    const double u = intr.fx * p_cam.x() / p_cam.z() + intr.cx;
    const double v = intr.fy * p_cam.y() / p_cam.z() + intr.cy;
    const int ui = static_cast<int>(std::lround(u));
    const int vi = static_cast<int>(std::lround(v));
    for (int dy = -reach; dy <= reach; ++dy) {
      const int y = vi + dy;
      if (y < 0 || y >= intr.height) continue;
      for (int dx = -reach; dx <= reach; ++dx) {
        const int x = ui + dx;
        if (x < 0 || x >= intr.width) continue;
        if (dx * dx + dy * dy > r2) continue;
        if (!(p_cam.z() < res.depth.at(y, x))) continue;
        res.depth.at(y, x) = p_cam.z();
        res.mask.at(y, x) = 1;
        res.ids.at(y, x) = cloud.object_ids[i];
        for (int c = 0; c < 3; ++c) res.frame.at(y, x, c) = cloud.colors[i][c];
      }
    }
  }
  return res;
}

}  // namespace cgflow
