#pragma once

// Point-splat rasterizer. Each point is drawn as a filled disc in pixel
// space with a z-buffered depth test, which is enough to turn the sampled
// clouds back into dense frames with matching masks and depth maps.

#include "cgflow/geometry.hpp"
#include "cgflow/image.hpp"

namespace cgflow {

struct RenderResult {
  Image frame;
  MaskImage mask;   // 1 where a point won the depth test
  DepthMap depth;   // camera-space Z of the winning point, +inf elsewhere
  IdImage ids;      // object id of the winning point, -1 elsewhere
};

// Splats `cloud` into an image. Points behind the camera are culled. Discs
// cover pixels with (dx^2 + dy^2) <= radius_px^2 around the projected
// center; the depth test is strict-less, so among equal depths the earliest
// point in the cloud wins. `background`, when given, must match the
// intrinsics size and fills pixels no point covers; otherwise those pixels
// are black.
RenderResult render_points(const PointCloud& cloud, const CameraIntrinsics& intr,
                           const CameraPose& pose, double radius_px,
                           const Image* background = nullptr);

}  // namespace cgflow
