#pragma once

#include <cmath>
#include <cstdint>

#include "wcvs/geometry.hpp"

namespace wcvs::detail {

// Rounds a projected point to its nearest pixel. Returns the flat pixel index
// or -1 when the point is behind the camera or lands out of bounds.
inline std::int64_t splat_pixel(const Point3& p, const Camera& cam, double& depth) {
  const auto proj = try_project(p, cam);
  if (!proj) return -1;
  const double px = std::floor(proj->u + 0.5);
  const double py = std::floor(proj->v + 0.5);
  const Intrinsics& k = cam.intrinsics;
  if (!(px >= 0.0 && py >= 0.0 && px < k.width && py < k.height)) return -1;
  depth = proj->depth;
  return static_cast<std::int64_t>(py) * k.width + static_cast<std::int64_t>(px);
}

}  // namespace wcvs::detail
