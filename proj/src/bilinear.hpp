#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace wcvs::detail {

struct BilinearTaps {
  std::array<int, 4> y;
  std::array<int, 4> x;
  std::array<double, 4> w;
};

// Clamp-to-edge bilinear taps for a continuous sample position. Returns false
// when the sample is a full pixel or more outside the image, i.e. when no
// in-bounds neighbor carries weight.
inline bool bilinear_taps(double qx, double qy, int height, int width, BilinearTaps& t) {
  if (!(qx > -1.0 && qx < width && qy > -1.0 && qy < height)) return false;
  const double fx0 = std::floor(qx);
  const double fy0 = std::floor(qy);
  const int x0 = static_cast<int>(fx0);
  const int y0 = static_cast<int>(fy0);
  const double ax = qx - fx0;
  const double ay = qy - fy0;
  auto cx = [width](int v) { return v < 0 ? 0 : (v >= width ? width - 1 : v); };
  auto cy = [height](int v) { return v < 0 ? 0 : (v >= height ? height - 1 : v); };
  t.x = {cx(x0), cx(x0 + 1), cx(x0), cx(x0 + 1)};
  t.y = {cy(y0), cy(y0), cy(y0 + 1), cy(y0 + 1)};
  t.w = {(1.0 - ax) * (1.0 - ay), ax * (1.0 - ay), (1.0 - ax) * ay, ax * ay};
  return true;
}

}  // namespace wcvs::detail
