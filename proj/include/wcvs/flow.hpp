#pragma once

#include "wcvs/geometry.hpp"
#include "wcvs/image.hpp"

namespace wcvs {

// Backward flow: the value at target pixel p points at the source location
// p + (du, dv) in the previous frame.
class FlowField {
 public:
  FlowField() = default;
  FlowField(int height, int width)
      : displacement_(height, width, 2, 0.0), valid_(height, width, 1) {}
  FlowField(Image displacement, Mask valid);

  int height() const { return displacement_.height(); }
  int width() const { return displacement_.width(); }
  double& du(int y, int x) { return displacement_.at(y, x, 0); }
  double du(int y, int x) const { return displacement_.at(y, x, 0); }
  double& dv(int y, int x) { return displacement_.at(y, x, 1); }
  double dv(int y, int x) const { return displacement_.at(y, x, 1); }

  const Image& displacement() const { return displacement_; }
  Image& displacement() { return displacement_; }
  const Mask& valid() const { return valid_; }
  Mask& valid() { return valid_; }

  static FlowField constant(int height, int width, double du, double dv);

  bool operator==(const FlowField&) const = default;

 private:
  Image displacement_;
  Mask valid_;
};

struct WarpResult {
  Image image;
  Mask coverage;
};

// Bilinear backward warp with clamp-to-edge weights. Samples with no in-bounds
// neighbor (or an invalid flow vector) give 0 and coverage 0.
// Throws Error(ShapeMismatch) when spatial shapes differ.
WarpResult warp(const Image& img, const FlowField& flow);

// Adjoint of warp with respect to the image: scatters dout back onto the
// source pixels. Coverage-0 pixels contribute nothing.
Image warp_adjoint(const FlowField& flow, const Image& dout, int src_height, int src_width);

// Static-scene motion field from frame t back to the previous camera.
// Pixels with infinite depth, or whose 3D point is behind cam_prev, get zero
// flow and valid = 0. Throws Error(BadDepth) for non-positive or NaN depth.
FlowField motion_field(const DepthMap& depth_t, const Camera& cam_t, const Camera& cam_prev);

namespace serial {
WarpResult warp(const Image& img, const FlowField& flow);
}  // namespace serial

}  // namespace wcvs
