#include "wcvs/flow.hpp"

#include <cmath>
#include <limits>

#include "bilinear.hpp"
#include "wcvs/error.hpp"

namespace wcvs {

FlowField::FlowField(Image displacement, Mask valid)
    : displacement_(std::move(displacement)), valid_(std::move(valid)) {
  if (displacement_.channels() != 2 || valid_.height() != displacement_.height() ||
      valid_.width() != displacement_.width()) {
    throw Error(ErrorCode::ShapeMismatch, "flow needs 2 channels and a matching validity mask");
  }
}

FlowField FlowField::constant(int height, int width, double du, double dv) {
  FlowField f(height, width);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      f.du(y, x) = du;
      f.dv(y, x) = dv;
    }
  }
  return f;
}

namespace {

void check_warp_shapes(const Image& img, const FlowField& flow) {
  if (img.height() != flow.height() || img.width() != flow.width()) {
    throw Error(ErrorCode::ShapeMismatch, "image and flow sizes differ");
  }
}

}  // namespace

WarpResult warp(const Image& img, const FlowField& flow) {
  check_warp_shapes(img, flow);
  const int h = img.height(), w = img.width(), ch = img.channels();
  WarpResult r{Image(h, w, ch, 0.0), Mask(h, w, 0)};

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!flow.valid().at(y, x)) continue;
      detail::BilinearTaps t;
      if (!detail::bilinear_taps(x + flow.du(y, x), y + flow.dv(y, x), h, w, t)) continue;
      r.coverage.at(y, x) = 1;
      for (int c = 0; c < ch; ++c) {
        double v = 0.0;
        for (int k = 0; k < 4; ++k) v += t.w[k] * img.at(t.y[k], t.x[k], c);
        r.image.at(y, x, c) = v;
      }
    }
  }
  return r;
}

Image warp_adjoint(const FlowField& flow, const Image& dout, int src_height, int src_width) {
  if (dout.height() != flow.height() || dout.width() != flow.width()) {
    throw Error(ErrorCode::ShapeMismatch, "gradient and flow sizes differ");
  }
  if (src_height != flow.height() || src_width != flow.width()) {
    throw Error(ErrorCode::ShapeMismatch, "source and flow sizes differ");
  }
  Image grad(src_height, src_width, dout.channels(), 0.0);
  // Scatter is sequential so accumulation order is fixed.
  for (int y = 0; y < dout.height(); ++y) {
    for (int x = 0; x < dout.width(); ++x) {
      if (!flow.valid().at(y, x)) continue;
      detail::BilinearTaps t;
      if (!detail::bilinear_taps(x + flow.du(y, x), y + flow.dv(y, x), src_height, src_width, t)) {
        continue;
      }
      for (int c = 0; c < dout.channels(); ++c) {
        for (int k = 0; k < 4; ++k) grad.at(t.y[k], t.x[k], c) += t.w[k] * dout.at(y, x, c);
      }
    }
  }
  return grad;
}

FlowField motion_field(const DepthMap& depth_t, const Camera& cam_t, const Camera& cam_prev) {
  if (depth_t.channels() != 1) throw Error(ErrorCode::ShapeMismatch, "depth must be 1 channel");
  const int h = depth_t.height(), w = depth_t.width();
  if (cam_t.intrinsics.height != h || cam_t.intrinsics.width != w) {
    throw Error(ErrorCode::SizeMismatch, "depth size does not match camera");
  }
  for (double d : depth_t.data()) {
    if (std::isnan(d) || d <= 0.0) throw Error(ErrorCode::BadDepth, "depth must be positive");
  }
  FlowField f(h, w);
  // Without camera motion the field is exactly zero; the backproject/project
  // round trip would otherwise leave rounding noise.
  const bool still = cam_t == cam_prev;

#pragma omp parallel for schedule(static)
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = depth_t.at(y, x);
      f.valid().at(y, x) = 0;
      if (std::isinf(d)) continue;
      if (still) {
        f.valid().at(y, x) = 1;
        continue;
      }
      const Point3 world = backproject(x, y, d, cam_t);
      const auto proj = try_project(world, cam_prev);
      if (!proj) continue;
      f.du(y, x) = proj->u - x;
      f.dv(y, x) = proj->v - y;
      f.valid().at(y, x) = 1;
    }
  }
  return f;
}

}  // namespace wcvs
