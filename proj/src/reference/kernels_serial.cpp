// Plain single-threaded versions of the parallel kernels. They follow the
// same accumulation order, so results match bit for bit.

#include <limits>

#include "../bilinear.hpp"
#include "../splat.hpp"
#include "wcvs/error.hpp"
#include "wcvs/flow.hpp"
#include "wcvs/tensor.hpp"
#include "wcvs/world.hpp"

namespace wcvs::serial {

ZBuffer build_zbuffer(const WorldCloud& world, const Camera& cam) {
  const int height = cam.intrinsics.height;
  const int width = cam.intrinsics.width;
  const std::size_t npix = static_cast<std::size_t>(height) * width;
  const double inf = std::numeric_limits<double>::infinity();

  std::vector<std::int64_t> pixel(world.size(), -1);
  std::vector<double> depth(world.size(), inf);
  ZBuffer zb;
  zb.height = height;
  zb.width = width;
  zb.depth.assign(npix, inf);
  zb.index.assign(npix, -1);

  std::vector<double> nearest(npix, inf);
  for (std::size_t i = 0; i < world.size(); ++i) {
    double d = 0.0;
    pixel[i] = detail::splat_pixel(world.points()[i], cam, d);
    if (pixel[i] < 0) continue;
    depth[i] = d;
    if (d < nearest[pixel[i]]) nearest[pixel[i]] = d;
  }
  // Lowest index among the points tied with the nearest depth.
  for (std::size_t i = 0; i < world.size(); ++i) {
    const std::int64_t p = pixel[i];
    if (p < 0 || zb.index[p] >= 0) continue;
    if (depth[i] <= nearest[p] + kDepthTieTolerance) {
      zb.index[p] = static_cast<std::int64_t>(i);
      zb.depth[p] = depth[i];
    }
  }
  return zb;
}

namespace {

void check_conv_input(const Tensor& x, const ConvLayer& layer) {
  layer.validate();
  require_rank(x, 4, "conv input");
  if (x.dim(1) != layer.in_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "conv input channels do not match the layer");
  }
}

}  // namespace

Tensor conv2d(const Tensor& x, const ConvLayer& layer) {
  check_conv_input(x, layer);
  const int k = layer.kernel(), s = layer.stride, pad = layer.padding;
  const int oh = conv_output_extent(x.dim(2), k, s, pad);
  const int ow = conv_output_extent(x.dim(3), k, s, pad);
  if (oh <= 0 || ow <= 0) throw Error(ErrorCode::ShapeMismatch, "conv output is empty");
  Tensor out({x.dim(0), layer.out_channels(), oh, ow});
  for (int n = 0; n < x.dim(0); ++n)
    for (int co = 0; co < layer.out_channels(); ++co)
      for (int oy = 0; oy < oh; ++oy)
        for (int ox = 0; ox < ow; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < x.dim(1); ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * s - pad + ky, ix = ox * s - pad + kx;
                if (iy < 0 || iy >= x.dim(2) || ix < 0 || ix >= x.dim(3)) continue;
                acc += layer.weights.at(co, ci, ky, kx) * x.at(n, ci, iy, ix);
              }
          out.at(n, co, oy, ox) = acc + layer.bias[co];
        }
  return out;
}

PartialConvResult partial_conv2d(const Tensor& x, const Tensor& mask, const ConvLayer& layer) {
  check_conv_input(x, layer);
  require_rank(mask, 4, "mask");
  if (mask.dim(0) != x.dim(0) || mask.dim(1) != 1 || mask.dim(2) != x.dim(2) || mask.dim(3) != x.dim(3)) {
    throw Error(ErrorCode::ShapeMismatch, "mask does not fit the input");
  }
  const int k = layer.kernel(), s = layer.stride, pad = layer.padding;
  const int h = x.dim(2), w = x.dim(3);
  const int oh = conv_output_extent(h, k, s, pad);
  const int ow = conv_output_extent(w, k, s, pad);
  if (oh <= 0 || ow <= 0) throw Error(ErrorCode::ShapeMismatch, "conv output is empty");
  PartialConvResult r{Tensor({x.dim(0), layer.out_channels(), oh, ow}), Tensor({x.dim(0), 1, oh, ow})};
  for (int n = 0; n < x.dim(0); ++n)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        double valid = 0.0, in_bounds = 0.0;
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx) {
            const int iy = oy * s - pad + ky, ix = ox * s - pad + kx;
            if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
            valid += mask.at(n, 0, iy, ix);
            in_bounds += 1.0;
          }
        if (valid <= 0.0) continue;
        r.mask.at(n, 0, oy, ox) = 1.0;
        for (int co = 0; co < layer.out_channels(); ++co) {
          double acc = 0.0;
          for (int ci = 0; ci < x.dim(1); ++ci)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = oy * s - pad + ky, ix = ox * s - pad + kx;
                if (iy < 0 || iy >= h || ix < 0 || ix >= w) continue;
                acc += layer.weights.at(co, ci, ky, kx) * (x.at(n, ci, iy, ix) * mask.at(n, 0, iy, ix));
              }
          r.out.at(n, co, oy, ox) = acc * (in_bounds / valid) + layer.bias[co];
        }
      }
  return r;
}

WarpResult warp(const Image& img, const FlowField& flow) {
  if (img.height() != flow.height() || img.width() != flow.width()) {
    throw Error(ErrorCode::ShapeMismatch, "image and flow sizes differ");
  }
  WarpResult r{Image(img.height(), img.width(), img.channels(), 0.0), Mask(img.height(), img.width(), 0)};
  for (int y = 0; y < img.height(); ++y)
    for (int x = 0; x < img.width(); ++x) {
      detail::BilinearTaps t;
      if (!flow.valid().at(y, x) ||
          !detail::bilinear_taps(x + flow.du(y, x), y + flow.dv(y, x), img.height(), img.width(), t)) {
        continue;
      }
      r.coverage.at(y, x) = 1;
      for (int c = 0; c < img.channels(); ++c) {
        double v = 0.0;
        for (int q = 0; q < 4; ++q) v += t.w[q] * img.at(t.y[q], t.x[q], c);
        r.image.at(y, x, c) = v;
      }
    }
  return r;
}

}  // namespace wcvs::serial
