#include "wcvs/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "wcvs/error.hpp"

namespace wcvs {

namespace {

std::size_t product(const std::vector<int>& shape) {
  std::size_t n = 1;
  for (int d : shape) {
    if (d <= 0) throw Error(ErrorCode::ShapeMismatch, "non-positive extent in " + shape_string(shape));
    n *= static_cast<std::size_t>(d);
  }
  return n;
}

// Maps an index into x (N x C x H x W) onto the modulation parameter index.
struct ParamIndexer {
  std::size_t per_sample;
  bool broadcast;
  std::size_t operator()(std::size_t i) const { return broadcast ? i % per_sample : i; }
};

ParamIndexer check_modulation(const Tensor& x, const ModulationParams& p) {
  require_rank(x, 4, "modulated activation");
  if (p.gamma.shape() != p.beta.shape()) {
    throw Error(ErrorCode::ShapeMismatch, "gamma " + p.gamma.shape_string() + " vs beta " +
                                              p.beta.shape_string());
  }
  const std::vector<int> chw(x.shape().begin() + 1, x.shape().end());
  if (p.gamma.shape() == chw) return {p.gamma.size(), true};
  if (p.gamma.shape() == x.shape()) return {p.gamma.size(), false};
  throw Error(ErrorCode::ShapeMismatch,
              "modulation " + p.gamma.shape_string() + " does not fit activation " + x.shape_string());
}

// Shared geometry for conv-style kernels.
struct ConvDims {
  int n, cin, h, w, cout, k, stride, pad, oh, ow;
};

ConvDims conv_dims(const Tensor& x, const ConvLayer& layer) {
  layer.validate();
  require_rank(x, 4, "conv input");
  if (x.dim(1) != layer.in_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "conv input has " + std::to_string(x.dim(1)) +
                                              " channels, layer expects " +
                                              std::to_string(layer.in_channels()));
  }
  ConvDims d{x.dim(0), x.dim(1), x.dim(2), x.dim(3), layer.out_channels(), layer.kernel(),
             layer.stride, layer.padding, 0, 0};
  d.oh = conv_output_extent(d.h, d.k, d.stride, d.pad);
  d.ow = conv_output_extent(d.w, d.k, d.stride, d.pad);
  if (d.oh <= 0 || d.ow <= 0) throw Error(ErrorCode::ShapeMismatch, "conv output is empty");
  return d;
}

void check_mask(const Tensor& x, const Tensor& mask) {
  require_rank(mask, 4, "mask");
  if (mask.dim(0) != x.dim(0) || mask.dim(1) != 1 || mask.dim(2) != x.dim(2) ||
      mask.dim(3) != x.dim(3)) {
    throw Error(ErrorCode::ShapeMismatch,
                "mask " + mask.shape_string() + " does not fit input " + x.shape_string());
  }
}

double round_to_float(double v) { return static_cast<double>(static_cast<float>(v)); }

Tensor map(const Tensor& x, const std::function<double(double)>& f) {
  Tensor out = x;
  for (double& v : out.data()) v = f(v);
  return out;
}

}  // namespace

std::string shape_string(const std::vector<int>& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

Tensor::Tensor(std::vector<int> shape, double fill) : shape_(std::move(shape)) {
  data_.assign(product(shape_), fill);
}

Tensor::Tensor(std::vector<int> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (product(shape_) != data_.size()) {
    throw Error(ErrorCode::ShapeMismatch, "data length does not match shape " + wcvs::shape_string(shape_));
  }
}

Tensor Tensor::reshaped(std::vector<int> shape) const { return Tensor(std::move(shape), data_); }

bool Tensor::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::string Tensor::shape_string() const { return wcvs::shape_string(shape_); }

Tensor Tensor::uniform(std::vector<int> shape, Rng& rng, double lo, double hi) {
  Tensor t(std::move(shape));
  for (double& v : t.data_) v = rng.uniform(lo, hi);
  return t;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

void require_rank(const Tensor& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw Error(ErrorCode::ShapeMismatch, std::string(what) + " must have rank " +
                                              std::to_string(rank) + ", got " + t.shape_string());
  }
}

void ConvLayer::validate() const {
  if (weights.rank() != 4 || weights.dim(2) != weights.dim(3) || weights.dim(2) % 2 == 0) {
    throw Error(ErrorCode::ShapeMismatch, "conv weights must be Cout x Cin x K x K with odd K");
  }
  if (bias.rank() != 1 || bias.dim(0) != weights.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "conv bias must have Cout entries");
  }
  if (stride < 1 || padding < 0) throw Error(ErrorCode::ShapeMismatch, "bad stride/padding");
}

ConvLayer ConvLayer::seeded(int cout, int cin, int k, int stride, int padding, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(cin * k * k));
  ConvLayer layer{Tensor({cout, cin, k, k}), Tensor({cout}), stride, padding};
  for (double& v : layer.weights.data()) v = round_to_float(rng.uniform(-bound, bound));
  for (double& v : layer.bias.data()) v = round_to_float(rng.uniform(-bound, bound));
  return layer;
}

ConvLayer ConvLayer::zeros(int cout, int cin, int k, int stride, int padding) {
  return ConvLayer{Tensor({cout, cin, k, k}), Tensor({cout}), stride, padding};
}

int conv_output_extent(int extent, int kernel, int stride, int padding) {
  const int span = extent + 2 * padding - kernel;
  if (span < 0) return 0;
  return span / stride + 1;
}

Tensor conv2d(const Tensor& x, const ConvLayer& layer) {
  const ConvDims d = conv_dims(x, layer);
  Tensor out({d.n, d.cout, d.oh, d.ow});
  const double* xd = x.data().data();
  const double* wd = layer.weights.data().data();

#pragma omp parallel for collapse(3) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int co = 0; co < d.cout; ++co) {
      for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
          double acc = 0.0;
          for (int ci = 0; ci < d.cin; ++ci) {
            for (int ky = 0; ky < d.k; ++ky) {
              const int iy = oy * d.stride - d.pad + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.k; ++kx) {
                const int ix = ox * d.stride - d.pad + kx;
                if (ix < 0 || ix >= d.w) continue;
                acc += wd[((static_cast<std::size_t>(co) * d.cin + ci) * d.k + ky) * d.k + kx] *
                       xd[x.offset(n, ci, iy, ix)];
              }
            }
          }
          out.at(n, co, oy, ox) = acc + layer.bias[co];
        }
      }
    }
  }
  return out;
}

ConvGrads conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& dout) {
  const ConvDims d = conv_dims(x, layer);
  if (dout.shape() != std::vector<int>{d.n, d.cout, d.oh, d.ow}) {
    throw Error(ErrorCode::ShapeMismatch, "conv output gradient has wrong shape");
  }
  ConvGrads g{Tensor(x.shape()), Tensor(layer.weights.shape()), Tensor(layer.bias.shape())};
  const double* wd = layer.weights.data().data();

  // Each thread owns one input plane of dx.
#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int ci = 0; ci < d.cin; ++ci) {
      for (int co = 0; co < d.cout; ++co) {
        for (int oy = 0; oy < d.oh; ++oy) {
          for (int ox = 0; ox < d.ow; ++ox) {
            const double go = dout.at(n, co, oy, ox);
            for (int ky = 0; ky < d.k; ++ky) {
              const int iy = oy * d.stride - d.pad + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.k; ++kx) {
                const int ix = ox * d.stride - d.pad + kx;
                if (ix < 0 || ix >= d.w) continue;
                g.dx.at(n, ci, iy, ix) +=
                    wd[((static_cast<std::size_t>(co) * d.cin + ci) * d.k + ky) * d.k + kx] * go;
              }
            }
          }
        }
      }
    }
  }

  // Each thread owns one output channel of dweights/dbias.
#pragma omp parallel for schedule(static)
  for (int co = 0; co < d.cout; ++co) {
    double db = 0.0;
    for (int n = 0; n < d.n; ++n) {
      for (int oy = 0; oy < d.oh; ++oy) {
        for (int ox = 0; ox < d.ow; ++ox) {
          const double go = dout.at(n, co, oy, ox);
          db += go;
          for (int ci = 0; ci < d.cin; ++ci) {
            for (int ky = 0; ky < d.k; ++ky) {
              const int iy = oy * d.stride - d.pad + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.k; ++kx) {
                const int ix = ox * d.stride - d.pad + kx;
                if (ix < 0 || ix >= d.w) continue;
                g.dweights.at(co, ci, ky, kx) += x.at(n, ci, iy, ix) * go;
              }
            }
          }
        }
      }
    }
    g.dbias[co] = db;
  }
  return g;
}

namespace {

// Valid count and in-bounds window size for one output position.
inline void window_coverage(const Tensor& mask, const ConvDims& d, int n, int oy, int ox,
                            double& valid, double& in_bounds) {
  valid = 0.0;
  in_bounds = 0.0;
  for (int ky = 0; ky < d.k; ++ky) {
    const int iy = oy * d.stride - d.pad + ky;
    if (iy < 0 || iy >= d.h) continue;
    for (int kx = 0; kx < d.k; ++kx) {
      const int ix = ox * d.stride - d.pad + kx;
      if (ix < 0 || ix >= d.w) continue;
      valid += mask.at(n, 0, iy, ix);
      in_bounds += 1.0;
    }
  }
}

}  // namespace

PartialConvResult partial_conv2d(const Tensor& x, const Tensor& mask, const ConvLayer& layer) {
  const ConvDims d = conv_dims(x, layer);
  check_mask(x, mask);
  PartialConvResult r{Tensor({d.n, d.cout, d.oh, d.ow}), Tensor({d.n, 1, d.oh, d.ow})};
  const double* wd = layer.weights.data().data();

#pragma omp parallel for collapse(2) schedule(static)
  for (int n = 0; n < d.n; ++n) {
    for (int oy = 0; oy < d.oh; ++oy) {
      for (int ox = 0; ox < d.ow; ++ox) {
        double valid = 0.0;
        double in_bounds = 0.0;
        window_coverage(mask, d, n, oy, ox, valid, in_bounds);
        if (valid <= 0.0) continue;
        r.mask.at(n, 0, oy, ox) = 1.0;
        const double scale = in_bounds / valid;
        for (int co = 0; co < d.cout; ++co) {
          double acc = 0.0;
          for (int ci = 0; ci < d.cin; ++ci) {
            for (int ky = 0; ky < d.k; ++ky) {
              const int iy = oy * d.stride - d.pad + ky;
              if (iy < 0 || iy >= d.h) continue;
              for (int kx = 0; kx < d.k; ++kx) {
                const int ix = ox * d.stride - d.pad + kx;
                if (ix < 0 || ix >= d.w) continue;
                acc += wd[((static_cast<std::size_t>(co) * d.cin + ci) * d.k + ky) * d.k + kx] *
                       (x.at(n, ci, iy, ix) * mask.at(n, 0, iy, ix));
              }
            }
          }
          r.out.at(n, co, oy, ox) = acc * scale + layer.bias[co];
        }
      }
    }
  }
  return r;
}

ConvGrads partial_conv2d_backward(const Tensor& x, const Tensor& mask, const ConvLayer& layer,
                                  const Tensor& dout) {
  const ConvDims d = conv_dims(x, layer);
  check_mask(x, mask);
  if (dout.shape() != std::vector<int>{d.n, d.cout, d.oh, d.ow}) {
    throw Error(ErrorCode::ShapeMismatch, "partial conv output gradient has wrong shape");
  }
  // Fold the renormalization into the upstream gradient; holes get zero.
  Tensor scaled(dout.shape());
  for (int n = 0; n < d.n; ++n) {
    for (int oy = 0; oy < d.oh; ++oy) {
      for (int ox = 0; ox < d.ow; ++ox) {
        double valid = 0.0;
        double in_bounds = 0.0;
        window_coverage(mask, d, n, oy, ox, valid, in_bounds);
        const double scale = valid > 0.0 ? in_bounds / valid : 0.0;
        for (int co = 0; co < d.cout; ++co) {
          scaled.at(n, co, oy, ox) = dout.at(n, co, oy, ox) * scale;
        }
      }
    }
  }
  Tensor masked_x = x;
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.cin; ++c)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx) masked_x.at(n, c, y, xx) *= mask.at(n, 0, y, xx);

  ConvGrads g = conv2d_backward(masked_x, layer, scaled);
  for (int n = 0; n < d.n; ++n)
    for (int c = 0; c < d.cin; ++c)
      for (int y = 0; y < d.h; ++y)
        for (int xx = 0; xx < d.w; ++xx) g.dx.at(n, c, y, xx) *= mask.at(n, 0, y, xx);

  // Bias only reaches positions with at least one valid input.
  for (int co = 0; co < d.cout; ++co) {
    double db = 0.0;
    for (int n = 0; n < d.n; ++n)
      for (int oy = 0; oy < d.oh; ++oy)
        for (int ox = 0; ox < d.ow; ++ox) {
          double valid = 0.0;
          double in_bounds = 0.0;
          window_coverage(mask, d, n, oy, ox, valid, in_bounds);
          if (valid > 0.0) db += dout.at(n, co, oy, ox);
        }
    g.dbias[co] = db;
  }
  return g;
}

ModulationParams ModulationParams::identity(const std::vector<int>& shape, ModulationSource source) {
  return ModulationParams{Tensor(shape, 1.0), Tensor(shape, 0.0), source};
}

Tensor spade_modulate(const Tensor& x, const ModulationParams& p) {
  const ParamIndexer idx = check_modulation(x, p);
  Tensor y(x.shape());
  const std::size_t n = x.size();
#pragma omp parallel for schedule(static)
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = idx(i);
    y[i] = x[i] * p.gamma[j] + p.beta[j];
  }
  return y;
}

SpadeGrads spade_modulate_backward(const Tensor& x, const ModulationParams& p, const Tensor& dy) {
  const ParamIndexer idx = check_modulation(x, p);
  require_same_shape(x, dy, "spade gradient");
  SpadeGrads g{Tensor(x.shape()), {Tensor(p.gamma.shape()), Tensor(p.beta.shape())}};
  // Sequential accumulation keeps broadcast reductions in a fixed order.
  for (std::size_t i = 0; i < x.size(); ++i) {
    const std::size_t j = idx(i);
    g.dx[i] = dy[i] * p.gamma[j];
    g.params.dgamma[j] += dy[i] * x[i];
    g.params.dbeta[j] += dy[i];
  }
  return g;
}

Tensor multi_spade(const Tensor& x, const std::optional<ModulationParams>& label,
                   const std::optional<ModulationParams>& flow,
                   const std::optional<ModulationParams>& guidance) {
  if (!label) throw Error(ErrorCode::MissingLabel, "label modulation is required");
  Tensor y = spade_modulate(x, *label);
  if (flow) y = spade_modulate(y, *flow);
  if (guidance) y = spade_modulate(y, *guidance);
  return y;
}

MultiSpadeGrads multi_spade_backward(const Tensor& x, const ModulationParams& label,
                                     const std::optional<ModulationParams>& flow,
                                     const std::optional<ModulationParams>& guidance,
                                     const Tensor& dy) {
  const Tensor y1 = spade_modulate(x, label);
  const Tensor y2 = flow ? spade_modulate(y1, *flow) : y1;

  MultiSpadeGrads g;
  Tensor grad = dy;
  if (guidance) {
    SpadeGrads s = spade_modulate_backward(y2, *guidance, grad);
    g.guidance = std::move(s.params);
    grad = std::move(s.dx);
  }
  if (flow) {
    SpadeGrads s = spade_modulate_backward(y1, *flow, grad);
    g.flow = std::move(s.params);
    grad = std::move(s.dx);
  }
  SpadeGrads s = spade_modulate_backward(x, label, grad);
  g.label = std::move(s.params);
  g.dx = std::move(s.dx);
  return g;
}

Tensor instance_norm(const Tensor& x) {
  require_rank(x, 4, "instance_norm input");
  Tensor y(x.shape());
  const int n = x.dim(0), c = x.dim(1);
  const std::size_t hw = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
#pragma omp parallel for collapse(2) schedule(static)
  for (int i = 0; i < n; ++i) {
    for (int ch = 0; ch < c; ++ch) {
      const std::size_t base = x.offset(i, ch, 0, 0);
      double mean = 0.0;
      for (std::size_t k = 0; k < hw; ++k) mean += x[base + k];
      mean /= static_cast<double>(hw);
      double var = 0.0;
      for (std::size_t k = 0; k < hw; ++k) var += (x[base + k] - mean) * (x[base + k] - mean);
      var /= static_cast<double>(hw);
      const double inv = 1.0 / std::sqrt(var + kNormEpsilon);
      for (std::size_t k = 0; k < hw; ++k) y[base + k] = (x[base + k] - mean) * inv;
    }
  }
  return y;
}

Tensor relu(const Tensor& x) {
  return map(x, [](double v) { return v > 0.0 ? v : 0.0; });
}

Tensor leaky_relu(const Tensor& x, double slope) {
  return map(x, [slope](double v) { return v > 0.0 ? v : v * slope; });
}

Tensor tanh(const Tensor& x) {
  return map(x, [](double v) { return std::tanh(v); });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += b[i];
  return out;
}

Tensor upsample_nearest2x(const Tensor& x) {
  require_rank(x, 4, "upsample input");
  Tensor out({x.dim(0), x.dim(1), x.dim(2) * 2, x.dim(3) * 2});
  for (int n = 0; n < out.dim(0); ++n)
    for (int c = 0; c < out.dim(1); ++c)
      for (int y = 0; y < out.dim(2); ++y)
        for (int xx = 0; xx < out.dim(3); ++xx) out.at(n, c, y, xx) = x.at(n, c, y / 2, xx / 2);
  return out;
}

Tensor avg_pool2x(const Tensor& x) {
  require_rank(x, 4, "pool input");
  if (x.dim(2) % 2 != 0 || x.dim(3) % 2 != 0) {
    throw Error(ErrorCode::ShapeMismatch, "avg_pool2x needs even spatial extents");
  }
  Tensor out({x.dim(0), x.dim(1), x.dim(2) / 2, x.dim(3) / 2});
  for (int n = 0; n < out.dim(0); ++n)
    for (int c = 0; c < out.dim(1); ++c)
      for (int y = 0; y < out.dim(2); ++y)
        for (int xx = 0; xx < out.dim(3); ++xx)
          out.at(n, c, y, xx) = 0.25 * (x.at(n, c, 2 * y, 2 * xx) + x.at(n, c, 2 * y, 2 * xx + 1) +
                                        x.at(n, c, 2 * y + 1, 2 * xx) +
                                        x.at(n, c, 2 * y + 1, 2 * xx + 1));
  return out;
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw Error(ErrorCode::EmptyInput, "nothing to concatenate");
  int channels = 0;
  for (const auto& p : parts) {
    require_rank(p, 4, "concat input");
    if (p.dim(0) != parts[0].dim(0) || p.dim(2) != parts[0].dim(2) || p.dim(3) != parts[0].dim(3)) {
      throw Error(ErrorCode::ShapeMismatch, "concat inputs differ in N/H/W");
    }
    channels += p.dim(1);
  }
  Tensor out({parts[0].dim(0), channels, parts[0].dim(2), parts[0].dim(3)});
  const std::size_t hw = static_cast<std::size_t>(out.dim(2)) * out.dim(3);
  for (int n = 0; n < out.dim(0); ++n) {
    int c0 = 0;
    for (const auto& p : parts) {
      const std::size_t count = static_cast<std::size_t>(p.dim(1)) * hw;
      std::copy_n(p.data().begin() + static_cast<std::ptrdiff_t>(p.offset(n, 0, 0, 0)), count,
                  out.data().begin() + static_cast<std::ptrdiff_t>(out.offset(n, c0, 0, 0)));
      c0 += p.dim(1);
    }
  }
  return out;
}

LinearLayer LinearLayer::seeded(int out, int in, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  LinearLayer layer{Tensor({out, in}), Tensor({out})};
  for (double& v : layer.weights.data()) v = round_to_float(rng.uniform(-bound, bound));
  for (double& v : layer.bias.data()) v = round_to_float(rng.uniform(-bound, bound));
  return layer;
}

Tensor linear(const Tensor& x, const LinearLayer& layer) {
  const int n = x.dim(0);
  const std::size_t in = x.size() / static_cast<std::size_t>(n);
  if (static_cast<int>(in) != layer.weights.dim(1)) {
    throw Error(ErrorCode::ShapeMismatch, "linear input width mismatch");
  }
  const int out_dim = layer.weights.dim(0);
  Tensor out({n, out_dim});
  for (int i = 0; i < n; ++i) {
    for (int o = 0; o < out_dim; ++o) {
      double acc = 0.0;
      for (std::size_t k = 0; k < in; ++k) {
        acc += layer.weights[static_cast<std::size_t>(o) * in + k] * x[static_cast<std::size_t>(i) * in + k];
      }
      out[static_cast<std::size_t>(i) * out_dim + o] = acc + layer.bias[o];
    }
  }
  return out;
}

}  // namespace wcvs
