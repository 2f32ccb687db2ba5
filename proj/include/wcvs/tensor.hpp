#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "wcvs/random.hpp"

namespace wcvs {

// Dense row-major array of doubles. Activations use N x C x H x W.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0);
  Tensor(std::vector<int> shape, std::vector<double> data);

  const std::vector<int>& shape() const { return shape_; }
  int rank() const { return static_cast<int>(shape_.size()); }
  int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  // 4-D accessors (N, C, H, W).
  std::size_t offset(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + y) * shape_[3] + x;
  }
  double& at(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  double at(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  Tensor reshaped(std::vector<int> shape) const;
  bool all_finite() const;
  std::string shape_string() const;

  bool operator==(const Tensor&) const = default;

  static Tensor uniform(std::vector<int> shape, Rng& rng, double lo, double hi);

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

std::string shape_string(const std::vector<int>& shape);

// Throws Error(ShapeMismatch) with `what` when shapes differ.
void require_same_shape(const Tensor& a, const Tensor& b, const char* what);
void require_rank(const Tensor& t, int rank, const char* what);

// Cout x Cin x K x K weights, Cout bias. K must be odd.
struct ConvLayer {
  Tensor weights;
  Tensor bias;
  int stride = 1;
  int padding = 0;

  int out_channels() const { return weights.dim(0); }
  int in_channels() const { return weights.dim(1); }
  int kernel() const { return weights.dim(2); }
  void validate() const;

  // Weights and bias uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], rounded to
  // float precision so float32 weight blobs reload exactly.
  static ConvLayer seeded(int cout, int cin, int k, int stride, int padding, Rng& rng);
  static ConvLayer zeros(int cout, int cin, int k, int stride, int padding);
};

int conv_output_extent(int extent, int kernel, int stride, int padding);

Tensor conv2d(const Tensor& x, const ConvLayer& layer);

struct ConvGrads {
  Tensor dx;
  Tensor dweights;
  Tensor dbias;
};
ConvGrads conv2d_backward(const Tensor& x, const ConvLayer& layer, const Tensor& dout);

struct PartialConvResult {
  Tensor out;
  Tensor mask;  // N x 1 x H' x W', values in {0,1}
};

// Convolution over mask-valid inputs only. The window sum is renormalized by
// (in-bounds window size) / (valid count); windows with no valid input give
// zero output and a zero updated mask.
PartialConvResult partial_conv2d(const Tensor& x, const Tensor& mask, const ConvLayer& layer);
ConvGrads partial_conv2d_backward(const Tensor& x, const Tensor& mask, const ConvLayer& layer,
                                  const Tensor& dout);

enum class ModulationSource { Label, Flow, Guidance };

// gamma/beta are C x H x W (broadcast over batch) or N x C x H x W.
struct ModulationParams {
  Tensor gamma;
  Tensor beta;
  ModulationSource source = ModulationSource::Label;

  static ModulationParams identity(const std::vector<int>& shape, ModulationSource source);
};

// y = x * gamma + beta, elementwise.
Tensor spade_modulate(const Tensor& x, const ModulationParams& p);

struct ModulationGrads {
  Tensor dgamma;
  Tensor dbeta;
};
struct SpadeGrads {
  Tensor dx;
  ModulationGrads params;
};
SpadeGrads spade_modulate_backward(const Tensor& x, const ModulationParams& p, const Tensor& dy);

// Applies label, then flow, then guidance modulation. Absent optional
// sources are skipped. Throws Error(MissingLabel) when label is absent.
Tensor multi_spade(const Tensor& x, const std::optional<ModulationParams>& label,
                   const std::optional<ModulationParams>& flow,
                   const std::optional<ModulationParams>& guidance);

struct MultiSpadeGrads {
  Tensor dx;
  ModulationGrads label;
  std::optional<ModulationGrads> flow;
  std::optional<ModulationGrads> guidance;
};
MultiSpadeGrads multi_spade_backward(const Tensor& x, const ModulationParams& label,
                                     const std::optional<ModulationParams>& flow,
                                     const std::optional<ModulationParams>& guidance,
                                     const Tensor& dy);

// Parameter-free per-(n, c) standardization over H x W.
inline constexpr double kNormEpsilon = 1e-5;
Tensor instance_norm(const Tensor& x);

Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x, double slope = 0.2);
Tensor tanh(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor upsample_nearest2x(const Tensor& x);
Tensor avg_pool2x(const Tensor& x);
// Concatenates N x Ci x H x W tensors along channels.
Tensor concat_channels(const std::vector<Tensor>& parts);

struct LinearLayer {
  Tensor weights;  // out x in
  Tensor bias;     // out

  static LinearLayer seeded(int out, int in, Rng& rng);
};
// x: N x in (any trailing shape flattened). Returns N x out.
Tensor linear(const Tensor& x, const LinearLayer& layer);

namespace serial {
// Single-threaded references with the same contracts.
Tensor conv2d(const Tensor& x, const ConvLayer& layer);
PartialConvResult partial_conv2d(const Tensor& x, const Tensor& mask, const ConvLayer& layer);
}  // namespace serial

}  // namespace wcvs
