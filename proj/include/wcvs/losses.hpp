#pragma once

#include <cstdint>
#include <vector>

#include "wcvs/flow.hpp"
#include "wcvs/image.hpp"
#include "wcvs/nn.hpp"
#include "wcvs/tensor.hpp"
#include "wcvs/world.hpp"

namespace wcvs {

// Weights of the six-term generator objective.
struct LossWeights {
  double image = 1.0;              // image GAN
  double video = 1.0;              // video GAN
  double feature_matching = 10.0;
  double perceptual = 10.0;
  double flow = 10.0;              // flow-warp
  double world = 10.0;             // world-consistency

  void validate() const;  // Throws Error(OutOfRange) for negative or non-finite weights.
  bool operator==(const LossWeights&) const = default;
};

struct LossTerms {
  double image = 0.0;
  double video = 0.0;
  double feature_matching = 0.0;
  double perceptual = 0.0;
  double flow = 0.0;
  double world = 0.0;
};

// Sum of weight * term. Terms are in generator (minimizer) form.
double total_objective(const LossTerms& terms, const LossWeights& weights);

// Discriminator hinge objective, reported as the quantity the discriminator
// maximizes: E[min(0, -1 + D(real))] + E[min(0, -1 - D(fake))]. Both terms
// are <= 0. A minimizer uses minimizer_loss() = -(real + fake).
// Expectations average each scale's elements, then average over scales.
struct HingeDiscriminatorTerms {
  double real = 0.0;
  double fake = 0.0;
  double objective() const { return real + fake; }
  double minimizer_loss() const { return -(real + fake); }
};

// Throws Error(EmptyInput) when there are no logits.
HingeDiscriminatorTerms hinge_d(const std::vector<Tensor>& real_logits,
                                const std::vector<Tensor>& fake_logits);
// Generator side: -E[D(fake)].
double hinge_g(const std::vector<Tensor>& fake_logits);

// Gradients of hinge_d(...).objective() and hinge_g(...) w.r.t. the logits.
struct HingeDGrads {
  std::vector<Tensor> real;
  std::vector<Tensor> fake;
};
HingeDGrads hinge_d_backward(const std::vector<Tensor>& real_logits,
                             const std::vector<Tensor>& fake_logits);
std::vector<Tensor> hinge_g_backward(const std::vector<Tensor>& fake_logits);

HingeDiscriminatorTerms hinge_d_image(const DiscriminatorOutput& real, const DiscriminatorOutput& fake);
double hinge_g_image(const DiscriminatorOutput& fake);

// Video terms on the window of `window` frames ending at t, frames spaced by
// `stride` (1 and 2 give the two temporal scales). Throws Error(WindowTooShort).
HingeDiscriminatorTerms hinge_d_video(const std::vector<Frame>& real, const std::vector<Frame>& fake,
                                      std::size_t t, const PatchDiscriminator& dv, int stride);
double hinge_g_video(const std::vector<Frame>& fake, std::size_t t, const PatchDiscriminator& dv,
                     int stride);

// Sum over layers of mean |real - fake|. Throws Error(LayerMismatch).
double feature_matching(const std::vector<Tensor>& real, const std::vector<Tensor>& fake);
// Gradient w.r.t. the fake features.
std::vector<Tensor> feature_matching_backward(const std::vector<Tensor>& real,
                                              const std::vector<Tensor>& fake);

// Frozen seeded conv stack standing in for a pretrained feature network.
// Four 3x3 conv + tanh layers (3->8, 8->8 /2, 8->16, 16->16 /2); the
// outputs of the layers listed in `taps` feed the perceptual loss.
class FeatureExtractor {
 public:
  explicit FeatureExtractor(std::uint64_t seed, std::vector<int> taps = {1, 3});
  std::vector<Tensor> forward(const Tensor& x) const;
  // Backpropagates gradients on the tapped outputs to the input.
  Tensor backward(const Tensor& x, const std::vector<Tensor>& dtaps) const;
  const std::vector<int>& taps() const { return taps_; }

 private:
  std::vector<Tensor> activations(const Tensor& x) const;
  std::vector<ConvLayer> layers_;
  std::vector<int> taps_;
};

// Sum over taps of mean |psi(x) - psi(x_fake)|. Throws Error(ShapeMismatch).
double perceptual(const Frame& real, const Frame& fake, const FeatureExtractor& psi);
// Gradient w.r.t. the fake frame (H x W x 3).
Image perceptual_backward(const Frame& real, const Frame& fake, const FeatureExtractor& psi);

struct MaskedMean {
  double value = 0.0;
  std::size_t count = 0;  // pixels averaged over
};

// Mean |x_t - warp(x_prev)|. masked = true averages only covered pixels.
MaskedMean flow_warp_loss(const Frame& current, const Frame& previous, const FlowField& flow,
                          bool masked = true);
struct FlowWarpGrads {
  Image current;
  Image previous;
};
FlowWarpGrads flow_warp_loss_backward(const Frame& current, const Frame& previous,
                                      const FlowField& flow, bool masked = true);

// Mean |x_t - g| over valid guidance pixels, normalized by 3 * valid count.
// An empty mask gives value 0 with count 0.
MaskedMean world_consistency_loss(const Frame& frame, const GuidanceImage& guidance);
Image world_consistency_loss_backward(const Frame& frame, const GuidanceImage& guidance);

}  // namespace wcvs
