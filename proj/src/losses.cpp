#include "wcvs/losses.hpp"

#include <cmath>

#include "wcvs/error.hpp"

namespace wcvs {

namespace {

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

void check_logits(const std::vector<Tensor>& logits) {
  if (logits.empty()) throw Error(ErrorCode::EmptyInput, "no discriminator logits");
  for (const auto& t : logits) {
    if (t.empty()) throw Error(ErrorCode::EmptyInput, "empty logit tensor");
  }
}

// Mean over scales of the per-scale mean of f(logit).
template <typename F>
double scale_mean(const std::vector<Tensor>& logits, F&& f) {
  double total = 0.0;
  for (const auto& t : logits) {
    double s = 0.0;
    for (double v : t.data()) s += f(v);
    total += s / static_cast<double>(t.size());
  }
  return total / static_cast<double>(logits.size());
}

template <typename F>
std::vector<Tensor> scale_mean_grad(const std::vector<Tensor>& logits, F&& df) {
  std::vector<Tensor> out;
  for (const auto& t : logits) {
    Tensor g(t.shape());
    const double w = 1.0 / (static_cast<double>(t.size()) * static_cast<double>(logits.size()));
    for (std::size_t i = 0; i < t.size(); ++i) g[i] = df(t[i]) * w;
    out.push_back(std::move(g));
  }
  return out;
}

void check_pair(const Frame& a, const Frame& b) {
  check_frame(a);
  if (!a.same_shape(b)) throw Error(ErrorCode::ShapeMismatch, "frames differ in shape");
}

Image tensor_grad_to_image(const Tensor& t) {
  Image img(t.dim(2), t.dim(3), t.dim(1));
  for (int c = 0; c < t.dim(1); ++c)
    for (int y = 0; y < t.dim(2); ++y)
      for (int x = 0; x < t.dim(3); ++x) img.at(y, x, c) = t.at(0, c, y, x);
  return img;
}

}  // namespace

void LossWeights::validate() const {
  for (double w : {image, video, feature_matching, perceptual, flow, world}) {
    if (!std::isfinite(w) || w < 0.0) throw Error(ErrorCode::OutOfRange, "loss weights must be finite and >= 0");
  }
}

double total_objective(const LossTerms& t, const LossWeights& w) {
  return w.image * t.image + w.video * t.video + w.feature_matching * t.feature_matching +
         w.perceptual * t.perceptual + w.flow * t.flow + w.world * t.world;
}

HingeDiscriminatorTerms hinge_d(const std::vector<Tensor>& real_logits,
                                const std::vector<Tensor>& fake_logits) {
  check_logits(real_logits);
  check_logits(fake_logits);
  return {scale_mean(real_logits, [](double d) { return std::min(0.0, -1.0 + d); }),
          scale_mean(fake_logits, [](double d) { return std::min(0.0, -1.0 - d); })};
}

double hinge_g(const std::vector<Tensor>& fake_logits) {
  check_logits(fake_logits);
  return -scale_mean(fake_logits, [](double d) { return d; });
}

HingeDGrads hinge_d_backward(const std::vector<Tensor>& real_logits,
                             const std::vector<Tensor>& fake_logits) {
  check_logits(real_logits);
  check_logits(fake_logits);
  return {scale_mean_grad(real_logits, [](double d) { return d < 1.0 ? 1.0 : 0.0; }),
          scale_mean_grad(fake_logits, [](double d) { return d > -1.0 ? -1.0 : 0.0; })};
}

std::vector<Tensor> hinge_g_backward(const std::vector<Tensor>& fake_logits) {
  check_logits(fake_logits);
  return scale_mean_grad(fake_logits, [](double) { return -1.0; });
}

HingeDiscriminatorTerms hinge_d_image(const DiscriminatorOutput& real, const DiscriminatorOutput& fake) {
  return hinge_d(real.logits, fake.logits);
}

double hinge_g_image(const DiscriminatorOutput& fake) { return hinge_g(fake.logits); }

HingeDiscriminatorTerms hinge_d_video(const std::vector<Frame>& real, const std::vector<Frame>& fake,
                                      std::size_t t, const PatchDiscriminator& dv, int stride) {
  const int k = dv.spec().video_window;
  return hinge_d(dv.forward(stack_window(real, t, k, stride)).logits,
                 dv.forward(stack_window(fake, t, k, stride)).logits);
}

double hinge_g_video(const std::vector<Frame>& fake, std::size_t t, const PatchDiscriminator& dv,
                     int stride) {
  return hinge_g(dv.forward(stack_window(fake, t, dv.spec().video_window, stride)).logits);
}

double feature_matching(const std::vector<Tensor>& real, const std::vector<Tensor>& fake) {
  if (real.size() != fake.size()) {
    throw Error(ErrorCode::LayerMismatch, std::to_string(real.size()) + " real layers vs " +
                                              std::to_string(fake.size()) + " fake layers");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < real.size(); ++i) {
    if (real[i].shape() != fake[i].shape() || real[i].empty()) {
      throw Error(ErrorCode::LayerMismatch, "layer " + std::to_string(i) + " shapes differ");
    }
    double s = 0.0;
    for (std::size_t k = 0; k < real[i].size(); ++k) s += std::abs(real[i][k] - fake[i][k]);
    total += s / static_cast<double>(real[i].size());
  }
  return total;
}

std::vector<Tensor> feature_matching_backward(const std::vector<Tensor>& real,
                                              const std::vector<Tensor>& fake) {
  feature_matching(real, fake);  // validates
  std::vector<Tensor> out;
  for (std::size_t i = 0; i < real.size(); ++i) {
    Tensor g(fake[i].shape());
    const double inv = 1.0 / static_cast<double>(fake[i].size());
    for (std::size_t k = 0; k < g.size(); ++k) g[k] = sign(fake[i][k] - real[i][k]) * inv;
    out.push_back(std::move(g));
  }
  return out;
}

FeatureExtractor::FeatureExtractor(std::uint64_t seed, std::vector<int> taps) : taps_(std::move(taps)) {
  Rng rng(seed ^ 0x5053495F46454154ULL);
  layers_.push_back(ConvLayer::seeded(8, 3, 3, 1, 1, rng));
  layers_.push_back(ConvLayer::seeded(8, 8, 3, 2, 1, rng));
  layers_.push_back(ConvLayer::seeded(16, 8, 3, 1, 1, rng));
  layers_.push_back(ConvLayer::seeded(16, 16, 3, 2, 1, rng));
  if (taps_.empty()) throw Error(ErrorCode::BadSpec, "feature extractor needs at least one tap");
  for (std::size_t i = 0; i < taps_.size(); ++i) {
    if (taps_[i] < 0 || taps_[i] >= static_cast<int>(layers_.size()) ||
        (i > 0 && taps_[i] <= taps_[i - 1])) {
      throw Error(ErrorCode::BadSpec, "taps must be increasing layer indices in [0, 4)");
    }
  }
}

std::vector<Tensor> FeatureExtractor::activations(const Tensor& x) const {
  std::vector<Tensor> acts;
  Tensor h = x;
  for (int l = 0; l <= taps_.back(); ++l) {
    h = tanh(conv2d(h, layers_[l]));
    acts.push_back(h);
  }
  return acts;
}

std::vector<Tensor> FeatureExtractor::forward(const Tensor& x) const {
  const auto acts = activations(x);
  std::vector<Tensor> out;
  for (int t : taps_) out.push_back(acts[t]);
  return out;
}

Tensor FeatureExtractor::backward(const Tensor& x, const std::vector<Tensor>& dtaps) const {
  if (dtaps.size() != taps_.size()) throw Error(ErrorCode::LayerMismatch, "one gradient per tap required");
  const auto acts = activations(x);
  Tensor grad(acts.back().shape());
  std::size_t tap = taps_.size();
  for (int l = taps_.back(); l >= 0; --l) {
    if (tap > 0 && taps_[tap - 1] == l) {
      grad = add(grad, dtaps[--tap]);
    }
    Tensor dpre = grad;
    for (std::size_t i = 0; i < dpre.size(); ++i) dpre[i] *= 1.0 - acts[l][i] * acts[l][i];
    const Tensor& input = l == 0 ? x : acts[l - 1];
    grad = conv2d_backward(input, layers_[l], dpre).dx;
  }
  return grad;
}

double perceptual(const Frame& real, const Frame& fake, const FeatureExtractor& psi) {
  check_pair(real, fake);
  return feature_matching(psi.forward(frame_to_tensor(real)), psi.forward(frame_to_tensor(fake)));
}

Image perceptual_backward(const Frame& real, const Frame& fake, const FeatureExtractor& psi) {
  check_pair(real, fake);
  const Tensor fake_t = frame_to_tensor(fake);
  const auto dfeat = feature_matching_backward(psi.forward(frame_to_tensor(real)), psi.forward(fake_t));
  return tensor_grad_to_image(psi.backward(fake_t, dfeat));
}

MaskedMean flow_warp_loss(const Frame& current, const Frame& previous, const FlowField& flow,
                          bool masked) {
  check_pair(current, previous);
  const WarpResult w = warp(previous, flow);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < current.height(); ++y) {
    for (int x = 0; x < current.width(); ++x) {
      if (masked && !w.coverage.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) sum += std::abs(current.at(y, x, c) - w.image.at(y, x, c));
      ++count;
    }
  }
  return {count ? sum / (3.0 * static_cast<double>(count)) : 0.0, count};
}

FlowWarpGrads flow_warp_loss_backward(const Frame& current, const Frame& previous,
                                      const FlowField& flow, bool masked) {
  check_pair(current, previous);
  const WarpResult w = warp(previous, flow);
  const std::size_t count = masked ? w.coverage.count() : current.pixel_count();
  FlowWarpGrads g{Image(current.height(), current.width(), 3), Image()};
  Image dwarped(current.height(), current.width(), 3);
  if (count > 0) {
    const double inv = 1.0 / (3.0 * static_cast<double>(count));
    for (int y = 0; y < current.height(); ++y) {
      for (int x = 0; x < current.width(); ++x) {
        if (masked && !w.coverage.at(y, x)) continue;
        for (int c = 0; c < 3; ++c) {
          const double s = sign(current.at(y, x, c) - w.image.at(y, x, c)) * inv;
          g.current.at(y, x, c) = s;
          dwarped.at(y, x, c) = -s;
        }
      }
    }
  }
  g.previous = warp_adjoint(flow, dwarped, previous.height(), previous.width());
  return g;
}

namespace {
void check_guidance(const Frame& frame, const GuidanceImage& g) {
  check_frame(frame);
  if (!frame.same_shape(g.rgb) || g.valid.height() != frame.height() || g.valid.width() != frame.width()) {
    throw Error(ErrorCode::ShapeMismatch, "frame and guidance differ in shape");
  }
}
}  // namespace

MaskedMean world_consistency_loss(const Frame& frame, const GuidanceImage& g) {
  check_guidance(frame, g);
  double sum = 0.0;
  std::size_t count = 0;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!g.valid.at(y, x)) continue;
      for (int c = 0; c < 3; ++c) sum += std::abs(frame.at(y, x, c) - g.rgb.at(y, x, c));
      ++count;
    }
  }
  return {count ? sum / (3.0 * static_cast<double>(count)) : 0.0, count};
}

Image world_consistency_loss_backward(const Frame& frame, const GuidanceImage& g) {
  check_guidance(frame, g);
  Image grad(frame.height(), frame.width(), 3);
  const std::size_t count = g.valid.count();
  if (count == 0) return grad;
  const double inv = 1.0 / (3.0 * static_cast<double>(count));
  for (int y = 0; y < frame.height(); ++y)
    for (int x = 0; x < frame.width(); ++x)
      if (g.valid.at(y, x))
        for (int c = 0; c < 3; ++c) grad.at(y, x, c) = sign(frame.at(y, x, c) - g.rgb.at(y, x, c)) * inv;
  return grad;
}

}  // namespace wcvs
