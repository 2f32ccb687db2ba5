#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wcvs/image.hpp"
#include "wcvs/tensor.hpp"
#include "wcvs/world.hpp"

namespace wcvs {

enum class NetworkRole {
  LabelEmbed,
  FlowEmbed,
  GuidanceEmbed,
  ImageEncoder,
  SegEncoder,
  Generator,
  ImageDiscriminator,
  VideoDiscriminator,
};

std::string to_string(NetworkRole role);
NetworkRole role_from_string(const std::string& name);

// Toy-scale topology description. Stage lists run coarse to fine.
//  - embeddings: `widths` are the feature widths emitted per generator stage;
//    GuidanceEmbed also needs `target_widths` (generator widths).
//  - generator: `widths` per stage, `condition_widths` = embedding widths.
//  - encoders / discriminators: `widths` per strided conv layer.
struct NetworkSpec {
  NetworkRole role = NetworkRole::Generator;
  int input_channels = 3;
  std::vector<int> widths;
  std::vector<int> condition_widths;
  std::vector<int> target_widths;
  int height = 64;
  int width = 64;
  int style_dim = 32;
  int video_window = 3;
  int num_scales = 2;
  std::uint64_t seed = 0;

  // Throws Error(BadSpec).
  void validate() const;
  bool operator==(const NetworkSpec&) const = default;
};

// Generator stage count must equal the embedding output count, and the
// generator's condition widths must equal the embedding widths.
void check_compatible(const NetworkSpec& generator, const NetworkSpec& embedding);

// Consistent set of toy specs: 4 generator stages {64,32,16,8}.
struct ToyModelSpecs {
  NetworkSpec label_embed;
  NetworkSpec flow_embed;
  NetworkSpec guidance_embed;
  NetworkSpec image_encoder;
  NetworkSpec seg_encoder;
  NetworkSpec generator;
  NetworkSpec image_discriminator;
  NetworkSpec video_discriminator;

  std::vector<NetworkSpec> all() const;
};
ToyModelSpecs toy_model_specs(int height, int width, int label_channels, std::uint64_t seed,
                              std::vector<int> generator_widths = {64, 32, 16, 8});

using NamedTensor = std::pair<std::string, Tensor*>;
using ConstNamedTensor = std::pair<std::string, const Tensor*>;

// Encoder-decoder used for label and flow-warped-frame embeddings.
class LabelEmbedding {
 public:
  explicit LabelEmbedding(NetworkSpec spec);
  const NetworkSpec& spec() const { return spec_; }
  // One ReLU feature map per generator stage, coarse to fine.
  std::vector<Tensor> forward(const Tensor& input) const;
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
  void zero_biases();

 private:
  NetworkSpec spec_;
  std::vector<ConvLayer> encoder_;
  std::vector<ConvLayer> decoder_;
};

enum class ConvMode { Partial, Plain };

// Same topology as LabelEmbedding built from partial convolutions that thread
// the validity mask, plus per-stage heads producing (1 + dgamma, dbeta). The
// heads start at zero, so a fresh network yields identity modulation.
class GuidanceEmbedding {
 public:
  explicit GuidanceEmbedding(NetworkSpec spec);
  const NetworkSpec& spec() const { return spec_; }
  std::vector<ModulationParams> forward(const Tensor& rgb, const Tensor& mask,
                                        ConvMode mode = ConvMode::Partial) const;
  // Feature maps before the heads, with the propagated masks.
  std::pair<std::vector<Tensor>, std::vector<Tensor>> features(const Tensor& rgb, const Tensor& mask,
                                                               ConvMode mode) const;
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
  // Seeds the heads as well (used to exercise non-trivial guidance paths).
  void randomize_heads(std::uint64_t seed);

 private:
  NetworkSpec spec_;
  std::vector<ConvLayer> encoder_;
  std::vector<ConvLayer> decoder_;
  std::vector<ConvLayer> gamma_heads_;
  std::vector<ConvLayer> beta_heads_;
};

// Strided conv stack + linear layer mapping an image or label map to a
// fixed-length style vector.
class StyleEncoder {
 public:
  explicit StyleEncoder(NetworkSpec spec);
  const NetworkSpec& spec() const { return spec_; }
  Tensor forward(const Tensor& input) const;  // N x style_dim
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;
  void zero_biases();

 private:
  NetworkSpec spec_;
  std::vector<ConvLayer> convs_;
  LinearLayer fc_;
};

// Modulation heads for one Multi-SPADE site.
struct SpadeSiteHeads {
  ConvLayer label_gamma, label_beta;
  ConvLayer flow_gamma, flow_beta;
};

// Linear style projection, then per stage: (upsample + 1x1 transition), one
// M-SPADE residual block with two Multi-SPADE sites. Output (tanh + 1) / 2.
class Generator {
 public:
  explicit Generator(NetworkSpec spec);
  const NetworkSpec& spec() const { return spec_; }
  std::vector<std::vector<int>> stage_shapes() const;  // C x H x W per stage

  // style: N x style_dim. label_feats per stage; flow/guidance optional.
  Tensor forward(const Tensor& style, const std::vector<Tensor>& label_feats,
                 const std::optional<std::vector<Tensor>>& flow_feats,
                 const std::optional<std::vector<ModulationParams>>& guidance) const;

  // Forces label and flow heads to identity modulation.
  void set_identity_heads();
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;

 private:
  Tensor mspade(const Tensor& x, const SpadeSiteHeads& heads, const Tensor& label_feat,
                const Tensor* flow_feat, const ModulationParams* guidance) const;

  NetworkSpec spec_;
  LinearLayer fc_;
  std::vector<ConvLayer> transitions_;  // stages 1..S-1
  std::vector<std::array<SpadeSiteHeads, 2>> heads_;
  std::vector<std::array<ConvLayer, 2>> block_convs_;
  ConvLayer out_conv_;
};

struct DiscriminatorOutput {
  std::vector<Tensor> logits;    // one per scale
  std::vector<Tensor> features;  // per layer, all scales
};

// Multi-scale patch discriminator over images (image role) or K
// channel-concatenated frames (video role).
class PatchDiscriminator {
 public:
  explicit PatchDiscriminator(NetworkSpec spec);
  const NetworkSpec& spec() const { return spec_; }
  DiscriminatorOutput forward(const Tensor& input) const;
  std::vector<NamedTensor> parameters();
  std::vector<ConstNamedTensor> parameters() const;

 private:
  NetworkSpec spec_;
  std::vector<std::vector<ConvLayer>> scales_;
};

// Frame <-> 1 x 3 x H x W tensor.
Tensor frame_to_tensor(const Frame& frame);
Frame tensor_to_frame(const Tensor& t, int n = 0);
// GuidanceImage -> (1 x 3 x H x W rgb, 1 x 1 x H x W mask).
std::pair<Tensor, Tensor> guidance_to_tensors(const GuidanceImage& g);

// Thin entry points over the network classes.
std::vector<Tensor> embed_labels(const Tensor& labels, const LabelEmbedding& net);
std::vector<ModulationParams> embed_guidance(const GuidanceImage& g, const GuidanceEmbedding& net,
                                             ConvMode mode = ConvMode::Partial);
Frame generator_forward(const Generator& gen, const Tensor& style,
                        const std::vector<Tensor>& label_feats,
                        const std::optional<std::vector<Tensor>>& flow_feats,
                        const std::optional<std::vector<ModulationParams>>& guidance);
Tensor encode_previous(const Frame& frame, const StyleEncoder& net);
Tensor encode_labels(const Tensor& labels, const StyleEncoder& net);

// Frame indices {t - (K-1)*stride, ..., t - stride, t} for a video window.
// Throws Error(WindowTooShort) when the window starts before frame 0.
std::vector<std::size_t> video_window_indices(std::size_t t, int window, int stride);
// Concatenates the selected frames channel-wise: 1 x 3K x H x W.
Tensor stack_window(const std::vector<Frame>& frames, std::size_t t, int window, int stride);

}  // namespace wcvs
