#include "wcvs/nn.hpp"

#include <cmath>

#include "wcvs/error.hpp"

namespace wcvs {

namespace {

std::uint64_t role_salt(NetworkRole role) {
  return 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(role) + 1);
}

Rng network_rng(const NetworkSpec& spec) { return Rng(spec.seed ^ role_salt(spec.role)); }

int stage_count(const NetworkSpec& spec) { return static_cast<int>(spec.widths.size()); }

void require_positive(const std::vector<int>& v, const char* what) {
  for (int w : v) {
    if (w <= 0) throw Error(ErrorCode::BadSpec, std::string(what) + " must be positive");
  }
}

void require_divisible(const NetworkSpec& spec, int levels) {
  const int f = 1 << levels;
  if (spec.height % f != 0 || spec.width % f != 0) {
    throw Error(ErrorCode::BadSpec, "frame size must be divisible by " + std::to_string(f));
  }
}

void append(std::vector<NamedTensor>& out, const std::string& prefix, ConvLayer& layer) {
  out.emplace_back(prefix + ".weight", &layer.weights);
  out.emplace_back(prefix + ".bias", &layer.bias);
}

template <typename Net>
std::vector<ConstNamedTensor> as_const(Net& net) {
  std::vector<ConstNamedTensor> out;
  for (auto& [name, t] : net.parameters()) out.emplace_back(name, t);
  return out;
}

void check_input(const Tensor& x, int channels, int height, int width, const char* what) {
  require_rank(x, 4, what);
  if (x.dim(1) != channels || x.dim(2) != height || x.dim(3) != width) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + " must be N x " + std::to_string(channels) + " x " +
                    std::to_string(height) + " x " + std::to_string(width) + ", got " +
                    x.shape_string());
  }
}

// Encoder convs (full-res stem, then stride-2 downsamples toward stage 0) and
// decoder convs (stage s-1 -> s after upsampling) for an S-stage embedding.
void build_encoder_decoder(const NetworkSpec& spec, Rng& rng, std::vector<ConvLayer>& encoder,
                           std::vector<ConvLayer>& decoder) {
  const auto& e = spec.widths;
  const int s = stage_count(spec);
  encoder.push_back(ConvLayer::seeded(e[s - 1], spec.input_channels, 3, 1, 1, rng));
  for (int d = 1; d < s; ++d) {
    encoder.push_back(ConvLayer::seeded(e[s - 1 - d], e[s - d], 3, 2, 1, rng));
  }
  for (int k = 1; k < s; ++k) {
    decoder.push_back(ConvLayer::seeded(e[k], e[k - 1], 3, 1, 1, rng));
  }
}

Tensor tanh_to_unit(const Tensor& x) {
  Tensor out = x;
  for (double& v : out.data()) v = 0.5 * (std::tanh(v) + 1.0);
  return out;
}

ModulationParams head_params(const ConvLayer& gamma, const ConvLayer& beta, const Tensor& feat,
                             ModulationSource source) {
  ModulationParams p{conv2d(feat, gamma), conv2d(feat, beta), source};
  for (double& v : p.gamma.data()) v += 1.0;
  return p;
}

}  // namespace

std::string to_string(NetworkRole role) {
  switch (role) {
    case NetworkRole::LabelEmbed: return "label_embed";
    case NetworkRole::FlowEmbed: return "flow_embed";
    case NetworkRole::GuidanceEmbed: return "guidance_embed";
    case NetworkRole::ImageEncoder: return "image_encoder";
    case NetworkRole::SegEncoder: return "seg_encoder";
    case NetworkRole::Generator: return "generator";
    case NetworkRole::ImageDiscriminator: return "image_discriminator";
    case NetworkRole::VideoDiscriminator: return "video_discriminator";
  }
  return "unknown";
}

NetworkRole role_from_string(const std::string& name) {
  for (auto role : {NetworkRole::LabelEmbed, NetworkRole::FlowEmbed, NetworkRole::GuidanceEmbed,
                    NetworkRole::ImageEncoder, NetworkRole::SegEncoder, NetworkRole::Generator,
                    NetworkRole::ImageDiscriminator, NetworkRole::VideoDiscriminator}) {
    if (to_string(role) == name) return role;
  }
  throw Error(ErrorCode::BadSpec, "unknown network role '" + name + "'");
}

void NetworkSpec::validate() const {
  if (widths.empty()) throw Error(ErrorCode::BadSpec, "widths must not be empty");
  require_positive(widths, "widths");
  if (input_channels <= 0) throw Error(ErrorCode::BadSpec, "input_channels must be positive");
  if (height <= 0 || width <= 0) throw Error(ErrorCode::BadSpec, "frame size must be positive");
  const int s = stage_count(*this);
  switch (role) {
    case NetworkRole::GuidanceEmbed:
      if (target_widths.size() != widths.size()) {
        throw Error(ErrorCode::BadSpec, "guidance embedding needs one target width per stage");
      }
      require_positive(target_widths, "target_widths");
      [[fallthrough]];
    case NetworkRole::LabelEmbed:
    case NetworkRole::FlowEmbed:
      require_divisible(*this, s - 1);
      break;
    case NetworkRole::Generator:
      if (condition_widths.size() != widths.size()) {
        throw Error(ErrorCode::BadSpec, "generator needs one condition width per stage");
      }
      require_positive(condition_widths, "condition_widths");
      if (style_dim <= 0) throw Error(ErrorCode::BadSpec, "style_dim must be positive");
      require_divisible(*this, s - 1);
      break;
    case NetworkRole::ImageEncoder:
    case NetworkRole::SegEncoder:
      if (style_dim <= 0) throw Error(ErrorCode::BadSpec, "style_dim must be positive");
      require_divisible(*this, s - 1);
      break;
    case NetworkRole::VideoDiscriminator:
      if (video_window < 1) throw Error(ErrorCode::BadSpec, "video_window must be >= 1");
      if (input_channels != 3 * video_window) {
        throw Error(ErrorCode::BadSpec, "video discriminator input must be 3 * video_window");
      }
      [[fallthrough]];
    case NetworkRole::ImageDiscriminator:
      if (num_scales < 1) throw Error(ErrorCode::BadSpec, "num_scales must be >= 1");
      require_divisible(*this, num_scales - 1);
      break;
  }
}

void check_compatible(const NetworkSpec& generator, const NetworkSpec& embedding) {
  if (generator.widths.size() != embedding.widths.size()) {
    throw Error(ErrorCode::BadSpec, "generator stage count differs from embedding output count");
  }
  if (generator.height != embedding.height || generator.width != embedding.width) {
    throw Error(ErrorCode::BadSpec, "generator and embedding frame sizes differ");
  }
  if (embedding.role == NetworkRole::GuidanceEmbed) {
    if (embedding.target_widths != generator.widths) {
      throw Error(ErrorCode::BadSpec, "guidance heads do not match generator widths");
    }
  } else if (embedding.widths != generator.condition_widths) {
    throw Error(ErrorCode::BadSpec, "embedding widths do not match generator condition widths");
  }
}

std::vector<NetworkSpec> ToyModelSpecs::all() const {
  return {label_embed,   flow_embed,  guidance_embed,      image_encoder,
          seg_encoder,   generator,   image_discriminator, video_discriminator};
}

ToyModelSpecs toy_model_specs(int height, int width, int label_channels, std::uint64_t seed,
                              std::vector<int> generator_widths) {
  const std::size_t s = generator_widths.size();
  std::vector<int> embed_widths(s);
  for (std::size_t i = 0; i < s; ++i) embed_widths[i] = std::max(4, generator_widths[i] / 2);
  std::vector<int> encoder_widths(s);
  for (std::size_t i = 0; i < s; ++i) encoder_widths[i] = generator_widths[s - 1 - i];

  ToyModelSpecs m;
  auto base = [&](NetworkRole role, int in, std::vector<int> widths) {
    NetworkSpec spec;
    spec.role = role;
    spec.input_channels = in;
    spec.widths = std::move(widths);
    spec.height = height;
    spec.width = width;
    spec.seed = seed;
    return spec;
  };
  m.label_embed = base(NetworkRole::LabelEmbed, label_channels, embed_widths);
  m.flow_embed = base(NetworkRole::FlowEmbed, 3, embed_widths);
  m.guidance_embed = base(NetworkRole::GuidanceEmbed, 3, embed_widths);
  m.guidance_embed.target_widths = generator_widths;
  m.image_encoder = base(NetworkRole::ImageEncoder, 3, encoder_widths);
  m.seg_encoder = base(NetworkRole::SegEncoder, label_channels, encoder_widths);
  m.generator = base(NetworkRole::Generator, 3, generator_widths);
  m.generator.condition_widths = embed_widths;
  m.image_discriminator = base(NetworkRole::ImageDiscriminator, 3, {16, 32});
  m.video_discriminator = base(NetworkRole::VideoDiscriminator, 9, {16, 32});
  m.video_discriminator.video_window = 3;
  return m;
}

// --- LabelEmbedding -------------------------------------------------------

LabelEmbedding::LabelEmbedding(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.role != NetworkRole::LabelEmbed && spec_.role != NetworkRole::FlowEmbed) {
    throw Error(ErrorCode::BadSpec, "LabelEmbedding needs a label_embed or flow_embed spec");
  }
  Rng rng = network_rng(spec_);
  build_encoder_decoder(spec_, rng, encoder_, decoder_);
}

std::vector<Tensor> LabelEmbedding::forward(const Tensor& input) const {
  check_input(input, spec_.input_channels, spec_.height, spec_.width, "embedding input");
  Tensor x = input;
  for (const auto& conv : encoder_) x = relu(conv2d(x, conv));
  std::vector<Tensor> feats{x};
  for (const auto& conv : decoder_) feats.push_back(relu(conv2d(upsample_nearest2x(feats.back()), conv)));
  return feats;
}

std::vector<NamedTensor> LabelEmbedding::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) append(out, "encoder." + std::to_string(i), encoder_[i]);
  for (std::size_t i = 0; i < decoder_.size(); ++i) append(out, "decoder." + std::to_string(i), decoder_[i]);
  return out;
}

std::vector<ConstNamedTensor> LabelEmbedding::parameters() const {
  return as_const(const_cast<LabelEmbedding&>(*this));
}

void LabelEmbedding::zero_biases() {
  for (auto& c : encoder_) std::fill(c.bias.data().begin(), c.bias.data().end(), 0.0);
  for (auto& c : decoder_) std::fill(c.bias.data().begin(), c.bias.data().end(), 0.0);
}

// --- GuidanceEmbedding ----------------------------------------------------

GuidanceEmbedding::GuidanceEmbedding(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.role != NetworkRole::GuidanceEmbed) {
    throw Error(ErrorCode::BadSpec, "GuidanceEmbedding needs a guidance_embed spec");
  }
  Rng rng = network_rng(spec_);
  build_encoder_decoder(spec_, rng, encoder_, decoder_);
  for (std::size_t s = 0; s < spec_.widths.size(); ++s) {
    gamma_heads_.push_back(ConvLayer::zeros(spec_.target_widths[s], spec_.widths[s], 3, 1, 1));
    beta_heads_.push_back(ConvLayer::zeros(spec_.target_widths[s], spec_.widths[s], 3, 1, 1));
  }
}

std::pair<std::vector<Tensor>, std::vector<Tensor>> GuidanceEmbedding::features(
    const Tensor& rgb, const Tensor& mask, ConvMode mode) const {
  check_input(rgb, spec_.input_channels, spec_.height, spec_.width, "guidance input");
  Tensor x = rgb;
  Tensor m = mask;
  auto step = [&](const ConvLayer& conv) {
    if (mode == ConvMode::Partial) {
      PartialConvResult r = partial_conv2d(x, m, conv);
      x = relu(r.out);
      m = std::move(r.mask);
    } else {
      x = relu(conv2d(x, conv));
      m = Tensor({x.dim(0), 1, x.dim(2), x.dim(3)}, 1.0);
    }
  };
  for (const auto& conv : encoder_) step(conv);
  std::vector<Tensor> feats{x};
  std::vector<Tensor> masks{m};
  for (const auto& conv : decoder_) {
    x = upsample_nearest2x(x);
    m = upsample_nearest2x(m);
    step(conv);
    feats.push_back(x);
    masks.push_back(m);
  }
  return {feats, masks};
}

std::vector<ModulationParams> GuidanceEmbedding::forward(const Tensor& rgb, const Tensor& mask,
                                                         ConvMode mode) const {
  const auto [feats, masks] = features(rgb, mask, mode);
  std::vector<ModulationParams> out;
  for (std::size_t s = 0; s < feats.size(); ++s) {
    out.push_back(head_params(gamma_heads_[s], beta_heads_[s], feats[s], ModulationSource::Guidance));
  }
  return out;
}

std::vector<NamedTensor> GuidanceEmbedding::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < encoder_.size(); ++i) append(out, "encoder." + std::to_string(i), encoder_[i]);
  for (std::size_t i = 0; i < decoder_.size(); ++i) append(out, "decoder." + std::to_string(i), decoder_[i]);
  for (std::size_t i = 0; i < gamma_heads_.size(); ++i) {
    append(out, "gamma_head." + std::to_string(i), gamma_heads_[i]);
    append(out, "beta_head." + std::to_string(i), beta_heads_[i]);
  }
  return out;
}

std::vector<ConstNamedTensor> GuidanceEmbedding::parameters() const {
  return as_const(const_cast<GuidanceEmbedding&>(*this));
}

void GuidanceEmbedding::randomize_heads(std::uint64_t seed) {
  Rng rng(seed);
  for (std::size_t s = 0; s < gamma_heads_.size(); ++s) {
    gamma_heads_[s] = ConvLayer::seeded(spec_.target_widths[s], spec_.widths[s], 3, 1, 1, rng);
    beta_heads_[s] = ConvLayer::seeded(spec_.target_widths[s], spec_.widths[s], 3, 1, 1, rng);
  }
}

// --- StyleEncoder ---------------------------------------------------------

StyleEncoder::StyleEncoder(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.role != NetworkRole::ImageEncoder && spec_.role != NetworkRole::SegEncoder) {
    throw Error(ErrorCode::BadSpec, "StyleEncoder needs an image_encoder or seg_encoder spec");
  }
  Rng rng = network_rng(spec_);
  int in = spec_.input_channels;
  for (std::size_t i = 0; i < spec_.widths.size(); ++i) {
    convs_.push_back(ConvLayer::seeded(spec_.widths[i], in, 3, i == 0 ? 1 : 2, 1, rng));
    in = spec_.widths[i];
  }
  const int levels = static_cast<int>(spec_.widths.size()) - 1;
  const int flat = in * (spec_.height >> levels) * (spec_.width >> levels);
  fc_ = LinearLayer::seeded(spec_.style_dim, flat, rng);
}

Tensor StyleEncoder::forward(const Tensor& input) const {
  check_input(input, spec_.input_channels, spec_.height, spec_.width, "encoder input");
  Tensor x = input;
  for (const auto& conv : convs_) x = leaky_relu(conv2d(x, conv));
  return linear(x, fc_);
}

std::vector<NamedTensor> StyleEncoder::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t i = 0; i < convs_.size(); ++i) append(out, "conv." + std::to_string(i), convs_[i]);
  out.emplace_back("fc.weight", &fc_.weights);
  out.emplace_back("fc.bias", &fc_.bias);
  return out;
}

std::vector<ConstNamedTensor> StyleEncoder::parameters() const {
  return as_const(const_cast<StyleEncoder&>(*this));
}

void StyleEncoder::zero_biases() {
  for (auto& c : convs_) std::fill(c.bias.data().begin(), c.bias.data().end(), 0.0);
  std::fill(fc_.bias.data().begin(), fc_.bias.data().end(), 0.0);
}

// --- Generator ------------------------------------------------------------

Generator::Generator(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.role != NetworkRole::Generator) {
    throw Error(ErrorCode::BadSpec, "Generator needs a generator spec");
  }
  Rng rng = network_rng(spec_);
  const auto shapes = stage_shapes();
  fc_ = LinearLayer::seeded(shapes[0][0] * shapes[0][1] * shapes[0][2], spec_.style_dim, rng);
  for (std::size_t s = 0; s < spec_.widths.size(); ++s) {
    const int c = spec_.widths[s];
    const int e = spec_.condition_widths[s];
    if (s > 0) transitions_.push_back(ConvLayer::seeded(c, spec_.widths[s - 1], 1, 1, 0, rng));
    std::array<SpadeSiteHeads, 2> heads;
    std::array<ConvLayer, 2> convs;
    for (int site = 0; site < 2; ++site) {
      heads[site] = {ConvLayer::seeded(c, e, 3, 1, 1, rng), ConvLayer::seeded(c, e, 3, 1, 1, rng),
                     ConvLayer::seeded(c, e, 3, 1, 1, rng), ConvLayer::seeded(c, e, 3, 1, 1, rng)};
      convs[site] = ConvLayer::seeded(c, c, 3, 1, 1, rng);
    }
    heads_.push_back(std::move(heads));
    block_convs_.push_back(std::move(convs));
  }
  out_conv_ = ConvLayer::seeded(3, spec_.widths.back(), 3, 1, 1, rng);
}

std::vector<std::vector<int>> Generator::stage_shapes() const {
  const int s = stage_count(spec_);
  std::vector<std::vector<int>> shapes;
  for (int i = 0; i < s; ++i) {
    const int shift = s - 1 - i;
    shapes.push_back({spec_.widths[i], spec_.height >> shift, spec_.width >> shift});
  }
  return shapes;
}

Tensor Generator::mspade(const Tensor& x, const SpadeSiteHeads& heads, const Tensor& label_feat,
                         const Tensor* flow_feat, const ModulationParams* guidance) const {
  const Tensor normalized = instance_norm(x);
  std::optional<ModulationParams> flow;
  if (flow_feat) flow = head_params(heads.flow_gamma, heads.flow_beta, *flow_feat, ModulationSource::Flow);
  std::optional<ModulationParams> guide;
  if (guidance) guide = *guidance;
  return multi_spade(normalized,
                     head_params(heads.label_gamma, heads.label_beta, label_feat, ModulationSource::Label),
                     flow, guide);
}

Tensor Generator::forward(const Tensor& style, const std::vector<Tensor>& label_feats,
                          const std::optional<std::vector<Tensor>>& flow_feats,
                          const std::optional<std::vector<ModulationParams>>& guidance) const {
  const auto shapes = stage_shapes();
  const std::size_t stages = shapes.size();
  require_rank(style, 2, "style");
  if (style.dim(1) != spec_.style_dim) throw Error(ErrorCode::ShapeMismatch, "style width mismatch");
  const int n = style.dim(0);
  auto check_feats = [&](const std::vector<Tensor>& feats, const char* what) {
    if (feats.size() != stages) {
      throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": one feature map per stage required");
    }
    for (std::size_t s = 0; s < stages; ++s) {
      check_input(feats[s], spec_.condition_widths[s], shapes[s][1], shapes[s][2], what);
      if (feats[s].dim(0) != n) throw Error(ErrorCode::ShapeMismatch, std::string(what) + ": batch mismatch");
    }
  };
  check_feats(label_feats, "label features");
  if (flow_feats) check_feats(*flow_feats, "flow features");
  if (guidance && guidance->size() != stages) {
    throw Error(ErrorCode::ShapeMismatch, "guidance: one modulation per stage required");
  }

  Tensor x = linear(style, fc_).reshaped({n, shapes[0][0], shapes[0][1], shapes[0][2]});
  for (std::size_t s = 0; s < stages; ++s) {
    if (s > 0) x = conv2d(upsample_nearest2x(x), transitions_[s - 1]);
    const Tensor* flow = flow_feats ? &(*flow_feats)[s] : nullptr;
    const ModulationParams* guide = guidance ? &(*guidance)[s] : nullptr;
    Tensor h = conv2d(leaky_relu(mspade(x, heads_[s][0], label_feats[s], flow, guide)), block_convs_[s][0]);
    h = conv2d(leaky_relu(mspade(h, heads_[s][1], label_feats[s], flow, guide)), block_convs_[s][1]);
    x = add(x, h);
  }
  return tanh_to_unit(conv2d(leaky_relu(x), out_conv_));
}

void Generator::set_identity_heads() {
  for (auto& stage : heads_) {
    for (auto& site : stage) {
      for (ConvLayer* c : {&site.label_gamma, &site.label_beta, &site.flow_gamma, &site.flow_beta}) {
        *c = ConvLayer::zeros(c->out_channels(), c->in_channels(), c->kernel(), c->stride, c->padding);
      }
    }
  }
}

std::vector<NamedTensor> Generator::parameters() {
  std::vector<NamedTensor> out;
  out.emplace_back("fc.weight", &fc_.weights);
  out.emplace_back("fc.bias", &fc_.bias);
  for (std::size_t s = 0; s < heads_.size(); ++s) {
    const std::string stage = "stage." + std::to_string(s);
    if (s > 0) append(out, stage + ".transition", transitions_[s - 1]);
    for (int site = 0; site < 2; ++site) {
      const std::string p = stage + ".site" + std::to_string(site);
      append(out, p + ".label_gamma", heads_[s][site].label_gamma);
      append(out, p + ".label_beta", heads_[s][site].label_beta);
      append(out, p + ".flow_gamma", heads_[s][site].flow_gamma);
      append(out, p + ".flow_beta", heads_[s][site].flow_beta);
      append(out, p + ".conv", block_convs_[s][site]);
    }
  }
  append(out, "out_conv", out_conv_);
  return out;
}

std::vector<ConstNamedTensor> Generator::parameters() const {
  return as_const(const_cast<Generator&>(*this));
}

// --- PatchDiscriminator ---------------------------------------------------

PatchDiscriminator::PatchDiscriminator(NetworkSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  if (spec_.role != NetworkRole::ImageDiscriminator && spec_.role != NetworkRole::VideoDiscriminator) {
    throw Error(ErrorCode::BadSpec, "PatchDiscriminator needs a discriminator spec");
  }
  Rng rng = network_rng(spec_);
  for (int k = 0; k < spec_.num_scales; ++k) {
    std::vector<ConvLayer> layers;
    int in = spec_.input_channels;
    for (int w : spec_.widths) {
      layers.push_back(ConvLayer::seeded(w, in, 3, 2, 1, rng));
      in = w;
    }
    layers.push_back(ConvLayer::seeded(1, in, 3, 1, 1, rng));
    scales_.push_back(std::move(layers));
  }
}

DiscriminatorOutput PatchDiscriminator::forward(const Tensor& input) const {
  check_input(input, spec_.input_channels, spec_.height, spec_.width, "discriminator input");
  DiscriminatorOutput out;
  Tensor scaled = input;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    if (k > 0) scaled = avg_pool2x(scaled);
    Tensor x = scaled;
    for (std::size_t l = 0; l + 1 < scales_[k].size(); ++l) {
      x = leaky_relu(conv2d(x, scales_[k][l]));
      out.features.push_back(x);
    }
    out.logits.push_back(conv2d(x, scales_[k].back()));
  }
  return out;
}

std::vector<NamedTensor> PatchDiscriminator::parameters() {
  std::vector<NamedTensor> out;
  for (std::size_t k = 0; k < scales_.size(); ++k) {
    for (std::size_t l = 0; l < scales_[k].size(); ++l) {
      append(out, "scale" + std::to_string(k) + ".conv." + std::to_string(l), scales_[k][l]);
    }
  }
  return out;
}

std::vector<ConstNamedTensor> PatchDiscriminator::parameters() const {
  return as_const(const_cast<PatchDiscriminator&>(*this));
}

// --- helpers --------------------------------------------------------------

Tensor frame_to_tensor(const Frame& frame) {
  check_frame(frame);
  Tensor t({1, 3, frame.height(), frame.width()});
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < frame.height(); ++y)
      for (int x = 0; x < frame.width(); ++x) t.at(0, c, y, x) = frame.at(y, x, c);
  return t;
}

Frame tensor_to_frame(const Tensor& t, int n) {
  require_rank(t, 4, "frame tensor");
  if (t.dim(1) != 3 || n < 0 || n >= t.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "frame tensor must be N x 3 x H x W");
  }
  Frame f(t.dim(2), t.dim(3), 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < f.height(); ++y)
      for (int x = 0; x < f.width(); ++x) f.at(y, x, c) = t.at(n, c, y, x);
  return f;
}

std::pair<Tensor, Tensor> guidance_to_tensors(const GuidanceImage& g) {
  Tensor mask({1, 1, g.valid.height(), g.valid.width()});
  for (int y = 0; y < g.valid.height(); ++y)
    for (int x = 0; x < g.valid.width(); ++x) mask.at(0, 0, y, x) = g.valid.at(y, x) ? 1.0 : 0.0;
  return {frame_to_tensor(g.rgb), mask};
}

std::vector<Tensor> embed_labels(const Tensor& labels, const LabelEmbedding& net) {
  return net.forward(labels);
}

std::vector<ModulationParams> embed_guidance(const GuidanceImage& g, const GuidanceEmbedding& net,
                                             ConvMode mode) {
  const auto [rgb, mask] = guidance_to_tensors(g);
  return net.forward(rgb, mask, mode);
}

Frame generator_forward(const Generator& gen, const Tensor& style,
                        const std::vector<Tensor>& label_feats,
                        const std::optional<std::vector<Tensor>>& flow_feats,
                        const std::optional<std::vector<ModulationParams>>& guidance) {
  if (style.rank() != 2 || style.dim(0) != 1) {
    throw Error(ErrorCode::ShapeMismatch, "generator_forward produces one frame; style must be 1 x D");
  }
  return tensor_to_frame(gen.forward(style, label_feats, flow_feats, guidance));
}

Tensor encode_previous(const Frame& frame, const StyleEncoder& net) {
  if (net.spec().role != NetworkRole::ImageEncoder) {
    throw Error(ErrorCode::BadSpec, "encode_previous needs an image encoder");
  }
  return net.forward(frame_to_tensor(frame));
}

Tensor encode_labels(const Tensor& labels, const StyleEncoder& net) {
  if (net.spec().role != NetworkRole::SegEncoder) {
    throw Error(ErrorCode::BadSpec, "encode_labels needs a segmentation encoder");
  }
  return net.forward(labels);
}

std::vector<std::size_t> video_window_indices(std::size_t t, int window, int stride) {
  if (window < 1 || stride < 1) throw Error(ErrorCode::BadSpec, "window and stride must be >= 1");
  const std::size_t span = static_cast<std::size_t>(window - 1) * static_cast<std::size_t>(stride);
  if (t < span) {
    throw Error(ErrorCode::WindowTooShort, "window of " + std::to_string(window) + " frames at stride " +
                                               std::to_string(stride) + " needs t >= " + std::to_string(span));
  }
  std::vector<std::size_t> idx;
  for (int k = window - 1; k >= 0; --k) idx.push_back(t - static_cast<std::size_t>(k) * stride);
  return idx;
}

Tensor stack_window(const std::vector<Frame>& frames, std::size_t t, int window, int stride) {
  if (t >= frames.size()) throw Error(ErrorCode::WindowTooShort, "window end beyond sequence");
  std::vector<Tensor> parts;
  for (std::size_t i : video_window_indices(t, window, stride)) parts.push_back(frame_to_tensor(frames[i]));
  return concat_channels(parts);
}

}  // namespace wcvs
