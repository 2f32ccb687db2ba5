#include "test_util.hpp"
#include "wcvs/error.hpp"
#include "wcvs/nn.hpp"

namespace wcvs {
namespace {

ToyModelSpecs small_specs(std::uint64_t seed = 3) { return toy_model_specs(32, 32, 4, seed, {16, 8, 8}); }

Tensor random_labels(std::uint64_t seed, int channels = 4, int size = 32) {
  Rng rng(seed);
  Tensor t({1, channels, size, size});
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) t.at(0, static_cast<int>(rng.below(channels)), y, x) = 1.0;
  return t;
}

GuidanceImage random_guidance(std::uint64_t seed, int size, double valid_fraction) {
  Rng rng(seed);
  GuidanceImage g{Image(size, size, 3), Mask(size, size), Image(size, size, 1, INFINITY)};
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      if (rng.uniform() >= valid_fraction) continue;
      g.valid.at(y, x) = 1;
      g.depth.at(y, x) = 1.0;
      for (int c = 0; c < 3; ++c) g.rgb.at(y, x, c) = rng.uniform();
    }
  return g;
}

TEST(NetworkSpecs, ToySetIsConsistent) {
  const ToyModelSpecs s = toy_model_specs(64, 64, 5, 1);
  EXPECT_EQ(s.generator.widths, (std::vector<int>{64, 32, 16, 8}));
  for (const NetworkSpec& spec : s.all()) EXPECT_NO_THROW(spec.validate());
  EXPECT_NO_THROW(check_compatible(s.generator, s.label_embed));
  EXPECT_NO_THROW(check_compatible(s.generator, s.flow_embed));
  EXPECT_NO_THROW(check_compatible(s.generator, s.guidance_embed));
  EXPECT_EQ(s.video_discriminator.input_channels, 3 * s.video_discriminator.video_window);
}

TEST(NetworkSpecs, StageCountMismatchRejected) {
  ToyModelSpecs s = toy_model_specs(64, 64, 5, 1);
  s.label_embed.widths.pop_back();
  EXPECT_THROW(check_compatible(s.generator, s.label_embed), Error);
  NetworkSpec bad = s.generator;
  bad.widths = {8, 0};
  EXPECT_THROW(bad.validate(), Error);
  NetworkSpec odd = s.generator;
  odd.height = 60;  // not divisible by 2^3
  EXPECT_THROW(odd.validate(), Error);
}

TEST(NetworkSpecs, RoleNames) {
  for (NetworkRole r : {NetworkRole::LabelEmbed, NetworkRole::FlowEmbed, NetworkRole::GuidanceEmbed,
                        NetworkRole::ImageEncoder, NetworkRole::SegEncoder, NetworkRole::Generator,
                        NetworkRole::ImageDiscriminator, NetworkRole::VideoDiscriminator}) {
    EXPECT_EQ(role_from_string(to_string(r)), r);
  }
  EXPECT_THROW(role_from_string("critic"), Error);
}

TEST(LabelEmbed, ShapesMatchGeneratorStages) {
  const ToyModelSpecs s = small_specs();
  const auto feats = embed_labels(random_labels(1), LabelEmbedding(s.label_embed));
  const auto shapes = Generator(s.generator).stage_shapes();
  ASSERT_EQ(feats.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_EQ(feats[i].dim(1), s.label_embed.widths[i]);
    EXPECT_EQ(feats[i].dim(2), shapes[i][1]);
    EXPECT_EQ(feats[i].dim(3), shapes[i][2]);
  }
  EXPECT_EQ(shapes.back()[1], 32);
}

TEST(LabelEmbed, Deterministic) {
  const ToyModelSpecs s = small_specs();
  const Tensor l = random_labels(2);
  EXPECT_EQ(embed_labels(l, LabelEmbedding(s.label_embed)), embed_labels(l, LabelEmbedding(s.label_embed)));
  const ToyModelSpecs other = small_specs(4);
  EXPECT_NE(embed_labels(l, LabelEmbedding(s.label_embed)), embed_labels(l, LabelEmbedding(other.label_embed)));
}

TEST(LabelEmbed, ZeroInputZeroBiasGivesZero) {
  LabelEmbedding net(small_specs().label_embed);
  net.zero_biases();
  for (const Tensor& f : embed_labels(Tensor({1, 4, 32, 32}), net))
    for (double v : f.data()) EXPECT_EQ(v, 0.0);
}

TEST(LabelEmbed, WrongChannelCount) {
  EXPECT_THROW(embed_labels(random_labels(1, 3), LabelEmbedding(small_specs().label_embed)), Error);
}

TEST(GuidanceEmbed, AllInvalidIsIdentity) {
  const GuidanceEmbedding net(small_specs().guidance_embed);
  const auto params = embed_guidance(random_guidance(1, 32, 0.0), net);
  ASSERT_EQ(params.size(), 3u);
  for (const auto& p : params) {
    EXPECT_EQ(p.source, ModulationSource::Guidance);
    for (double g : p.gamma.data()) EXPECT_EQ(g, 1.0);
    for (double b : p.beta.data()) EXPECT_EQ(b, 0.0);
  }
}

TEST(GuidanceEmbed, AllInvalidIsIdentityEvenWithTrainedHeads) {
  // Without valid input every partial conv outputs zero, so the heads see
  // only zeros and their biases; the identity holds only for zeroed heads.
  GuidanceEmbedding net(small_specs().guidance_embed);
  net.randomize_heads(5);
  const auto params = embed_guidance(random_guidance(1, 32, 0.0), net);
  bool any_nontrivial = false;
  for (const auto& p : params)
    for (double g : p.gamma.data()) any_nontrivial |= g != 1.0;
  EXPECT_TRUE(any_nontrivial);
}

TEST(GuidanceEmbed, FullValidMatchesPlainConvolution) {
  GuidanceEmbedding net(small_specs().guidance_embed);
  net.randomize_heads(9);
  const GuidanceImage g = random_guidance(2, 32, 1.0);
  const auto partial = embed_guidance(g, net, ConvMode::Partial);
  const auto plain = embed_guidance(g, net, ConvMode::Plain);
  ASSERT_EQ(partial.size(), plain.size());
  double worst = 0.0;
  for (std::size_t s = 0; s < partial.size(); ++s)
    for (std::size_t i = 0; i < partial[s].gamma.size(); ++i) {
      worst = std::max(worst, std::abs(partial[s].gamma[i] - plain[s].gamma[i]));
      worst = std::max(worst, std::abs(partial[s].beta[i] - plain[s].beta[i]));
    }
  EXPECT_LT(worst, 1e-9);
}

TEST(GuidanceEmbed, ShapesMatchGeneratorStages) {
  const ToyModelSpecs s = small_specs();
  const auto params = embed_guidance(random_guidance(3, 32, 0.4), GuidanceEmbedding(s.guidance_embed));
  const auto shapes = Generator(s.generator).stage_shapes();
  ASSERT_EQ(params.size(), shapes.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].gamma.shape();
    EXPECT_EQ(g[0], 1);
    EXPECT_EQ(std::vector<int>(g.begin() + 1, g.end()), shapes[i]);
  }
}

TEST(GuidanceEmbed, MaskPropagatesAndShrinksHoles) {
  const GuidanceEmbedding net(small_specs().guidance_embed);
  const auto [rgb, mask] = guidance_to_tensors(random_guidance(4, 32, 0.05));
  const auto [feats, masks] = net.features(rgb, mask, ConvMode::Partial);
  ASSERT_EQ(masks.size(), feats.size());
  double before = 0, after = 0;
  for (double m : mask.data()) before += m;
  for (double m : masks.back().data()) after += m;
  EXPECT_GT(after / masks.back().size(), before / mask.size());
}

struct GeneratorInputs {
  Tensor style;
  std::vector<Tensor> labels;
  std::vector<Tensor> flows;
};

GeneratorInputs inputs_for(const ToyModelSpecs& s, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor l = random_labels(seed);
  return {Tensor::uniform({1, s.generator.style_dim}, rng, -1, 1), embed_labels(l, LabelEmbedding(s.label_embed)),
          LabelEmbedding(s.flow_embed).forward(Tensor::uniform({1, 3, 32, 32}, rng, 0, 1))};
}

TEST(Generator, OutputShapeAndRange) {
  const ToyModelSpecs s = small_specs();
  const GeneratorInputs in = inputs_for(s, 1);
  const Frame f = generator_forward(Generator(s.generator), in.style, in.labels, in.flows, std::nullopt);
  EXPECT_EQ(f.height(), 32);
  EXPECT_EQ(f.width(), 32);
  EXPECT_EQ(f.channels(), 3);
  for (double v : f.data()) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(Generator, IdentityHeadsIgnoreLabels) {
  const ToyModelSpecs s = small_specs();
  Generator gen(s.generator);
  gen.set_identity_heads();
  const GeneratorInputs a = inputs_for(s, 1), b = inputs_for(s, 2);
  ASSERT_NE(a.labels, b.labels);
  EXPECT_EQ(generator_forward(gen, a.style, a.labels, a.flows, std::nullopt),
            generator_forward(gen, a.style, b.labels, b.flows, std::nullopt));
  Generator seeded(s.generator);
  EXPECT_NE(generator_forward(seeded, a.style, a.labels, a.flows, std::nullopt),
            generator_forward(seeded, a.style, b.labels, b.flows, std::nullopt));
}

TEST(Generator, FreshGuidancePathIsNoOp) {
  const ToyModelSpecs s = small_specs();
  const Generator gen(s.generator);
  const GeneratorInputs in = inputs_for(s, 3);
  const auto guidance = embed_guidance(random_guidance(5, 32, 0.6), GuidanceEmbedding(s.guidance_embed));
  EXPECT_EQ(generator_forward(gen, in.style, in.labels, in.flows, guidance),
            generator_forward(gen, in.style, in.labels, in.flows, std::nullopt));
}

TEST(Generator, Deterministic) {
  const ToyModelSpecs s = small_specs();
  const GeneratorInputs in = inputs_for(s, 4);
  EXPECT_EQ(generator_forward(Generator(s.generator), in.style, in.labels, std::nullopt, std::nullopt),
            generator_forward(Generator(s.generator), in.style, in.labels, std::nullopt, std::nullopt));
}

TEST(Generator, MisalignedFeaturesRejected) {
  const ToyModelSpecs s = small_specs();
  GeneratorInputs in = inputs_for(s, 5);
  in.labels.pop_back();
  EXPECT_THROW(generator_forward(Generator(s.generator), in.style, in.labels, std::nullopt, std::nullopt), Error);
}

TEST(Encoder, StyleShapeDeterminismAndZero) {
  const ToyModelSpecs s = small_specs();
  Rng rng(1);
  Frame f(32, 32, 3);
  for (double& v : f.data()) v = rng.uniform();
  const StyleEncoder enc(s.image_encoder);
  const Tensor style = encode_previous(f, enc);
  EXPECT_EQ(style.shape(), (std::vector<int>{1, s.image_encoder.style_dim}));
  EXPECT_EQ(style, encode_previous(f, StyleEncoder(s.image_encoder)));
  StyleEncoder zero(s.seg_encoder);
  zero.zero_biases();
  const Tensor zero_style = encode_labels(Tensor({1, 4, 32, 32}), zero);
  for (double v : zero_style.data()) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(encode_labels(Tensor({1, 3, 32, 32}), zero), Error);
}

TEST(Discriminator, MultiScaleOutputs) {
  const ToyModelSpecs s = small_specs();
  const PatchDiscriminator d(s.image_discriminator);
  Rng rng(2);
  const DiscriminatorOutput out = d.forward(Tensor::uniform({1, 3, 32, 32}, rng, 0, 1));
  ASSERT_EQ(out.logits.size(), 2u);
  EXPECT_EQ(out.logits[0].dim(1), 1);
  EXPECT_GT(out.logits[0].dim(2), out.logits[1].dim(2));
  EXPECT_EQ(out.features.size(), 2 * s.image_discriminator.widths.size());
}

TEST(VideoWindow, StrideSelectsFrames) {
  EXPECT_EQ(video_window_indices(5, 3, 1), (std::vector<std::size_t>{3, 4, 5}));
  EXPECT_EQ(video_window_indices(5, 3, 2), (std::vector<std::size_t>{1, 3, 5}));
  try {
    video_window_indices(3, 3, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::WindowTooShort);
  }
}

TEST(VideoWindow, StackConcatenatesChannels) {
  std::vector<Frame> frames;
  for (int t = 0; t < 5; ++t) frames.emplace_back(8, 8, 3, 0.1 * t);
  const Tensor w = stack_window(frames, 4, 3, 2);
  EXPECT_EQ(w.shape(), (std::vector<int>{1, 9, 8, 8}));
  EXPECT_DOUBLE_EQ(w.at(0, 0, 0, 0), 0.0);
  EXPECT_DOUBLE_EQ(w.at(0, 3, 0, 0), 0.2);
  EXPECT_DOUBLE_EQ(w.at(0, 8, 7, 7), 0.4);
}

TEST(Conversions, FrameTensorRoundTrip) {
  Rng rng(3);
  Frame f(5, 7, 3);
  for (double& v : f.data()) v = rng.uniform();
  EXPECT_EQ(tensor_to_frame(frame_to_tensor(f)), f);
}

}  // namespace
}  // namespace wcvs
