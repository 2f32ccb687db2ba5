#include "wcvs/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "wcvs/error.hpp"
#include "wcvs/flow.hpp"
#include "wcvs/losses.hpp"
#include "wcvs/nn.hpp"
#include "wcvs/random.hpp"
#include "wcvs/tensor.hpp"

namespace wcvs {

namespace {

// Random value with magnitude in [lo, hi] and random sign; keeps L1 and hinge
// arguments away from their kinks.
double signed_gap(Rng& rng, double lo, double hi) {
  const double m = rng.uniform(lo, hi);
  return rng.uniform() < 0.5 ? -m : m;
}

// Random logit at least `margin` away from the hinge kinks at +-1.
double logit_away_from_kinks(Rng& rng, double margin) {
  for (;;) {
    const double v = rng.uniform(-3.0, 3.0);
    if (std::abs(v - 1.0) > margin && std::abs(v + 1.0) > margin) return v;
  }
}

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ULL;
  return h;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

std::vector<double> flatten(const std::vector<Tensor>& ts) {
  std::vector<double> out;
  for (const auto& t : ts) out.insert(out.end(), t.data().begin(), t.data().end());
  return out;
}

std::vector<Tensor> unflatten(const std::vector<double>& flat, const std::vector<Tensor>& like) {
  std::vector<Tensor> out;
  std::size_t k = 0;
  for (const auto& t : like) {
    Tensor c = t;
    for (double& v : c.data()) v = flat[k++];
    out.push_back(std::move(c));
  }
  return out;
}

Image with_data(const Image& like, const std::vector<double>& data) {
  Image img = like;
  img.data() = data;
  return img;
}

class Checker {
 public:
  Checker(std::string op, GradCheckReport& report) : op_(std::move(op)), report_(report) {}

  void check(const std::string& wrt, const ScalarFunction& f, const std::vector<double>& x,
             const std::vector<double>& analytic) {
    const auto numeric = numeric_gradient(f, x);
    report_.entries.push_back({op_, wrt, x.size(), max_relative_error(analytic, numeric)});
  }

 private:
  std::string op_;
  GradCheckReport& report_;
};

void check_conv(GradCheckReport& r, Rng& rng, bool partial) {
  const int stride = 1 + static_cast<int>(rng.below(2));
  Tensor x = Tensor::uniform({2, 3, 6, 7}, rng, -1.0, 1.0);
  ConvLayer layer = ConvLayer::seeded(4, 3, 3, stride, 1, rng);
  Tensor mask({2, 1, 6, 7}, 1.0);
  if (partial) {
    for (double& m : mask.data()) m = rng.uniform() < 0.5 ? 1.0 : 0.0;
  }
  auto forward = [&](const Tensor& in, const ConvLayer& l) {
    return partial ? partial_conv2d(in, mask, l).out : conv2d(in, l);
  };
  const Tensor proj = Tensor::uniform(forward(x, layer).shape(), rng, -1.0, 1.0);
  const ConvGrads g = partial ? partial_conv2d_backward(x, mask, layer, proj)
                              : conv2d_backward(x, layer, proj);
  Checker c(partial ? "partial_conv2d" : "conv2d", r);
  c.check("x", [&](const std::vector<double>& v) {
    return dot(forward(Tensor(x.shape(), v), layer).data(), proj.data());
  }, x.data(), g.dx.data());
  c.check("weights", [&](const std::vector<double>& v) {
    ConvLayer l = layer;
    l.weights.data() = v;
    return dot(forward(x, l).data(), proj.data());
  }, layer.weights.data(), g.dweights.data());
  c.check("bias", [&](const std::vector<double>& v) {
    ConvLayer l = layer;
    l.bias.data() = v;
    return dot(forward(x, l).data(), proj.data());
  }, layer.bias.data(), g.dbias.data());
}

ModulationParams random_params(Rng& rng, const std::vector<int>& shape, ModulationSource src) {
  return {Tensor::uniform(shape, rng, 0.5, 1.5), Tensor::uniform(shape, rng, -0.5, 0.5), src};
}

void check_spade(GradCheckReport& r, Rng& rng) {
  const Tensor x = Tensor::uniform({2, 4, 8, 8}, rng, -1.0, 1.0);
  const ModulationParams p = random_params(rng, {4, 8, 8}, ModulationSource::Label);
  const Tensor proj = Tensor::uniform(x.shape(), rng, -1.0, 1.0);
  const SpadeGrads g = spade_modulate_backward(x, p, proj);
  Checker c("spade_modulate", r);
  c.check("x", [&](const std::vector<double>& v) {
    return dot(spade_modulate(Tensor(x.shape(), v), p).data(), proj.data());
  }, x.data(), g.dx.data());
  c.check("gamma", [&](const std::vector<double>& v) {
    ModulationParams q = p;
    q.gamma.data() = v;
    return dot(spade_modulate(x, q).data(), proj.data());
  }, p.gamma.data(), g.params.dgamma.data());
  c.check("beta", [&](const std::vector<double>& v) {
    ModulationParams q = p;
    q.beta.data() = v;
    return dot(spade_modulate(x, q).data(), proj.data());
  }, p.beta.data(), g.params.dbeta.data());
}

void check_multi_spade(GradCheckReport& r, Rng& rng) {
  const Tensor x = Tensor::uniform({2, 4, 8, 8}, rng, -1.0, 1.0);
  std::array<ModulationParams, 3> p{random_params(rng, {4, 8, 8}, ModulationSource::Label),
                                    random_params(rng, {2, 4, 8, 8}, ModulationSource::Flow),
                                    random_params(rng, {4, 8, 8}, ModulationSource::Guidance)};
  const Tensor proj = Tensor::uniform(x.shape(), rng, -1.0, 1.0);
  auto eval = [&](const Tensor& in, const std::array<ModulationParams, 3>& q) {
    return dot(multi_spade(in, q[0], q[1], q[2]).data(), proj.data());
  };
  const MultiSpadeGrads g = multi_spade_backward(x, p[0], p[1], p[2], proj);
  Checker c("multi_spade", r);
  c.check("x", [&](const std::vector<double>& v) { return eval(Tensor(x.shape(), v), p); }, x.data(),
          g.dx.data());
  const std::array<const ModulationGrads*, 3> grads{&g.label, &*g.flow, &*g.guidance};
  const std::array<const char*, 3> names{"label", "flow", "guidance"};
  for (int s = 0; s < 3; ++s) {
    c.check(std::string(names[s]) + ".gamma", [&, s](const std::vector<double>& v) {
      auto q = p;
      q[s].gamma.data() = v;
      return eval(x, q);
    }, p[s].gamma.data(), grads[s]->dgamma.data());
    c.check(std::string(names[s]) + ".beta", [&, s](const std::vector<double>& v) {
      auto q = p;
      q[s].beta.data() = v;
      return eval(x, q);
    }, p[s].beta.data(), grads[s]->dbeta.data());
  }
}

std::vector<Tensor> random_logits(Rng& rng, std::vector<std::vector<int>> shapes) {
  std::vector<Tensor> out;
  for (auto& s : shapes) {
    Tensor t(std::move(s));
    for (double& v : t.data()) v = logit_away_from_kinks(rng, 0.05);
    out.push_back(std::move(t));
  }
  return out;
}

void check_hinge(GradCheckReport& r, const std::string& op, const std::vector<Tensor>& real,
                 const std::vector<Tensor>& fake) {
  const HingeDGrads gd = hinge_d_backward(real, fake);
  const auto gg = hinge_g_backward(fake);
  Checker c(op, r);
  c.check("d.real_logits", [&](const std::vector<double>& v) {
    return hinge_d(unflatten(v, real), fake).objective();
  }, flatten(real), flatten(gd.real));
  c.check("d.fake_logits", [&](const std::vector<double>& v) {
    return hinge_d(real, unflatten(v, fake)).objective();
  }, flatten(fake), flatten(gd.fake));
  c.check("g.fake_logits", [&](const std::vector<double>& v) { return hinge_g(unflatten(v, fake)); },
          flatten(fake), flatten(gg));
}

// Moves logits that fall near a hinge kink out of the finite-difference reach.
void push_off_kinks(std::vector<Tensor>& logits) {
  for (auto& t : logits) {
    for (double& v : t.data()) {
      if (std::abs(v - 1.0) < 0.01) v = 1.0 + (v >= 1.0 ? 0.02 : -0.02);
      if (std::abs(v + 1.0) < 0.01) v = -1.0 + (v >= -1.0 ? 0.02 : -0.02);
    }
  }
}

Frame random_frame(Rng& rng, int h, int w) {
  Frame f(h, w, 3);
  for (double& v : f.data()) v = rng.uniform();
  return f;
}

void check_hinge_video(GradCheckReport& r, Rng& rng) {
  NetworkSpec spec;
  spec.role = NetworkRole::VideoDiscriminator;
  spec.video_window = 3;
  spec.input_channels = 9;
  spec.widths = {4, 8};
  spec.height = spec.width = 8;
  spec.seed = rng.next();
  const PatchDiscriminator dv(spec);
  std::vector<Frame> real, fake;
  for (int t = 0; t < 5; ++t) {
    real.push_back(random_frame(rng, 8, 8));
    fake.push_back(random_frame(rng, 8, 8));
  }
  for (int stride : {1, 2}) {
    auto rl = dv.forward(stack_window(real, 4, 3, stride)).logits;
    auto fl = dv.forward(stack_window(fake, 4, 3, stride)).logits;
    // Spread the discriminator outputs over both hinge branches.
    for (auto* set : {&rl, &fl})
      for (auto& t : *set)
        for (double& v : t.data()) v *= 8.0;
    push_off_kinks(rl);
    push_off_kinks(fl);
    check_hinge(r, "hinge_video_stride" + std::to_string(stride), rl, fl);
  }
}

void check_feature_matching(GradCheckReport& r, Rng& rng) {
  std::vector<Tensor> real, fake;
  for (auto shape : {std::vector<int>{1, 4, 4, 4}, {1, 8, 2, 2}, {1, 3, 5, 1}}) {
    Tensor a = Tensor::uniform(shape, rng, -1.0, 1.0);
    Tensor b = a;
    for (double& v : b.data()) v += signed_gap(rng, 0.05, 0.5);
    real.push_back(std::move(a));
    fake.push_back(std::move(b));
  }
  const auto g = feature_matching_backward(real, fake);
  Checker c("feature_matching", r);
  c.check("fake", [&](const std::vector<double>& v) { return feature_matching(real, unflatten(v, fake)); },
          flatten(fake), flatten(g));
}

double min_feature_gap(const FeatureExtractor& psi, const Frame& a, const Frame& b) {
  const auto fa = psi.forward(frame_to_tensor(a));
  const auto fb = psi.forward(frame_to_tensor(b));
  double gap = INFINITY;
  for (std::size_t i = 0; i < fa.size(); ++i)
    for (std::size_t k = 0; k < fa[i].size(); ++k) gap = std::min(gap, std::abs(fa[i][k] - fb[i][k]));
  return gap;
}

void check_perceptual(GradCheckReport& r, Rng& rng) {
  const FeatureExtractor psi(rng.next());
  Frame real = random_frame(rng, 8, 8);
  Frame fake = random_frame(rng, 8, 8);
  // Resample until no tapped feature difference sits within reach of the
  // finite-difference step, where |.| is not differentiable.
  for (int attempt = 0; attempt < 1000 && min_feature_gap(psi, real, fake) < 2e-3; ++attempt) {
    fake = random_frame(rng, 8, 8);
  }
  const Image g = perceptual_backward(real, fake, psi);
  Checker c("perceptual", r);
  c.check("fake", [&](const std::vector<double>& v) { return perceptual(real, with_data(fake, v), psi); },
          fake.data(), g.data());
}

void check_flow_warp(GradCheckReport& r, Rng& rng) {
  const int h = 8, w = 8;
  FlowField flow(h, w);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      flow.du(y, x) = rng.uniform(-1.5, 1.5);
      flow.dv(y, x) = rng.uniform(-1.5, 1.5);
    }
  const Frame prev = random_frame(rng, h, w);
  Frame cur = warp(prev, flow).image;
  for (double& v : cur.data()) v += signed_gap(rng, 0.05, 0.3);
  for (bool masked : {true, false}) {
    const FlowWarpGrads g = flow_warp_loss_backward(cur, prev, flow, masked);
    Checker c(masked ? "flow_warp_masked" : "flow_warp_unmasked", r);
    c.check("current", [&](const std::vector<double>& v) {
      return flow_warp_loss(with_data(cur, v), prev, flow, masked).value;
    }, cur.data(), g.current.data());
    c.check("previous", [&](const std::vector<double>& v) {
      return flow_warp_loss(cur, with_data(prev, v), flow, masked).value;
    }, prev.data(), g.previous.data());
  }
}

void check_world_consistency(GradCheckReport& r, Rng& rng) {
  const int h = 8, w = 8;
  GuidanceImage g{Image(h, w, 3), Mask(h, w), Image(h, w, 1, INFINITY)};
  Frame frame(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const bool valid = rng.uniform() < 0.5;
      g.valid.at(y, x) = valid;
      if (valid) g.depth.at(y, x) = 1.0;
      for (int c = 0; c < 3; ++c) {
        if (valid) g.rgb.at(y, x, c) = rng.uniform();
        frame.at(y, x, c) = g.rgb.at(y, x, c) + signed_gap(rng, 0.05, 0.5);
      }
    }
  const Image grad = world_consistency_loss_backward(frame, g);
  Checker c("world_consistency", r);
  c.check("frame", [&](const std::vector<double>& v) {
    return world_consistency_loss(with_data(frame, v), g).value;
  }, frame.data(), grad.data());
}

void check_total(GradCheckReport& r, Rng& rng) {
  auto unpack = [](const std::vector<double>& v) {
    return LossTerms{v[0], v[1], v[2], v[3], v[4], v[5]};
  };
  std::vector<double> terms(6), weights(6);
  for (double& t : terms) t = rng.uniform(-1.0, 2.0);
  for (double& w : weights) w = rng.uniform(0.0, 10.0);
  auto as_weights = [](const std::vector<double>& v) {
    return LossWeights{v[0], v[1], v[2], v[3], v[4], v[5]};
  };
  Checker c("total_objective", r);
  c.check("terms", [&](const std::vector<double>& v) { return total_objective(unpack(v), as_weights(weights)); },
          terms, weights);
  c.check("weights", [&](const std::vector<double>& v) { return total_objective(unpack(terms), as_weights(v)); },
          weights, terms);
}

}  // namespace

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

std::vector<double> numeric_gradient(const ScalarFunction& f, std::vector<double> x, double step) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = f(x);
    x[i] = saved - step;
    const double down = f(x);
    x[i] = saved;
    g[i] = (up - down) / (2.0 * step);
  }
  return g;
}

double max_relative_error(const std::vector<double>& analytic, const std::vector<double>& numeric) {
  if (analytic.size() != numeric.size()) throw Error(ErrorCode::ShapeMismatch, "gradient sizes differ");
  double worst = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) worst = std::max(worst, relative_error(analytic[i], numeric[i]));
  return worst;
}

double GradCheckReport::max_rel_error() const {
  double worst = 0.0;
  for (const auto& e : entries) worst = std::max(worst, e.max_rel_error);
  return worst;
}

const std::vector<std::string>& differentiable_ops() {
  static const std::vector<std::string> ops{
      "conv2d",           "partial_conv2d",   "spade_modulate", "multi_spade",
      "hinge_image",      "hinge_video",      "feature_matching", "perceptual",
      "flow_warp",        "world_consistency", "total_objective"};
  return ops;
}

const std::vector<std::string>& forward_only_ops() {
  static const std::vector<std::string> ops{"embed_labels",    "embed_guidance", "generator_forward",
                                            "encode_previous", "render_guidance", "motion_field"};
  return ops;
}

GradCheckReport grad_check(const std::string& op, std::uint64_t seed) {
  const auto& fwd = forward_only_ops();
  if (std::find(fwd.begin(), fwd.end(), op) != fwd.end()) {
    throw Error(ErrorCode::NoBackward, op + " has no analytic backward pass");
  }
  GradCheckReport r;
  r.seed = seed;
  Rng rng(seed * 0x2545F4914F6CDD1DULL + fnv1a(op));
  if (op == "conv2d") {
    check_conv(r, rng, false);
  } else if (op == "partial_conv2d") {
    check_conv(r, rng, true);
  } else if (op == "spade_modulate") {
    check_spade(r, rng);
  } else if (op == "multi_spade") {
    check_multi_spade(r, rng);
  } else if (op == "hinge_image") {
    check_hinge(r, op, random_logits(rng, {{1, 1, 4, 4}, {1, 1, 2, 2}}),
                random_logits(rng, {{1, 1, 4, 4}, {1, 1, 2, 2}}));
  } else if (op == "hinge_video") {
    check_hinge_video(r, rng);
  } else if (op == "feature_matching") {
    check_feature_matching(r, rng);
  } else if (op == "perceptual") {
    check_perceptual(r, rng);
  } else if (op == "flow_warp") {
    check_flow_warp(r, rng);
  } else if (op == "world_consistency") {
    check_world_consistency(r, rng);
  } else if (op == "total_objective") {
    check_total(r, rng);
  } else {
    throw Error(ErrorCode::BadSpec, "unknown op '" + op + "'");
  }
  return r;
}

std::vector<GradCheckReport> grad_check_suite(std::uint64_t seed, int count) {
  std::vector<GradCheckReport> out;
  for (int k = 0; k < count; ++k) {
    GradCheckReport merged;
    merged.seed = seed + static_cast<std::uint64_t>(k);
    for (const auto& op : differentiable_ops()) {
      auto r = grad_check(op, merged.seed);
      merged.entries.insert(merged.entries.end(), r.entries.begin(), r.entries.end());
    }
    out.push_back(std::move(merged));
  }
  return out;
}

}  // namespace wcvs
