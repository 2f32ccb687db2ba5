#include "wcvs/cli.hpp"

#include <omp.h>

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

#include "wcvs/error.hpp"
#include "wcvs/flow.hpp"
#include "wcvs/gradcheck.hpp"
#include "wcvs/io.hpp"
#include "wcvs/losses.hpp"
#include "wcvs/metrics.hpp"
#include "wcvs/nn.hpp"
#include "wcvs/synthworld.hpp"
#include "wcvs/world.hpp"

namespace wcvs {

namespace {

namespace fs = std::filesystem;
using io::json;

// Spec documents are plain JSON; errors get the file name prepended.
template <typename T>
T load_spec(const fs::path& path, const std::function<T(const json&)>& parse) {
  const json j = io::read_json(path);
  try {
    return parse(j);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

SceneSpec load_scene(const fs::path& path) {
  return load_spec<SceneSpec>(path, io::scene_from_json);
}

std::vector<Camera> load_cameras(const fs::path& path, bool round_trip, std::ostream& err) {
  std::vector<std::string> warnings;
  std::vector<Camera> cams = io::load_cameras(path, &warnings);
  for (const auto& w : warnings) err << "warning: " << path.string() << ": " << w << '\n';
  if (cams.empty()) throw Error(ErrorCode::Empty, path.string() + ": no cameras");
  return round_trip ? reverse_trajectory(cams) : cams;
}

std::vector<Frame> read_frames(const fs::path& dir, std::size_t count) {
  std::vector<Frame> frames;
  for (std::size_t t = 0; t < count; ++t) {
    Frame f = io::read_pfm(dir / io::frame_name("frame", t, ".pfm"));
    check_frame(f);
    frames.push_back(std::move(f));
  }
  return frames;
}

std::size_t count_files(const fs::path& dir, const std::string& prefix, const std::string& ext) {
  std::size_t n = 0;
  while (fs::exists(dir / io::frame_name(prefix, n, ext))) ++n;
  return n;
}

void write_frame(const fs::path& dir, const std::string& prefix, std::size_t t, const Frame& f) {
  io::write_pfm(dir / io::frame_name(prefix, t, ".pfm"), f);
  io::write_ppm(dir / io::frame_name(prefix, t, ".ppm"), f);
}

void write_flow_files(const fs::path& dir, std::size_t t, const FlowField& flow) {
  io::write_flow(dir / io::frame_name("flow", t, ".pfm"), dir / io::frame_name("flow", t, "_valid.pbm"),
                 flow);
}

FlowField read_flow_files(const fs::path& dir, std::size_t t) {
  return io::read_flow(dir / io::frame_name("flow", t, ".pfm"),
                       dir / io::frame_name("flow", t, "_valid.pbm"));
}

// --- simulate ------------------------------------------------------------------

struct Simulation {
  std::vector<GroundTruth> gt;
  std::vector<FlowField> flows;  // flows[0] is an all-invalid placeholder
};

Simulation simulate(const SceneSpec& scene, const std::vector<Camera>& cams) {
  Simulation sim;
  for (const Camera& cam : cams) sim.gt.push_back(render_gt(scene, cam));
  const auto& k = cams[0].intrinsics;
  sim.flows.emplace_back(k.height, k.width);
  for (std::size_t t = 1; t < cams.size(); ++t) {
    sim.flows.push_back(motion_field(sim.gt[t].depth, cams[t], cams[t - 1]));
  }
  return sim;
}

void write_simulation(const fs::path& out, const Simulation& sim) {
  for (std::size_t t = 0; t < sim.gt.size(); ++t) {
    write_frame(out, "frame", t, sim.gt[t].rgb);
    io::write_pfm(out / io::frame_name("depth", t, ".pfm"), sim.gt[t].depth);
    io::write_pgm(out / io::frame_name("semantics", t, ".pgm"), sim.gt[t].semantics);
    if (t > 0) write_flow_files(out, t, sim.flows[t]);
  }
}

// --- guidance ------------------------------------------------------------------

WorldCloud initial_cloud(const std::optional<fs::path>& cloud, const std::optional<SceneSpec>& scene,
                         double density) {
  if (cloud) return io::read_ply(*cloud);
  return sample_cloud(*scene, density);
}

void write_guidance_sequence(const fs::path& out, const std::vector<GuidanceImage>& guidance) {
  for (std::size_t t = 0; t < guidance.size(); ++t) {
    io::write_guidance(out, io::frame_name("guidance", t, ""), guidance[t]);
  }
}

// Points winning a pixel in both views, with the colors each view shows.
struct StereoCheck {
  std::size_t shared_points = 0;
  double max_abs_diff = 0.0;
  ConsistencyReport pixels;  // cross-view, over the shared points' pixels
};

StereoCheck check_stereo(const WorldCloud& world, const Camera& left, const Camera& right,
                         const GuidanceImage& gl, const GuidanceImage& gr) {
  const ZBuffer zl = build_zbuffer(world, left);
  const ZBuffer zr = build_zbuffer(world, right);
  std::vector<std::int64_t> right_pixel(world.size(), -1);
  for (std::size_t p = 0; p < zr.index.size(); ++p) {
    if (zr.index[p] >= 0) right_pixel[zr.index[p]] = static_cast<std::int64_t>(p);
  }
  StereoCheck c;
  double sum_rgb = 0.0, sum_lab = 0.0;
  const int w = gl.rgb.width();
  for (std::size_t p = 0; p < zl.index.size(); ++p) {
    const std::int64_t i = zl.index[p];
    if (i < 0 || !world.colorized()[i] || right_pixel[i] < 0) continue;
    const std::int64_t q = right_pixel[i];
    const int ly = static_cast<int>(p / w), lx = static_cast<int>(p % w);
    const int ry = static_cast<int>(q / w), rx = static_cast<int>(q % w);
    std::array<double, 3> a{}, b{};
    for (int ch = 0; ch < 3; ++ch) {
      a[ch] = gl.rgb.at(ly, lx, ch);
      b[ch] = gr.rgb.at(ry, rx, ch);
      c.max_abs_diff = std::max(c.max_abs_diff, std::abs(a[ch] - b[ch]));
      sum_rgb += std::abs(a[ch] - b[ch]) * 255.0;
    }
    const Lab la = rgb_to_lab(a), lb = rgb_to_lab(b);
    for (int ch = 0; ch < 3; ++ch) sum_lab += std::abs(la[ch] - lb[ch]);
    ++c.shared_points;
  }
  if (c.shared_points > 0) {
    c.pixels.delta_rgb = sum_rgb / (3.0 * c.shared_points);
    c.pixels.delta_lab = sum_lab / (3.0 * c.shared_points);
  }
  c.pixels.pixel_count = c.shared_points;
  return c;
}

// --- losses --------------------------------------------------------------------

struct LossReport {
  std::vector<LossTerms> per_frame;
  LossTerms mean;
  double total = 0.0;
  double discriminator_image = 0.0;
};

json terms_to_json(const LossTerms& t) {
  return {{"image", t.image},
          {"video", t.video},
          {"feature_matching", t.feature_matching},
          {"perceptual", t.perceptual},
          {"flow", t.flow},
          {"world", t.world}};
}

// Generator-side terms per frame. The video term averages the stride-1 and
// stride-2 windows that fit; flow and world terms need flows / guidance.
LossReport compute_losses(const std::vector<Frame>& real, const std::vector<Frame>& fake,
                          const std::vector<GuidanceImage>* guidance, const std::vector<FlowField>* flows,
                          const LossWeights& weights, std::uint64_t seed) {
  if (real.size() != fake.size()) throw Error(ErrorCode::LengthMismatch, "real and fake frame counts differ");
  if (real.empty()) throw Error(ErrorCode::EmptyInput, "no frames");
  if (guidance && guidance->size() != fake.size()) {
    throw Error(ErrorCode::LengthMismatch, "guidance and frame counts differ");
  }
  if (flows && flows->size() != fake.size()) throw Error(ErrorCode::LengthMismatch, "flow and frame counts differ");
  const int h = real[0].height(), w = real[0].width();
  const ToyModelSpecs specs = toy_model_specs(h, w, 1, seed, {16, 8});
  const PatchDiscriminator di(specs.image_discriminator);
  const PatchDiscriminator dv(specs.video_discriminator);
  const FeatureExtractor psi(seed);
  const int window = specs.video_discriminator.video_window;

  LossReport r;
  double d_sum = 0.0;
  for (std::size_t t = 0; t < fake.size(); ++t) {
    LossTerms terms;
    const DiscriminatorOutput dr = di.forward(frame_to_tensor(real[t]));
    const DiscriminatorOutput df = di.forward(frame_to_tensor(fake[t]));
    terms.image = hinge_g_image(df);
    d_sum += hinge_d_image(dr, df).objective();
    terms.feature_matching = feature_matching(dr.features, df.features);
    terms.perceptual = perceptual(real[t], fake[t], psi);
    int windows = 0;
    for (int stride : {1, 2}) {
      if (t < static_cast<std::size_t>((window - 1) * stride)) continue;
      terms.video += hinge_g_video(fake, t, dv, stride);
      ++windows;
    }
    if (windows > 0) terms.video /= windows;
    if (flows && t > 0) terms.flow = flow_warp_loss(fake[t], fake[t - 1], (*flows)[t]).value;
    if (guidance) terms.world = world_consistency_loss(fake[t], (*guidance)[t]).value;
    r.per_frame.push_back(terms);
  }
  const double n = static_cast<double>(fake.size());
  for (const LossTerms& t : r.per_frame) {
    r.mean.image += t.image / n;
    r.mean.video += t.video / n;
    r.mean.feature_matching += t.feature_matching / n;
    r.mean.perceptual += t.perceptual / n;
    r.mean.flow += t.flow / n;
    r.mean.world += t.world / n;
  }
  r.total = total_objective(r.mean, weights);
  r.discriminator_image = d_sum / n;
  return r;
}

json loss_report_to_json(const LossReport& r, const LossWeights& weights, std::uint64_t seed) {
  json frames = json::array();
  for (const auto& t : r.per_frame) frames.push_back(terms_to_json(t));
  return {{"seed", seed},
          {"weights", io::loss_weights_to_json(weights)},
          {"per_frame", frames},
          {"mean", terms_to_json(r.mean)},
          {"total_objective", r.total},
          {"discriminator_image_objective", r.discriminator_image}};
}

// --- toy generator ---------------------------------------------------------------

Tensor one_hot_labels(const LabelMap& labels, int channels) {
  Tensor t({1, channels, labels.height, labels.width});
  for (int y = 0; y < labels.height; ++y)
    for (int x = 0; x < labels.width; ++x) t.at(0, std::min(labels.at(y, x), channels - 1), y, x) = 1.0;
  return t;
}

struct ToyNetworks {
  ToyModelSpecs specs;
  LabelEmbedding label_embed;
  LabelEmbedding flow_embed;
  GuidanceEmbedding guidance_embed;
  StyleEncoder seg_encoder;
  Generator generator;

  ToyNetworks(const ToyModelSpecs& s)
      : specs(s),
        label_embed(s.label_embed),
        flow_embed(s.flow_embed),
        guidance_embed(s.guidance_embed),
        seg_encoder(s.seg_encoder),
        generator(s.generator) {}

  Frame run(const LabelMap& labels, const Frame* warped_prev, const GuidanceImage& g) const {
    const Tensor l = one_hot_labels(labels, specs.label_embed.input_channels);
    std::optional<std::vector<Tensor>> flow_feats;
    if (warped_prev) flow_feats = flow_embed.forward(frame_to_tensor(*warped_prev));
    return generator_forward(generator, encode_labels(l, seg_encoder), embed_labels(l, label_embed),
                             flow_feats, embed_guidance(g, guidance_embed));
  }

  void write(const fs::path& dir) const {
    io::write_weights(dir / "label_embed", specs.label_embed, label_embed.parameters());
    io::write_weights(dir / "flow_embed", specs.flow_embed, flow_embed.parameters());
    io::write_weights(dir / "guidance_embed", specs.guidance_embed, guidance_embed.parameters());
    io::write_weights(dir / "seg_encoder", specs.seg_encoder, seg_encoder.parameters());
    io::write_weights(dir / "generator", specs.generator, generator.parameters());
  }
};

// --- subcommand bodies -------------------------------------------------------------

struct Options {
  std::uint64_t seed = 0;
  bool seed_given = false;
  std::string scene, trajectory, cloud, frames, out, policy = "first_write_wins";
  std::string real, fake, guidance, flows, weights, manifest, first, last, mask, role, file;
  double density = 400.0;
  bool round_trip = false;
  int count = 10;
  std::string op;
  int height = 64, width = 64, label_channels = 4;
  std::vector<int> widths{64, 32, 16, 8};
};

ColorPolicy parse_policy(const std::string& s) {
  if (s == "first_write_wins") return ColorPolicy::FirstWriteWins;
  if (s == "running_average") return ColorPolicy::RunningAverage;
  throw CLI::ValidationError("--policy", "expected first_write_wins or running_average");
}

void emit_json(std::ostream& out, const std::string& path, const json& j) {
  if (path.empty()) {
    out << j.dump(2) << '\n';
  } else {
    io::write_json(path, j);
  }
}

int cmd_simulate(const Options& o, std::ostream& out, std::ostream& err) {
  SceneSpec scene = load_scene(o.scene);
  const auto cams = load_cameras(o.trajectory, o.round_trip, err);
  const Simulation sim = simulate(scene, cams);
  write_simulation(o.out, sim);
  io::write_trajectory(fs::path(o.out) / "cameras.json", cams);
  out << "wrote " << cams.size() << " frames to " << o.out << '\n';
  return 0;
}

int cmd_guide(const Options& o, std::ostream& out, std::ostream& err) {
  std::optional<SceneSpec> scene;
  if (!o.scene.empty()) {
    scene = load_scene(o.scene);
    if (o.seed_given) scene->seed = o.seed;
  }
  if (o.cloud.empty() && !scene) throw CLI::ValidationError("guide", "--cloud or --scene is required");
  if (o.frames.empty() && !scene) throw CLI::ValidationError("guide", "--frames or --scene is required");
  const auto cams = load_cameras(o.trajectory, o.round_trip, err);
  WorldCloud world =
      initial_cloud(o.cloud.empty() ? std::nullopt : std::optional<fs::path>(o.cloud), scene, o.density);

  std::vector<Frame> frames;
  if (!o.frames.empty()) frames = read_frames(o.frames, cams.size());
  FrameCallback callback = [&](std::size_t t, const GuidanceImage&, const Camera& cam) {
    return frames.empty() ? render_gt(*scene, cam).rgb : frames[t];
  };
  const auto guidance = guidance_for_sequence(world, cams, callback, parse_policy(o.policy));
  write_guidance_sequence(o.out, guidance);
  io::write_ply(fs::path(o.out) / "cloud.ply", world);
  io::write_trajectory(fs::path(o.out) / "cameras.json", cams);
  out << "wrote " << guidance.size() << " guidance images (" << world.colorized_count() << " of "
      << world.size() << " points colorized) to " << o.out << '\n';
  return 0;
}

int cmd_stereo(const Options& o, std::ostream& out, std::ostream&) {
  SceneSpec scene = load_scene(o.scene);
  if (o.seed_given) scene.seed = o.seed;
  const TrajectorySpec spec = load_spec<TrajectorySpec>(o.trajectory, io::trajectory_spec_from_json);
  const auto [left, right] = make_stereo_trajectory(spec);
  WorldCloud world = sample_cloud(scene, o.density);
  const ColorPolicy policy = parse_policy(o.policy);
  const int h = spec.intrinsics.height, w = spec.intrinsics.width;

  json frames = json::array();
  bool consistent = true;
  for (std::size_t t = 0; t < left.size(); ++t) {
    const auto [gl, gr] = shared_stereo_guidance(world, left[t], right[t], h, w);
    const StereoCheck c = check_stereo(world, left[t], right[t], gl, gr);
    consistent = consistent && c.max_abs_diff == 0.0;
    io::write_guidance(o.out, io::frame_name("left", t, ""), gl);
    io::write_guidance(o.out, io::frame_name("right", t, ""), gr);
    frames.push_back({{"frame", t},
                      {"shared_points", c.shared_points},
                      {"max_abs_diff", c.max_abs_diff},
                      {"cross_view", io::consistency_to_json(c.pixels)}});
    colorize(world, render_gt(scene, left[t]).rgb, left[t], policy);
    colorize(world, render_gt(scene, right[t]).rgb, right[t], policy);
  }
  io::write_json(fs::path(o.out) / "stereo_report.json", {{"frames", frames}, {"consistent", consistent}});
  out << "stereo: " << left.size() << " frame pairs, " << (consistent ? "consistent" : "INCONSISTENT")
      << '\n';
  return consistent ? 0 : 2;
}

int cmd_losses(const Options& o, std::ostream& out, std::ostream&) {
  const std::size_t n = count_files(o.fake, "frame", ".pfm");
  if (n == 0) throw Error(ErrorCode::EmptyInput, o.fake + ": no frame_NNNN.pfm files");
  const auto real = read_frames(o.real, n);
  const auto fake = read_frames(o.fake, n);
  std::vector<GuidanceImage> guidance;
  if (!o.guidance.empty())
    for (std::size_t t = 0; t < n; ++t) guidance.push_back(io::read_guidance(o.guidance, io::frame_name("guidance", t, "")));
  std::vector<FlowField> flows;
  if (!o.flows.empty()) {
    flows.emplace_back(fake[0].height(), fake[0].width());
    for (std::size_t t = 1; t < n; ++t) flows.push_back(read_flow_files(o.flows, t));
  }
  LossWeights weights;
  if (!o.weights.empty()) weights = load_spec<LossWeights>(o.weights, io::loss_weights_from_json);
  const LossReport r = compute_losses(real, fake, guidance.empty() ? nullptr : &guidance,
                                      flows.empty() ? nullptr : &flows, weights, o.seed);
  emit_json(out, o.out, loss_report_to_json(r, weights, o.seed));
  return 0;
}

int cmd_metrics_fb(const Options& o, std::ostream& out, std::ostream&) {
  const Frame first = io::read_image(o.first);
  const Frame last = io::read_image(o.last);
  const ConsistencyReport r = o.mask.empty() ? fb_consistency(first, last)
                                             : fb_consistency(first, last, io::read_pbm(o.mask));
  emit_json(out, o.out, io::consistency_to_json(r));
  if (!o.out.empty()) out << format_fb_table({{"run", r}});
  return 0;
}

int cmd_metrics_short(const Options& o, std::ostream& out, std::ostream&) {
  const std::size_t n = count_files(o.frames, "frame", ".pfm");
  if (n == 0) throw Error(ErrorCode::EmptyInput, o.frames + ": no frame_NNNN.pfm files");
  const auto frames = read_frames(o.frames, n);
  std::vector<FlowField> flows;
  flows.emplace_back(frames[0].height(), frames[0].width());
  for (std::size_t t = 1; t < n; ++t) flows.push_back(read_flow_files(o.flows, t));
  const double e = short_term_consistency(frames, flows);
  emit_json(out, o.out, {{"short_term", e}, {"frames", n}});
  if (!o.out.empty()) out << format_short_term_table({{"run", e}});
  return 0;
}

int cmd_gradcheck(const Options& o, std::ostream& out, std::ostream& err) {
  std::vector<GradCheckReport> reports;
  if (o.op.empty()) {
    reports = grad_check_suite(o.seed, o.count);
  } else {
    for (int i = 0; i < o.count; ++i) reports.push_back(grad_check(o.op, o.seed + static_cast<std::uint64_t>(i)));
  }
  json entries = json::array();
  double worst = 0.0;
  for (const auto& r : reports) {
    worst = std::max(worst, r.max_rel_error());
    for (const auto& e : r.entries) {
      entries.push_back({{"seed", r.seed},
                         {"op", e.op},
                         {"wrt", e.wrt},
                         {"coordinates", e.coordinates},
                         {"max_rel_error", e.max_rel_error}});
    }
  }
  const bool passed = worst < kGradTolerance;
  emit_json(out, o.out,
            {{"seed", o.seed}, {"tolerance", kGradTolerance}, {"max_rel_error", worst},
             {"passed", passed}, {"entries", entries}});
  if (!passed) err << "gradcheck: max relative error " << worst << " exceeds " << kGradTolerance << '\n';
  return passed ? 0 : 2;
}

int cmd_netspec_emit(const Options& o, std::ostream& out, std::ostream&) {
  const ToyModelSpecs specs = toy_model_specs(o.height, o.width, o.label_channels, o.seed, o.widths);
  json j;
  if (o.role.empty()) {
    j = json::array();
    for (const auto& s : specs.all()) j.push_back(io::network_spec_to_json(s));
  } else {
    const NetworkRole role = role_from_string(o.role);
    for (const auto& s : specs.all())
      if (s.role == role) j = io::network_spec_to_json(s);
  }
  emit_json(out, o.out, j);
  return 0;
}

int cmd_netspec_validate(const Options& o, std::ostream& out, std::ostream&) {
  const json j = io::read_json(o.file);
  std::vector<NetworkSpec> specs;
  try {
    if (j.is_array()) {
      for (const auto& s : j) specs.push_back(io::network_spec_from_json(s));
    } else {
      specs.push_back(io::network_spec_from_json(j));
    }
    // A full set must also wire together.
    const NetworkSpec* gen = nullptr;
    for (const auto& s : specs)
      if (s.role == NetworkRole::Generator) gen = &s;
    if (gen) {
      for (const auto& s : specs) {
        if (s.role == NetworkRole::LabelEmbed || s.role == NetworkRole::FlowEmbed ||
            s.role == NetworkRole::GuidanceEmbed) {
          check_compatible(*gen, s);
        }
      }
    }
  } catch (const Error& e) {
    throw Error(e.code(), o.file + ": " + e.what());
  }
  out << o.file << ": " << specs.size() << " valid network spec(s)\n";
  return 0;
}

// Full run from a manifest: ground truth, guidance loop, flows, a toy
// generator pass per frame, loss and consistency reports.
int cmd_pipeline(const Options& o, std::ostream& out, std::ostream& err) {
  const io::ProjectManifest m = io::read_manifest(o.manifest);
  const fs::path dir = m.output_dir;
  std::optional<SceneSpec> scene;
  if (m.scene) {
    scene = load_scene(*m.scene);
    scene->seed = m.seed;
  }
  const auto cams = load_cameras(m.trajectory, m.round_trip, err);
  const int h = cams[0].intrinsics.height, w = cams[0].intrinsics.width;

  std::vector<Frame> real;
  std::vector<LabelMap> labels;
  std::vector<FlowField> flows;
  if (m.frames_dir) {
    real = read_frames(*m.frames_dir, cams.size());
    labels.assign(cams.size(), LabelMap{h, w, std::vector<int>(static_cast<std::size_t>(h) * w, 0)});
  } else {
    const Simulation sim = simulate(*scene, cams);
    write_simulation(dir / "gt", sim);
    for (const auto& g : sim.gt) {
      real.push_back(g.rgb);
      labels.push_back(g.semantics);
    }
    flows = sim.flows;
  }

  WorldCloud world = initial_cloud(m.cloud, scene, m.density);
  const auto guidance = guidance_for_sequence(
      world, cams, [&](std::size_t t, const GuidanceImage&, const Camera&) { return real[t]; },
      m.color_policy);
  write_guidance_sequence(dir / "guidance", guidance);
  io::write_ply(dir / "cloud.ply", world);
  io::write_trajectory(dir / "cameras.json", cams);

  const ToyModelSpecs specs = toy_model_specs(h, w, m.label_channels, m.seed, m.generator_widths);
  const ToyNetworks nets(specs);
  nets.write(dir / "networks");
  std::vector<Frame> fake;
  for (std::size_t t = 0; t < cams.size(); ++t) {
    std::optional<Frame> warped;
    if (t > 0 && !flows.empty()) warped = warp(fake[t - 1], flows[t]).image;
    fake.push_back(nets.run(labels[t], warped ? &*warped : nullptr, guidance[t]));
    write_frame(dir / "generated", "frame", t, fake.back());
  }

  const LossReport losses =
      compute_losses(real, fake, &guidance, flows.empty() ? nullptr : &flows, m.loss_weights, m.seed);
  json report = {{"losses", loss_report_to_json(losses, m.loss_weights, m.seed)},
                 {"frames", cams.size()},
                 {"colorized_points", world.colorized_count()},
                 {"points", world.size()}};
  if (m.round_trip) {
    const GuidanceImage& final_g = guidance.back();
    report["fb_consistency"] = io::consistency_to_json(fb_consistency(real[0], final_g.rgb, final_g.valid));
  }
  if (!flows.empty()) {
    report["short_term"] = {{"ground_truth", short_term_consistency(real, flows)},
                            {"generated", short_term_consistency(fake, flows)}};
  }
  io::write_json(dir / "report.json", report);
  io::write_json(dir / "run.json", {{"seed", m.seed},
                                    {"density", m.density},
                                    {"round_trip", m.round_trip},
                                    {"color_policy", io::manifest_to_json(m).at("color_policy")},
                                    {"loss_weights", io::loss_weights_to_json(m.loss_weights)},
                                    {"label_channels", m.label_channels},
                                    {"generator_widths", m.generator_widths}});
  out << "pipeline: " << cams.size() << " frames written to " << dir.string() << '\n';
  return 0;
}

void apply_thread_env() {
  if (const char* env = std::getenv("WCVS_NUM_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) omp_set_num_threads(n);
  }
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  apply_thread_env();
  CLI::App app{"World-consistent video synthesis toolkit", "wcvs"};
  app.require_subcommand(1);
  Options o;
  std::function<int()> action;

  auto seed_opt = [&](CLI::App* sub) {
    sub->add_option("--seed", o.seed, "Seed for every stochastic component");
  };

  auto* sim = app.add_subcommand("simulate", "Render ground truth frames, depth, semantics and flows");
  sim->add_option("--scene", o.scene, "Scene JSON")->required()->check(CLI::ExistingFile);
  sim->add_option("--trajectory", o.trajectory, "Camera list or trajectory spec JSON")
      ->required()
      ->check(CLI::ExistingFile);
  sim->add_option("--out", o.out, "Output directory")->required();
  sim->add_flag("--round-trip", o.round_trip, "Append the reversed path");
  seed_opt(sim);
  sim->callback([&] { action = [&] { return cmd_simulate(o, out, err); }; });

  auto* guide = app.add_subcommand("guide", "Run the guidance loop over a trajectory");
  guide->add_option("--trajectory", o.trajectory)->required()->check(CLI::ExistingFile);
  guide->add_option("--cloud", o.cloud, "Point cloud PLY")->check(CLI::ExistingFile);
  guide->add_option("--scene", o.scene, "Scene JSON; samples the cloud and renders frames")
      ->check(CLI::ExistingFile);
  guide->add_option("--frames", o.frames, "Directory of frame_NNNN.pfm")->check(CLI::ExistingDirectory);
  guide->add_option("--density", o.density, "Points per unit area when sampling");
  guide->add_option("--policy", o.policy, "first_write_wins or running_average");
  guide->add_option("--out", o.out)->required();
  guide->add_flag("--round-trip", o.round_trip);
  seed_opt(guide);
  guide->callback([&] {
    o.seed_given = guide->count("--seed") > 0;
    action = [&] { return cmd_guide(o, out, err); };
  });

  auto* stereo = app.add_subcommand("stereo", "Left/right guidance from one shared cloud");
  stereo->add_option("--scene", o.scene)->required()->check(CLI::ExistingFile);
  stereo->add_option("--trajectory", o.trajectory, "stereo_pair trajectory spec")
      ->required()
      ->check(CLI::ExistingFile);
  stereo->add_option("--density", o.density);
  stereo->add_option("--policy", o.policy);
  stereo->add_option("--out", o.out)->required();
  seed_opt(stereo);
  stereo->callback([&] {
    o.seed_given = stereo->count("--seed") > 0;
    action = [&] { return cmd_stereo(o, out, err); };
  });

  auto* losses = app.add_subcommand("losses", "Loss report for generated frames");
  losses->add_option("--real", o.real, "Directory of real frame_NNNN.pfm")->required()->check(CLI::ExistingDirectory);
  losses->add_option("--fake", o.fake, "Directory of generated frame_NNNN.pfm")
      ->required()
      ->check(CLI::ExistingDirectory);
  losses->add_option("--guidance", o.guidance, "Directory of guidance_NNNN files")->check(CLI::ExistingDirectory);
  losses->add_option("--flows", o.flows, "Directory of flow_NNNN files")->check(CLI::ExistingDirectory);
  losses->add_option("--weights", o.weights, "Loss weights JSON")->check(CLI::ExistingFile);
  losses->add_option("--out", o.out, "Report path (stdout if omitted)");
  seed_opt(losses);
  losses->callback([&] { action = [&] { return cmd_losses(o, out, err); }; });

  auto* metrics = app.add_subcommand("metrics", "Consistency metrics");
  metrics->require_subcommand(1);
  auto* fb = metrics->add_subcommand("fb", "Forward-backward consistency of two frames");
  fb->add_option("--first", o.first)->required()->check(CLI::ExistingFile);
  fb->add_option("--last", o.last)->required()->check(CLI::ExistingFile);
  fb->add_option("--mask", o.mask, "PBM of pixels to compare")->check(CLI::ExistingFile);
  fb->add_option("--out", o.out);
  fb->callback([&] { action = [&] { return cmd_metrics_fb(o, out, err); }; });
  auto* st = metrics->add_subcommand("short-term", "Flow-warped neighbor-frame consistency");
  st->add_option("--frames", o.frames)->required()->check(CLI::ExistingDirectory);
  st->add_option("--flows", o.flows)->required()->check(CLI::ExistingDirectory);
  st->add_option("--out", o.out);
  st->callback([&] { action = [&] { return cmd_metrics_short(o, out, err); }; });

  auto* gc = app.add_subcommand("gradcheck", "Analytic vs finite-difference gradients");
  seed_opt(gc);
  gc->add_option("--count", o.count, "Number of seeds")->check(CLI::PositiveNumber);
  gc->add_option("--op", o.op, "Single operation");
  gc->add_option("--out", o.out);
  gc->callback([&] { action = [&] { return cmd_gradcheck(o, out, err); }; });

  auto* ns = app.add_subcommand("netspec", "Emit or validate toy network specs");
  ns->require_subcommand(1);
  auto* emit = ns->add_subcommand("emit");
  emit->add_option("--role", o.role);
  emit->add_option("--height", o.height);
  emit->add_option("--width", o.width);
  emit->add_option("--label-channels", o.label_channels);
  emit->add_option("--widths", o.widths, "Generator widths, coarse to fine");
  emit->add_option("--out", o.out);
  seed_opt(emit);
  emit->callback([&] { action = [&] { return cmd_netspec_emit(o, out, err); }; });
  auto* validate = ns->add_subcommand("validate");
  validate->add_option("file", o.file)->required()->check(CLI::ExistingFile);
  validate->callback([&] { action = [&] { return cmd_netspec_validate(o, out, err); }; });

  auto* pipe = app.add_subcommand("pipeline", "Full run from a project manifest");
  pipe->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
  pipe->callback([&] { action = [&] { return cmd_pipeline(o, out, err); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 1;
  }
  try {
    return action();
  } catch (const CLI::ValidationError& e) {
    err << "usage error: " << e.what() << '\n';
    return 1;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
}

}  // namespace wcvs
