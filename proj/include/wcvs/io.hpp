#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "wcvs/geometry.hpp"
#include "wcvs/image.hpp"
#include "wcvs/losses.hpp"
#include "wcvs/metrics.hpp"
#include "wcvs/nn.hpp"
#include "wcvs/synthworld.hpp"
#include "wcvs/world.hpp"

namespace wcvs::io {

namespace fs = std::filesystem;
using nlohmann::json;

// --- point clouds (ASCII PLY) ----------------------------------------------
// Properties x, y, z (double), red, green, blue, colorized (uchar). Colors
// are stored as bytes; reading maps byte b to b / 255. Without a
// `colorized` property every point loads uncolorized.
void write_ply(std::ostream& os, const WorldCloud& cloud);
void write_ply(const fs::path& path, const WorldCloud& cloud);
WorldCloud read_ply(std::istream& is);
WorldCloud read_ply(const fs::path& path);

// --- camera trajectories (JSON) ---------------------------------------------
// {"cameras": [{fx, fy, cx, cy, width, height, rotation[9] row-major,
// translation[3]}]}. Rotations off by at most 1e-6 are projected onto the
// nearest rotation and a warning is appended.
inline constexpr double kRotationReadTolerance = 1e-6;

json trajectory_to_json(const std::vector<Camera>& cams);
std::vector<Camera> trajectory_from_json(const json& j, std::vector<std::string>* warnings = nullptr);
void write_trajectory(const fs::path& path, const std::vector<Camera>& cams);
std::vector<Camera> read_trajectory(const fs::path& path, std::vector<std::string>* warnings = nullptr);

// --- images ----------------------------------------------------------------
// PFM: "Pf" (1 channel), "PF2" (2 channels, flow), "PF" (3 channels);
// little-endian float32, bottom row first. PPM (P6), PGM (P5, 8 or 16 bit),
// PBM (P4, bit set = mask true).
void write_pfm(std::ostream& os, const Image& img);
Image read_pfm(std::istream& is);
void write_ppm(std::ostream& os, const Frame& frame);
Frame read_ppm(std::istream& is);
void write_pgm(std::ostream& os, const LabelMap& labels);
LabelMap read_pgm(std::istream& is);
void write_pbm(std::ostream& os, const Mask& mask);
Mask read_pbm(std::istream& is);

void write_pfm(const fs::path& path, const Image& img);
Image read_pfm(const fs::path& path);
void write_ppm(const fs::path& path, const Frame& frame);
Frame read_ppm(const fs::path& path);
void write_pgm(const fs::path& path, const LabelMap& labels);
LabelMap read_pgm(const fs::path& path);
void write_pbm(const fs::path& path, const Mask& mask);
Mask read_pbm(const fs::path& path);

// Dispatches on the magic number; PGM/PBM load as 1-channel images.
// Throws Error(UnsupportedFormat) for anything else.
Image read_image(const fs::path& path);

// Flow as a PF2 file plus a PBM validity mask.
void write_flow(const fs::path& pfm_path, const fs::path& pbm_path, const FlowField& flow);
FlowField read_flow(const fs::path& pfm_path, const std::optional<fs::path>& pbm_path);

// Guidance as <stem>.pfm (rgb), <stem>_depth.pfm, <stem>_valid.pbm, <stem>.ppm.
void write_guidance(const fs::path& dir, const std::string& stem, const GuidanceImage& g);
GuidanceImage read_guidance(const fs::path& dir, const std::string& stem);

// --- specs -----------------------------------------------------------------
json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const json& j);
json trajectory_spec_to_json(const TrajectorySpec& spec);
TrajectorySpec trajectory_spec_from_json(const json& j);
json network_spec_to_json(const NetworkSpec& spec);
NetworkSpec network_spec_from_json(const json& j);
json loss_weights_to_json(const LossWeights& w);
LossWeights loss_weights_from_json(const json& j);

// Cameras from either a camera list or a TrajectorySpec document.
std::vector<Camera> load_cameras(const fs::path& path, std::vector<std::string>* warnings = nullptr);

// Weights: <stem>.bin (little-endian float32, concatenated in parameter
// order) and <stem>.json manifest {spec, dtype, byte_order, tensors[]}.
void write_weights(const fs::path& stem, const NetworkSpec& spec,
                   const std::vector<ConstNamedTensor>& params);
// Loads into `params`, which must match the manifest's names and shapes.
void read_weights(const fs::path& stem, const std::vector<NamedTensor>& params);

json consistency_to_json(const ConsistencyReport& r);

json read_json(const fs::path& path);
void write_json(const fs::path& path, const json& j);
void write_text(const fs::path& path, const std::string& text);

// --- project manifest -------------------------------------------------------
struct ProjectManifest {
  std::optional<fs::path> scene;       // SceneSpec JSON
  std::optional<fs::path> cloud;       // PLY; sampled from the scene when absent
  fs::path trajectory;                 // camera list or TrajectorySpec JSON
  std::optional<fs::path> frames_dir;  // frame_%04d.pfm; GT renders when absent
  fs::path output_dir;
  double density = 400.0;
  bool round_trip = false;
  ColorPolicy color_policy = ColorPolicy::FirstWriteWins;
  LossWeights loss_weights;
  std::uint64_t seed = 0;
  int label_channels = 4;
  std::vector<int> generator_widths{16, 8};
};

// Relative paths resolve against the manifest's directory. Referenced inputs
// must exist. Throws Error(ParseError / IoError).
ProjectManifest read_manifest(const fs::path& path);
json manifest_to_json(const ProjectManifest& m);

std::string frame_name(const std::string& prefix, std::size_t index, const std::string& ext);

}  // namespace wcvs::io
