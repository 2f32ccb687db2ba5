#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "wcvs/geometry.hpp"
#include "wcvs/image.hpp"

namespace wcvs {

using Rgb = std::array<double, 3>;

// Depths within this distance of a pixel's nearest depth count as ties and
// are resolved by lowest point index.
inline constexpr double kDepthTieTolerance = 1e-9;

enum class ColorPolicy { FirstWriteWins, RunningAverage };

// The persistent point-cloud world. Geometry is fixed at construction; only
// the color state changes. Points are never un-colorized.
class WorldCloud {
 public:
  WorldCloud() = default;
  explicit WorldCloud(std::vector<Point3> points);

  std::size_t size() const { return points_.size(); }
  const std::vector<Point3>& points() const { return points_; }
  const std::vector<Rgb>& colors() const { return colors_; }
  const std::vector<std::uint8_t>& colorized() const { return colorized_; }
  const std::vector<std::uint32_t>& write_count() const { return write_count_; }
  std::size_t colorized_count() const;

  // Sets a point's color directly (used by loaders). Color must be in [0,1].
  void set_color(std::size_t i, const Rgb& rgb, std::uint32_t writes = 1);
  // Records one more observation of point i under `policy`.
  void observe(std::size_t i, const Rgb& rgb, ColorPolicy policy);
  // Drops every color; only used by sliding-window baselines.
  void clear_colors();

  bool operator==(const WorldCloud&) const = default;

 private:
  std::vector<Point3> points_;
  std::vector<Rgb> colors_;
  std::vector<std::uint8_t> colorized_;
  std::vector<std::uint32_t> write_count_;
};

// Per-pixel winner of the point z-buffer. index = -1 where nothing projects.
struct ZBuffer {
  int height = 0;
  int width = 0;
  std::vector<double> depth;
  std::vector<std::int64_t> index;

  std::int64_t winner(int y, int x) const { return index[static_cast<std::size_t>(y) * width + x]; }
};

struct GuidanceImage {
  Image rgb;    // H x W x 3, zero where invalid
  Mask valid;   // H x W
  Image depth;  // H x W x 1, +inf where invalid

  bool operator==(const GuidanceImage&) const = default;
};

// Nearest-pixel splat of every point (colorized or not). For each pixel the
// winner is the lowest-index point among those within kDepthTieTolerance of
// the pixel's minimum depth, which makes the result independent of
// evaluation order.
ZBuffer build_zbuffer(const WorldCloud& world, const Camera& cam);

// Throws Error(SizeMismatch) if (height, width) differs from the intrinsics.
GuidanceImage render_guidance(const WorldCloud& world, const Camera& cam, int height, int width);
GuidanceImage render_guidance(const WorldCloud& world, const Camera& cam);

// Writes frame colors into the points that win their pixel's z-buffer.
void colorize(WorldCloud& world, const Frame& frame, const Camera& cam,
              ColorPolicy policy = ColorPolicy::FirstWriteWins);

// Produces the frame for step t given the guidance rendered for that step.
using FrameCallback =
    std::function<Frame(std::size_t t, const GuidanceImage& guidance, const Camera& cam)>;

// Generator loop: render guidance, obtain the frame, colorize. The guidance
// at step t reflects every frame before t.
std::vector<GuidanceImage> guidance_for_sequence(WorldCloud& world, const std::vector<Camera>& cams,
                                                 const FrameCallback& frames,
                                                 ColorPolicy policy = ColorPolicy::FirstWriteWins);

// Both views rendered from the same world state, with no colorization between.
std::pair<GuidanceImage, GuidanceImage> shared_stereo_guidance(const WorldCloud& world,
                                                               const Camera& left,
                                                               const Camera& right, int height,
                                                               int width);

namespace serial {
// Single-threaded reference with the same contract as wcvs::build_zbuffer.
ZBuffer build_zbuffer(const WorldCloud& world, const Camera& cam);
}  // namespace serial

}  // namespace wcvs
