#include "wcvs/world.hpp"

#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <string>

#include "splat.hpp"
#include "wcvs/error.hpp"

namespace wcvs {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void check_size(const Camera& cam, int height, int width) {
  if (cam.intrinsics.height != height || cam.intrinsics.width != width) {
    throw Error(ErrorCode::SizeMismatch, "image size does not match camera intrinsics");
  }
}

// Positive doubles order the same way as their bit patterns.
inline void atomic_min_bits(std::uint64_t& slot, std::uint64_t value) {
  std::atomic_ref<std::uint64_t> ref(slot);
  std::uint64_t cur = ref.load(std::memory_order_relaxed);
  while (value < cur && !ref.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

inline void atomic_min_index(std::int64_t& slot, std::int64_t value) {
  std::atomic_ref<std::int64_t> ref(slot);
  std::int64_t cur = ref.load(std::memory_order_relaxed);
  while (value < cur && !ref.compare_exchange_weak(cur, value, std::memory_order_relaxed)) {
  }
}

}  // namespace

WorldCloud::WorldCloud(std::vector<Point3> points)
    : points_(std::move(points)),
      colors_(points_.size(), Rgb{0.0, 0.0, 0.0}),
      colorized_(points_.size(), 0),
      write_count_(points_.size(), 0) {
  for (const auto& p : points_) {
    if (!p.allFinite()) throw Error(ErrorCode::OutOfRange, "non-finite point");
  }
}

std::size_t WorldCloud::colorized_count() const {
  std::size_t n = 0;
  for (auto c : colorized_) n += c != 0;
  return n;
}

void WorldCloud::set_color(std::size_t i, const Rgb& rgb, std::uint32_t writes) {
  if (i >= points_.size()) throw Error(ErrorCode::OutOfRange, "point index " + std::to_string(i));
  for (double v : rgb) {
    if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::OutOfRange, "color outside [0,1]");
  }
  colors_[i] = rgb;
  colorized_[i] = 1;
  write_count_[i] = writes;
}

void WorldCloud::observe(std::size_t i, const Rgb& rgb, ColorPolicy policy) {
  if (policy == ColorPolicy::FirstWriteWins) {
    if (colorized_[i]) return;
    colors_[i] = rgb;
  } else {
    const double n = write_count_[i];
    for (int c = 0; c < 3; ++c) colors_[i][c] = (colors_[i][c] * n + rgb[c]) / (n + 1.0);
  }
  colorized_[i] = 1;
  ++write_count_[i];
}

void WorldCloud::clear_colors() {
  std::fill(colors_.begin(), colors_.end(), Rgb{0.0, 0.0, 0.0});
  std::fill(colorized_.begin(), colorized_.end(), 0);
  std::fill(write_count_.begin(), write_count_.end(), 0);
}

ZBuffer build_zbuffer(const WorldCloud& world, const Camera& cam) {
  const int height = cam.intrinsics.height;
  const int width = cam.intrinsics.width;
  const std::size_t npix = static_cast<std::size_t>(height) * width;
  const auto n = static_cast<std::int64_t>(world.size());
  const auto& points = world.points();

  std::vector<std::int64_t> pixel(world.size(), -1);
  std::vector<double> depth(world.size(), kInf);
  std::vector<std::uint64_t> min_bits(npix, std::bit_cast<std::uint64_t>(kInf));

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    double d = 0.0;
    const std::int64_t pix = detail::splat_pixel(points[i], cam, d);
    if (pix < 0) continue;
    pixel[i] = pix;
    depth[i] = d;
    atomic_min_bits(min_bits[pix], std::bit_cast<std::uint64_t>(d));
  }

  ZBuffer zb;
  zb.height = height;
  zb.width = width;
  zb.index.assign(npix, std::numeric_limits<std::int64_t>::max());
  zb.depth.assign(npix, kInf);

#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const std::int64_t pix = pixel[i];
    if (pix < 0) continue;
    if (depth[i] <= std::bit_cast<double>(min_bits[pix]) + kDepthTieTolerance) {
      atomic_min_index(zb.index[pix], i);
    }
  }

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < static_cast<std::int64_t>(npix); ++p) {
    if (zb.index[p] == std::numeric_limits<std::int64_t>::max()) {
      zb.index[p] = -1;
    } else {
      zb.depth[p] = depth[zb.index[p]];
    }
  }
  return zb;
}

GuidanceImage render_guidance(const WorldCloud& world, const Camera& cam, int height, int width) {
  check_size(cam, height, width);
  const ZBuffer zb = build_zbuffer(world, cam);

  GuidanceImage g{Image(height, width, 3, 0.0), Mask(height, width, 0),
                  Image(height, width, 1, kInf)};
  const auto& colors = world.colors();
  const auto& colorized = world.colorized();
  const std::int64_t npix = static_cast<std::int64_t>(height) * width;

#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < npix; ++p) {
    const std::int64_t i = zb.index[p];
    if (i < 0 || !colorized[i]) continue;
    const int y = static_cast<int>(p / width);
    const int x = static_cast<int>(p % width);
    for (int c = 0; c < 3; ++c) g.rgb.at(y, x, c) = colors[i][c];
    g.valid.at(y, x) = 1;
    g.depth.at(y, x) = zb.depth[p];
  }
  return g;
}

GuidanceImage render_guidance(const WorldCloud& world, const Camera& cam) {
  return render_guidance(world, cam, cam.intrinsics.height, cam.intrinsics.width);
}

void colorize(WorldCloud& world, const Frame& frame, const Camera& cam, ColorPolicy policy) {
  check_frame(frame);
  check_size(cam, frame.height(), frame.width());
  const ZBuffer zb = build_zbuffer(world, cam);
  const int width = frame.width();
  const std::int64_t npix = static_cast<std::int64_t>(frame.height()) * width;

  // Each point wins at most one pixel, so the writes are disjoint.
#pragma omp parallel for schedule(static)
  for (std::int64_t p = 0; p < npix; ++p) {
    const std::int64_t i = zb.index[p];
    if (i < 0) continue;
    const int y = static_cast<int>(p / width);
    const int x = static_cast<int>(p % width);
    world.observe(static_cast<std::size_t>(i),
                  Rgb{frame.at(y, x, 0), frame.at(y, x, 1), frame.at(y, x, 2)}, policy);
  }
}

std::vector<GuidanceImage> guidance_for_sequence(WorldCloud& world, const std::vector<Camera>& cams,
                                                 const FrameCallback& frames, ColorPolicy policy) {
  std::vector<GuidanceImage> out;
  out.reserve(cams.size());
  for (std::size_t t = 0; t < cams.size(); ++t) {
    out.push_back(render_guidance(world, cams[t]));
    const Frame frame = frames(t, out.back(), cams[t]);
    colorize(world, frame, cams[t], policy);
  }
  return out;
}

std::pair<GuidanceImage, GuidanceImage> shared_stereo_guidance(const WorldCloud& world,
                                                               const Camera& left,
                                                               const Camera& right, int height,
                                                               int width) {
  return {render_guidance(world, left, height, width), render_guidance(world, right, height, width)};
}

}  // namespace wcvs
