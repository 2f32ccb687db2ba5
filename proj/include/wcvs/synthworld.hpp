#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "wcvs/geometry.hpp"
#include "wcvs/image.hpp"
#include "wcvs/world.hpp"

namespace wcvs {

struct Texture {
  enum class Kind { Solid, Checker };
  Kind kind = Kind::Solid;
  Rgb color_a{1.0, 1.0, 1.0};
  Rgb color_b{0.0, 0.0, 0.0};
  double period = 1.0;  // checker cell size in world units

  Rgb sample(double a, double b) const;
  bool operator==(const Texture&) const = default;
};

// Planar convex quad, corners in winding order.
struct Quad {
  std::array<Point3, 4> corners;
  Texture texture;
  int semantic_id = 1;

  bool operator==(const Quad&) const = default;
};

struct SceneSpec {
  std::vector<Quad> quads;
  std::uint64_t seed = 0;

  // Throws Error(BadSpec) for non-planar or non-convex quads or ids < 1.
  void validate() const;
  bool operator==(const SceneSpec&) const = default;
};

struct LabelMap {
  int height = 0;
  int width = 0;
  std::vector<int> ids;

  int at(int y, int x) const { return ids[static_cast<std::size_t>(y) * width + x]; }
  bool operator==(const LabelMap&) const = default;
};

struct GroundTruth {
  Frame rgb;
  DepthMap depth;  // +inf on background
  LabelMap semantics;
};

struct RayHit {
  double depth;
  Rgb color;
  int semantic_id;
  std::size_t quad;
};

// Nearest quad hit along the ray through continuous pixel (u, v); ties go to
// the lowest quad index.
std::optional<RayHit> raycast(const SceneSpec& scene, const Camera& cam, double u, double v);

// Stratified jittered samples, round(edge_u * sqrt(density)) x
// round(edge_v * sqrt(density)) per quad. All points uncolorized.
WorldCloud sample_cloud(const SceneSpec& scene, double density);

// Ray-cast render through pixel centers.
GroundTruth render_gt(const SceneSpec& scene, const Camera& cam);

struct TrajectorySpec {
  enum class Kind { Linear, Orbit, RoundTrip, StereoPair };
  Kind kind = Kind::Linear;
  int frames = 1;
  Intrinsics intrinsics;
  Point3 up{0.0, -1.0, 0.0};
  // Linear, round-trip and stereo paths.
  Point3 start_eye{0.0, 0.0, 0.0};
  Point3 start_target{0.0, 0.0, 1.0};
  Point3 end_eye{0.0, 0.0, 0.0};
  Point3 end_target{0.0, 0.0, 1.0};
  // Orbit path: eye = center + radius * (sin a, 0, -cos a) + (0, height, 0).
  Point3 center{0.0, 0.0, 5.0};
  double radius = 5.0;
  double height = 0.0;
  double start_angle = 0.0;
  double end_angle = 0.0;
  // Stereo: right camera offset along camera +x.
  double baseline = 0.0;

  bool operator==(const TrajectorySpec&) const = default;
};

// Linear: translation lerp + rotation slerp between start and end. RoundTrip:
// the linear path followed by its reverse (2N - 1 cameras). StereoPair: the
// left cameras of make_stereo_trajectory. Throws Error(BadSpec).
std::vector<Camera> make_trajectory(const TrajectorySpec& spec);

// Left/right camera lists for a StereoPair spec.
std::pair<std::vector<Camera>, std::vector<Camera>> make_stereo_trajectory(const TrajectorySpec& spec);

namespace serial {
GroundTruth render_gt(const SceneSpec& scene, const Camera& cam);
}  // namespace serial

}  // namespace wcvs
