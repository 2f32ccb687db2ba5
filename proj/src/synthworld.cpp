#include "wcvs/synthworld.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wcvs/error.hpp"
#include "wcvs/metrics.hpp"
#include "wcvs/random.hpp"

namespace wcvs {

namespace {

constexpr double kPlanarTolerance = 1e-9;

Point3 quad_normal(const Quad& q) {
  return (q.corners[1] - q.corners[0]).cross(q.corners[3] - q.corners[0]).normalized();
}

// In-plane orthonormal basis anchored at corner 0, used for texture lookup.
void quad_basis(const Quad& q, Point3& eu, Point3& ev) {
  eu = (q.corners[1] - q.corners[0]).normalized();
  const Point3 side = q.corners[3] - q.corners[0];
  ev = (side - side.dot(eu) * eu).normalized();
}

Point3 bilinear_point(const Quad& q, double s, double t) {
  return (1.0 - s) * (1.0 - t) * q.corners[0] + s * (1.0 - t) * q.corners[1] +
         s * t * q.corners[2] + (1.0 - s) * t * q.corners[3];
}

std::optional<RayHit> intersect(const Quad& q, std::size_t index, const Point3& origin,
                                const Point3& dir) {
  const Point3 n = quad_normal(q);
  const double denom = n.dot(dir);
  if (std::abs(denom) < 1e-15) return std::nullopt;
  const double t = n.dot(q.corners[0] - origin) / denom;
  if (!(t > kDepthEpsilon)) return std::nullopt;
  const Point3 hit = origin + t * dir;
  for (int i = 0; i < 4; ++i) {
    const Point3& a = q.corners[i];
    const Point3& b = q.corners[(i + 1) % 4];
    if ((b - a).cross(hit - a).dot(n) < 0.0) return std::nullopt;
  }
  Point3 eu, ev;
  quad_basis(q, eu, ev);
  const Point3 rel = hit - q.corners[0];
  return RayHit{t, q.texture.sample(rel.dot(eu), rel.dot(ev)), q.semantic_id, index};
}

void check_trajectory_spec(const TrajectorySpec& spec) {
  if (spec.frames < 1) throw Error(ErrorCode::BadSpec, "trajectory needs at least one frame");
  try {
    spec.intrinsics.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::BadSpec, e.what());
  }
  if (spec.kind == TrajectorySpec::Kind::Orbit && !(spec.radius > 0.0)) {
    throw Error(ErrorCode::BadSpec, "orbit radius must be positive");
  }
  if (!std::isfinite(spec.baseline)) throw Error(ErrorCode::BadSpec, "baseline must be finite");
}

std::vector<Camera> linear_path(const TrajectorySpec& spec) {
  const Pose start = look_at(spec.start_eye, spec.start_target, spec.up);
  const Pose end = look_at(spec.end_eye, spec.end_target, spec.up);
  const Eigen::Quaterniond q0(start.rotation());
  const Eigen::Quaterniond q1(end.rotation());
  std::vector<Camera> cams;
  cams.reserve(static_cast<std::size_t>(spec.frames));
  for (int k = 0; k < spec.frames; ++k) {
    if (k == 0) {
      cams.push_back({spec.intrinsics, start});
      continue;
    }
    const double a = static_cast<double>(k) / (spec.frames - 1);
    const Point3 eye = (1.0 - a) * start.center() + a * end.center();
    const Matrix3 r = nearest_rotation(q0.slerp(a, q1).normalized().toRotationMatrix());
    cams.push_back({spec.intrinsics, Pose(r, -(r * eye))});
  }
  return cams;
}

std::vector<Camera> orbit_path(const TrajectorySpec& spec) {
  std::vector<Camera> cams;
  for (int k = 0; k < spec.frames; ++k) {
    const double a = spec.frames == 1 ? 0.0 : static_cast<double>(k) / (spec.frames - 1);
    const double angle = (1.0 - a) * spec.start_angle + a * spec.end_angle;
    const Point3 eye = spec.center +
                       spec.radius * Point3(std::sin(angle), 0.0, -std::cos(angle)) +
                       Point3(0.0, spec.height, 0.0);
    cams.push_back({spec.intrinsics, look_at(eye, spec.center, spec.up)});
  }
  return cams;
}

template <typename Fn>
GroundTruth render_with(const SceneSpec& scene, const Camera& cam, Fn&& for_rows) {
  const int h = cam.intrinsics.height, w = cam.intrinsics.width;
  GroundTruth gt{Image(h, w, 3, 0.0), Image(h, w, 1, std::numeric_limits<double>::infinity()),
                 LabelMap{h, w, std::vector<int>(static_cast<std::size_t>(h) * w, 0)}};
  for_rows(h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const auto hit = raycast(scene, cam, x, y);
      if (!hit) continue;
      for (int c = 0; c < 3; ++c) gt.rgb.at(y, x, c) = hit->color[c];
      gt.depth.at(y, x) = hit->depth;
      gt.semantics.ids[static_cast<std::size_t>(y) * w + x] = hit->semantic_id;
    }
  });
  return gt;
}

}  // namespace

Rgb Texture::sample(double a, double b) const {
  if (kind == Kind::Solid) return color_a;
  const auto cell = static_cast<long long>(std::floor(a / period)) +
                    static_cast<long long>(std::floor(b / period));
  return (cell % 2 == 0) ? color_a : color_b;
}

void SceneSpec::validate() const {
  for (std::size_t i = 0; i < quads.size(); ++i) {
    const Quad& q = quads[i];
    const std::string where = "quad " + std::to_string(i);
    if (q.semantic_id < 1) throw Error(ErrorCode::BadSpec, where + ": semantic id must be >= 1");
    for (const auto& c : q.corners) {
      if (!c.allFinite()) throw Error(ErrorCode::BadSpec, where + ": non-finite corner");
    }
    const Point3 raw_n = (q.corners[1] - q.corners[0]).cross(q.corners[3] - q.corners[0]);
    if (raw_n.norm() == 0.0) throw Error(ErrorCode::BadSpec, where + ": degenerate");
    const Point3 n = raw_n.normalized();
    if (std::abs(n.dot(q.corners[2] - q.corners[0])) > kPlanarTolerance) {
      throw Error(ErrorCode::BadSpec, where + ": not planar");
    }
    for (int k = 0; k < 4; ++k) {
      const Point3 e0 = q.corners[(k + 1) % 4] - q.corners[k];
      const Point3 e1 = q.corners[(k + 2) % 4] - q.corners[(k + 1) % 4];
      if (e0.cross(e1).dot(n) <= 0.0) throw Error(ErrorCode::BadSpec, where + ": not convex");
    }
    for (double v : q.texture.color_a) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadSpec, where + ": color outside [0,1]");
    }
    for (double v : q.texture.color_b) {
      if (!(v >= 0.0 && v <= 1.0)) throw Error(ErrorCode::BadSpec, where + ": color outside [0,1]");
    }
    if (q.texture.kind == Texture::Kind::Checker && !(q.texture.period > 0.0)) {
      throw Error(ErrorCode::BadSpec, where + ": checker period must be positive");
    }
  }
}

std::optional<RayHit> raycast(const SceneSpec& scene, const Camera& cam, double u, double v) {
  const Intrinsics& k = cam.intrinsics;
  const Matrix3 rt = cam.pose.rotation().transpose();
  const Point3 dir = rt * Point3((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
  const Point3 origin = cam.pose.center();
  std::optional<RayHit> best;
  for (std::size_t i = 0; i < scene.quads.size(); ++i) {
    auto hit = intersect(scene.quads[i], i, origin, dir);
    if (hit && (!best || hit->depth < best->depth)) best = hit;
  }
  return best;
}

WorldCloud sample_cloud(const SceneSpec& scene, double density) {
  if (!(density > 0.0)) throw Error(ErrorCode::BadSpec, "density must be positive");
  scene.validate();
  Rng rng(scene.seed);
  const double per_unit = std::sqrt(density);
  std::vector<Point3> points;
  for (const Quad& q : scene.quads) {
    const auto& c = q.corners;
    const double len_u = 0.5 * ((c[1] - c[0]).norm() + (c[2] - c[3]).norm());
    const double len_v = 0.5 * ((c[3] - c[0]).norm() + (c[2] - c[1]).norm());
    const int nu = std::max(1, static_cast<int>(std::lround(len_u * per_unit)));
    const int nv = std::max(1, static_cast<int>(std::lround(len_v * per_unit)));
    for (int j = 0; j < nv; ++j) {
      for (int i = 0; i < nu; ++i) {
        const double s = (i + rng.uniform()) / nu;
        const double t = (j + rng.uniform()) / nv;
        points.push_back(bilinear_point(q, s, t));
      }
    }
  }
  return WorldCloud(std::move(points));
}

GroundTruth render_gt(const SceneSpec& scene, const Camera& cam) {
  return render_with(scene, cam, [](int h, auto&& row) {
#pragma omp parallel for schedule(dynamic, 4)
    for (int y = 0; y < h; ++y) row(y);
  });
}

namespace serial {
GroundTruth render_gt(const SceneSpec& scene, const Camera& cam) {
  return render_with(scene, cam, [](int h, auto&& row) {
    for (int y = 0; y < h; ++y) row(y);
  });
}
}  // namespace serial

std::vector<Camera> make_trajectory(const TrajectorySpec& spec) {
  check_trajectory_spec(spec);
  switch (spec.kind) {
    case TrajectorySpec::Kind::Linear:
      return linear_path(spec);
    case TrajectorySpec::Kind::Orbit:
      return orbit_path(spec);
    case TrajectorySpec::Kind::RoundTrip:
      return reverse_trajectory(linear_path(spec));
    case TrajectorySpec::Kind::StereoPair:
      return make_stereo_trajectory(spec).first;
  }
  throw Error(ErrorCode::BadSpec, "unknown trajectory kind");
}

std::pair<std::vector<Camera>, std::vector<Camera>> make_stereo_trajectory(
    const TrajectorySpec& spec) {
  check_trajectory_spec(spec);
  std::vector<Camera> left = linear_path(spec);
  std::vector<Camera> right = left;
  for (Camera& cam : right) {
    cam.pose = Pose(cam.pose.rotation(), cam.pose.translation() - Point3(spec.baseline, 0.0, 0.0));
  }
  return {std::move(left), std::move(right)};
}

}  // namespace wcvs
