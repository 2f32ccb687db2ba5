#include <cmath>
#include <limits>

#include "test_util.hpp"
#include "wcvs/error.hpp"
#include "wcvs/metrics.hpp"
#include "wcvs/synthworld.hpp"

namespace wcvs {
namespace {

using test::camera_at;
using test::quad;
using test::wall;

const Camera kFront = camera_at(Point3(0, 0, 0), Point3(0, 0, 1));

TEST(SampleCloud, UnitQuadCount) {
  const SceneSpec s{{quad(Point3(0, 0, 3), Point3(1, 0, 3), Point3(1, 1, 3), Point3(0, 1, 3), {1, 0, 0})}, 4};
  const WorldCloud c = sample_cloud(s, 100.0);
  EXPECT_EQ(c.size(), 100u);
  EXPECT_EQ(c.colorized_count(), 0u);
  for (const Point3& p : c.points()) {
    EXPECT_NEAR(p.z(), 3.0, 1e-9);
    EXPECT_GE(p.x(), 0.0);
    EXPECT_LE(p.x(), 1.0);
  }
}

TEST(SampleCloud, PointsLieOnTiltedPlane) {
  const SceneSpec s = test::checker_scene(9);
  const WorldCloud c = sample_cloud(s, 16.0);
  // Floor points are the second quad's block; check every point is on some quad plane.
  for (const Point3& p : c.points()) {
    const bool on_back = std::abs(p.z() - 6.0) < 1e-9;
    const bool on_floor = std::abs(p.y() - 1.5) < 1e-9;
    const bool on_box = std::abs(p.z() - 4.0) < 1e-9;
    EXPECT_TRUE(on_back || on_floor || on_box) << p.transpose();
  }
}

TEST(SampleCloud, SeedDeterminism) {
  EXPECT_EQ(sample_cloud(test::checker_scene(3), 9.0), sample_cloud(test::checker_scene(3), 9.0));
  EXPECT_NE(sample_cloud(test::checker_scene(3), 9.0), sample_cloud(test::checker_scene(4), 9.0));
  EXPECT_THROW(sample_cloud(test::checker_scene(3), 0.0), Error);
}

TEST(RenderGt, FrontoParallelQuad) {
  const SceneSpec s{{wall(5.0, 1.0, {1, 0, 0}, 7)}, 0};
  const GroundTruth gt = render_gt(s, kFront);
  // Half-extent 1 at depth 5 spans 56/5 = 11.2 px either side of 31.5.
  EXPECT_EQ(gt.depth.at(31, 31), 5.0);
  EXPECT_EQ(gt.rgb.at(31, 31, 0), 1.0);
  EXPECT_EQ(gt.rgb.at(31, 31, 1), 0.0);
  EXPECT_EQ(gt.semantics.at(31, 31), 7);
  EXPECT_EQ(gt.semantics.at(0, 0), 0);
  EXPECT_TRUE(std::isinf(gt.depth.at(0, 0)));
  EXPECT_EQ(gt.rgb.at(0, 0, 0), 0.0);
}

TEST(RenderGt, NearerQuadWins) {
  const SceneSpec s{{wall(8.0, 3.0, {0, 0, 1}, 1), wall(4.0, 0.5, {0, 1, 0}, 2)}, 0};
  const GroundTruth gt = render_gt(s, kFront);
  EXPECT_EQ(gt.semantics.at(31, 31), 2);
  EXPECT_EQ(gt.depth.at(31, 31), 4.0);
  EXPECT_EQ(gt.semantics.at(31, 15), 1);
  EXPECT_EQ(gt.depth.at(31, 15), 8.0);
}

TEST(RenderGt, EmptySceneIsBackground) {
  const GroundTruth gt = render_gt(SceneSpec{}, kFront);
  for (double v : gt.rgb.data()) EXPECT_EQ(v, 0.0);
  for (double d : gt.depth.data()) EXPECT_TRUE(std::isinf(d));
}

TEST(RenderGt, FloorDepthMatchesRayPlaneOracle) {
  const SceneSpec s{{quad(Point3(-50, 1.5, 0.5), Point3(50, 1.5, 0.5), Point3(50, 1.5, 80),
                          Point3(-50, 1.5, 80), {0.5, 0.5, 0.5})},
                    0};
  const GroundTruth gt = render_gt(s, kFront);
  const Intrinsics& k = kFront.intrinsics;
  int checked = 0;
  for (int y = 0; y < 64; ++y) {
    for (int x = 0; x < 64; ++x) {
      const double ry = (y - k.cy) / k.fy;
      const double z = ry > 0 ? 1.5 / ry : std::numeric_limits<double>::infinity();
      const double xw = z * (x - k.cx) / k.fx;
      if (!(z >= 0.5 && z <= 80 && std::abs(xw) <= 50)) {
        EXPECT_TRUE(std::isinf(gt.depth.at(y, x))) << y << "," << x;
        continue;
      }
      EXPECT_NEAR(gt.depth.at(y, x), z, 1e-6) << y << "," << x;
      ++checked;
    }
  }
  EXPECT_GT(checked, 500);
}

TEST(RenderGt, CheckerAlternates) {
  Quad q = wall(5.0, 2.0, {1, 1, 1});
  q.texture = {Texture::Kind::Checker, {1, 1, 1}, {0, 0, 0}, 1.0};
  const GroundTruth gt = render_gt(SceneSpec{{q}, 0}, kFront);
  double lo = 1, hi = 0;
  for (int x = 15; x < 48; ++x) {
    lo = std::min(lo, gt.rgb.at(31, x, 0));
    hi = std::max(hi, gt.rgb.at(31, x, 0));
  }
  EXPECT_EQ(lo, 0.0);
  EXPECT_EQ(hi, 1.0);
}

TrajectorySpec linear_spec(int frames) {
  TrajectorySpec t;
  t.frames = frames;
  t.intrinsics = test::intrinsics(64, 56);
  t.start_eye = Point3(-0.5, 0, 0);
  t.end_eye = Point3(0.5, -0.2, 0.3);
  t.start_target = Point3(0, 0, 6);
  t.end_target = Point3(0.3, 0, 6);
  return t;
}

TEST(Trajectory, LinearEndpoints) {
  const auto cams = make_trajectory(linear_spec(5));
  ASSERT_EQ(cams.size(), 5u);
  EXPECT_LT((cams.front().pose.center() - Point3(-0.5, 0, 0)).norm(), 1e-12);
  EXPECT_LT((cams.back().pose.center() - Point3(0.5, -0.2, 0.3)).norm(), 1e-12);
  for (const Camera& c : cams) EXPECT_LT(orthonormality_error(c.pose.rotation()), 1e-12);
  EXPECT_EQ(make_trajectory(linear_spec(1)).size(), 1u);
}

TEST(Trajectory, RoundTripIsPalindrome) {
  TrajectorySpec t = linear_spec(4);
  t.kind = TrajectorySpec::Kind::RoundTrip;
  const auto cams = make_trajectory(t);
  ASSERT_EQ(cams.size(), 7u);
  for (std::size_t k = 0; k < cams.size(); ++k) EXPECT_EQ(cams[k], cams[cams.size() - 1 - k]);
}

TEST(Trajectory, Orbit) {
  TrajectorySpec t;
  t.kind = TrajectorySpec::Kind::Orbit;
  t.frames = 3;
  t.intrinsics = test::intrinsics(32, 28);
  t.radius = 4.0;
  t.end_angle = 0.2;
  const auto cams = make_trajectory(t);
  for (const Camera& c : cams) {
    EXPECT_NEAR((c.pose.center() - t.center).norm(), 4.0, 1e-12);
    EXPECT_NEAR(transform_to_camera(t.center, c.pose).x(), 0.0, 1e-12);
  }
  t.radius = 0;
  EXPECT_THROW(make_trajectory(t), Error);
}

TEST(Trajectory, StereoBaseline) {
  TrajectorySpec t = linear_spec(3);
  t.kind = TrajectorySpec::Kind::StereoPair;
  const auto [l0, r0] = make_stereo_trajectory(t);
  EXPECT_EQ(l0, r0);
  t.baseline = 0.3;
  const auto [l, r] = make_stereo_trajectory(t);
  for (std::size_t k = 0; k < l.size(); ++k) {
    const Point3 offset = transform_to_camera(r[k].pose.center(), l[k].pose);
    EXPECT_NEAR(offset.x(), 0.3, 1e-12);
    EXPECT_NEAR(offset.y(), 0.0, 1e-12);
    EXPECT_NEAR(offset.z(), 0.0, 1e-12);
  }
  EXPECT_EQ(make_trajectory(t), l);
}

TEST(Trajectory, Validation) {
  TrajectorySpec t = linear_spec(0);
  try {
    make_trajectory(t);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BadSpec);
  }
  t = linear_spec(2);
  t.end_target = t.end_eye;
  EXPECT_THROW(make_trajectory(t), Error);
}

TEST(SceneSpec, Validation) {
  SceneSpec bad{{wall(5, 1, {1, 0, 0})}, 0};
  bad.quads[0].corners[2].z() = 5.5;
  EXPECT_THROW(bad.validate(), Error);
  SceneSpec bowtie{{wall(5, 1, {1, 0, 0})}, 0};
  std::swap(bowtie.quads[0].corners[1], bowtie.quads[0].corners[2]);
  EXPECT_THROW(bowtie.validate(), Error);
  SceneSpec id0{{wall(5, 1, {1, 0, 0}, 0)}, 0};
  EXPECT_THROW(id0.validate(), Error);
  SceneSpec color{{wall(5, 1, {1.5, 0, 0})}, 0};
  EXPECT_THROW(color.validate(), Error);
  EXPECT_NO_THROW(test::checker_scene().validate());
}

TEST(RenderGt, SerialMatchesParallel) {
  const Camera cam = camera_at(Point3(0.3, -0.2, 0), Point3(0, 0.5, 6));
  const GroundTruth a = render_gt(test::checker_scene(), cam), b = serial::render_gt(test::checker_scene(), cam);
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_EQ(a.depth, b.depth);
  EXPECT_EQ(a.semantics, b.semantics);
}

}  // namespace
}  // namespace wcvs
