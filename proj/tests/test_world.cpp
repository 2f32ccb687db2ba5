#include "test_util.hpp"
#include "wcvs/error.hpp"
#include "wcvs/world.hpp"

namespace wcvs {
namespace {

const Camera kCam{Intrinsics{100, 100, 50, 50, 101, 101}, Pose()};
constexpr Rgb kRed{1, 0, 0};
constexpr Rgb kBlue{0, 0, 1};

Frame solid(int h, int w, Rgb c) {
  Frame f(h, w, 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch) f.at(y, x, ch) = c[ch];
  return f;
}

WorldCloud sampled_cloud(std::uint64_t seed, double density = 300.0) {
  return sample_cloud(test::checker_scene(seed), density);
}

TEST(World, UncolorizedCloudRendersBlack) {
  const WorldCloud world = sampled_cloud(1);
  const GuidanceImage g = render_guidance(world, kCam, 101, 101);
  EXPECT_EQ(g.valid.count(), 0u);
  for (double v : g.rgb.data()) EXPECT_EQ(v, 0.0);
  for (double d : g.depth.data()) EXPECT_TRUE(std::isinf(d));
}

TEST(World, SinglePointLightsOnePixel) {
  WorldCloud world({backproject(10, 20, 3.0, kCam)});
  world.set_color(0, kRed);
  const GuidanceImage g = render_guidance(world, kCam, 101, 101);
  EXPECT_EQ(g.valid.count(), 1u);
  ASSERT_EQ(g.valid.at(20, 10), 1);
  EXPECT_EQ(g.rgb.at(20, 10, 0), 1.0);
  EXPECT_EQ(g.rgb.at(20, 10, 1), 0.0);
  EXPECT_EQ(g.rgb.at(20, 10, 2), 0.0);
  EXPECT_DOUBLE_EQ(g.depth.at(20, 10), 3.0);
}

TEST(World, NearestPointWinsRegardlessOfOrder) {
  for (bool near_first : {true, false}) {
    const Point3 near = backproject(30, 40, 2.0, kCam), far = backproject(30, 40, 5.0, kCam);
    WorldCloud world(near_first ? std::vector<Point3>{near, far} : std::vector<Point3>{far, near});
    world.set_color(near_first ? 0 : 1, kRed);
    world.set_color(near_first ? 1 : 0, kBlue);
    const GuidanceImage g = render_guidance(world, kCam, 101, 101);
    EXPECT_EQ(g.rgb.at(40, 30, 0), 1.0);
    EXPECT_EQ(g.rgb.at(40, 30, 2), 0.0);
  }
}

TEST(World, DepthTiesGoToLowestIndex) {
  const Point3 a = backproject(30, 40, 2.0, kCam);
  const Point3 b = backproject(30.2, 40.1, 2.0 + 5e-10, kCam);
  WorldCloud world({b, a});
  world.set_color(0, kBlue);
  world.set_color(1, kRed);
  const ZBuffer zb = build_zbuffer(world, kCam);
  EXPECT_EQ(zb.winner(40, 30), 0);
  EXPECT_EQ(render_guidance(world, kCam).rgb.at(40, 30, 2), 1.0);
}

TEST(World, UncolorizedPointsOcclude) {
  WorldCloud world({backproject(30, 40, 2.0, kCam), backproject(30, 40, 5.0, kCam)});
  world.set_color(1, kBlue);
  const GuidanceImage g = render_guidance(world, kCam);
  EXPECT_EQ(g.valid.count(), 0u);
}

TEST(World, SplatRoundsToNearestPixel) {
  WorldCloud world({backproject(10.49, 20.6, 3.0, kCam), backproject(-0.6, 5, 3.0, kCam),
                    backproject(100.49, 5, 3.0, kCam)});
  for (std::size_t i = 0; i < 3; ++i) world.set_color(i, kRed);
  const GuidanceImage g = render_guidance(world, kCam);
  EXPECT_EQ(g.valid.at(21, 10), 1);
  EXPECT_EQ(g.valid.at(5, 100), 1);
  EXPECT_EQ(g.valid.count(), 2u);
}

TEST(World, SizeMismatch) {
  const WorldCloud world;
  try {
    render_guidance(world, kCam, 100, 101);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SizeMismatch);
  }
  WorldCloud w2;
  EXPECT_THROW(colorize(w2, solid(10, 10, kRed), kCam), Error);
}

TEST(World, ColorizeSingleVisiblePoint) {
  WorldCloud world({Point3(0, 0, 3)});
  colorize(world, solid(101, 101, kRed), kCam);
  EXPECT_EQ(world.colorized()[0], 1);
  EXPECT_EQ(world.colors()[0], kRed);
}

TEST(World, ColorizeRespectsOcclusion) {
  WorldCloud world({backproject(30, 40, 5.0, kCam), backproject(30, 40, 2.0, kCam)});
  colorize(world, solid(101, 101, kRed), kCam);
  EXPECT_EQ(world.colorized()[1], 1);
  EXPECT_EQ(world.colorized()[0], 0);
}

TEST(World, ColorizeLeavesOutOfViewPointsAlone) {
  WorldCloud world({Point3(0, 0, -3), Point3(100, 0, 1)});
  colorize(world, solid(101, 101, kRed), kCam);
  EXPECT_EQ(world.colorized_count(), 0u);
}

TEST(World, FirstWriteWinsKeepsFirstColor) {
  WorldCloud world({Point3(0, 0, 3)});
  colorize(world, solid(101, 101, kRed), kCam);
  colorize(world, solid(101, 101, kBlue), kCam, ColorPolicy::FirstWriteWins);
  EXPECT_EQ(world.colors()[0], kRed);
  EXPECT_EQ(world.write_count()[0], 1u);
}

TEST(World, RunningAverageAveragesObservations) {
  WorldCloud world({Point3(0, 0, 3)});
  colorize(world, solid(101, 101, kRed), kCam, ColorPolicy::RunningAverage);
  colorize(world, solid(101, 101, kBlue), kCam, ColorPolicy::RunningAverage);
  colorize(world, solid(101, 101, kBlue), kCam, ColorPolicy::RunningAverage);
  EXPECT_NEAR(world.colors()[0][0], 1.0 / 3.0, 1e-15);
  EXPECT_NEAR(world.colors()[0][2], 2.0 / 3.0, 1e-15);
  EXPECT_EQ(world.write_count()[0], 3u);
}

TEST(World, ColorizeThenRenderIsExact) {
  const SceneSpec scene = test::checker_scene(4, 0.37);
  const Camera cam = test::camera_at(Point3(0.3, -0.4, 0.2), Point3(0, 0, 5));
  WorldCloud world = sample_cloud(scene, 500);
  const Frame frame = render_gt(scene, cam).rgb;
  colorize(world, frame, cam);
  const GuidanceImage g = render_guidance(world, cam);
  ASSERT_GT(g.valid.count(), 1000u);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (g.valid.at(y, x))
        for (int c = 0; c < 3; ++c) ASSERT_EQ(g.rgb.at(y, x, c), frame.at(y, x, c));
}

TEST(World, FirstWriteWinsIsIdempotent) {
  const SceneSpec scene = test::checker_scene(5);
  const Camera cam = test::camera_at(Point3(0, 0, 0), Point3(0, 0, 5));
  WorldCloud once = sample_cloud(scene, 300);
  const Frame frame = render_gt(scene, cam).rgb;
  colorize(once, frame, cam);
  WorldCloud twice = once;
  colorize(twice, frame, cam);
  EXPECT_EQ(once.colors(), twice.colors());
  EXPECT_EQ(once.colorized(), twice.colorized());
}

TEST(World, SequenceWithOneCameraIsBlack) {
  WorldCloud world = sampled_cloud(2);
  const auto g = guidance_for_sequence(world, {kCam}, [](std::size_t, const GuidanceImage&, const Camera&) {
    return solid(101, 101, kRed);
  });
  ASSERT_EQ(g.size(), 1u);
  EXPECT_EQ(g[0].valid.count(), 0u);
  EXPECT_GT(world.colorized_count(), 0u);
}

TEST(World, StaticCameraReproducesFrame) {
  WorldCloud world = sampled_cloud(3);
  const Camera cam = test::camera_at(Point3(0, 0, 0), Point3(0, 0, 5));
  Frame frame(64, 64, 3);
  Rng rng(9);
  for (double& v : frame.data()) v = rng.uniform();
  const auto g = guidance_for_sequence(world, {cam, cam},
                                       [&](std::size_t, const GuidanceImage&, const Camera&) { return frame; });
  ASSERT_GT(g[1].valid.count(), 0u);
  for (int y = 0; y < 64; ++y)
    for (int x = 0; x < 64; ++x)
      if (g[1].valid.at(y, x))
        for (int c = 0; c < 3; ++c) ASSERT_EQ(g[1].rgb.at(y, x, c), frame.at(y, x, c));
}

TEST(World, GuidanceSeesEveryPastFrame) {
  // Colors from step 0 must survive later steps that do not see the point.
  const SceneSpec scene = test::checker_scene(6);
  WorldCloud world = sample_cloud(scene, 300);
  const Camera a = test::camera_at(Point3(-1.5, 0, 0), Point3(-1.5, 0, 5));
  const Camera b = test::camera_at(Point3(1.5, 0, 0), Point3(3, 0, 5));
  const auto g = guidance_for_sequence(
      world, {a, b, b, a},
      [&](std::size_t, const GuidanceImage&, const Camera& cam) { return render_gt(scene, cam).rgb; });
  WorldCloud first_only = sample_cloud(scene, 300);
  colorize(first_only, render_gt(scene, a).rgb, a);
  const std::size_t after_first = render_guidance(first_only, a).valid.count();
  EXPECT_GT(after_first, 500u);
  EXPECT_GE(g[3].valid.count(), after_first);
}

TEST(World, ValidPixelCountNeverDecreases) {
  const SceneSpec scene = test::checker_scene(7);
  WorldCloud world = sample_cloud(scene, 300);
  const Camera probe = test::camera_at(Point3(0, -0.5, 0), Point3(0, 0, 5));
  std::size_t last = 0;
  for (int t = 0; t < 6; ++t) {
    const Camera cam = test::camera_at(Point3(-1.0 + 0.4 * t, 0, 0.1 * t), Point3(0, 0, 5));
    colorize(world, render_gt(scene, cam).rgb, cam);
    const std::size_t now = render_guidance(world, probe).valid.count();
    EXPECT_GE(now, last);
    last = now;
  }
}

TEST(World, StereoWithIdenticalCamerasIsBitIdentical) {
  const SceneSpec scene = test::checker_scene(8);
  WorldCloud world = sample_cloud(scene, 300);
  const Camera cam = test::camera_at(Point3(0, 0, 0), Point3(0, 0, 5));
  colorize(world, render_gt(scene, cam).rgb, cam);
  const auto [l, r] = shared_stereo_guidance(world, cam, cam, 64, 64);
  EXPECT_EQ(l, r);
}

TEST(World, StereoSharedPointHasSameColor) {
  WorldCloud world({Point3(0.1, 0.05, 3)});
  world.set_color(0, {0.25, 0.5, 0.75});
  const Camera left = test::camera_at(Point3(0, 0, 0), Point3(0, 0, 5));
  const Camera right{left.intrinsics, Pose(Matrix3::Identity(), Point3(-0.2, 0, 0))};
  const auto [l, r] = shared_stereo_guidance(world, left, right, 64, 64);
  const auto pl = project(world.points()[0], left), pr = project(world.points()[0], right);
  const int lx = static_cast<int>(std::floor(pl.u + 0.5)), ly = static_cast<int>(std::floor(pl.v + 0.5));
  const int rx = static_cast<int>(std::floor(pr.u + 0.5)), ry = static_cast<int>(std::floor(pr.v + 0.5));
  EXPECT_NE(lx, rx);
  for (int c = 0; c < 3; ++c) EXPECT_EQ(l.rgb.at(ly, lx, c), r.rgb.at(ry, rx, c));
}

TEST(World, SetColorValidatesRange) {
  WorldCloud world({Point3(0, 0, 1)});
  EXPECT_THROW(world.set_color(0, {1.5, 0, 0}), Error);
  EXPECT_THROW(world.set_color(3, {0, 0, 0}), Error);
}

}  // namespace
}  // namespace wcvs
