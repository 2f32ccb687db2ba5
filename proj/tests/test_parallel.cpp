// Parallel kernels against their serial references, with several threads.
#include <omp.h>

#include "test_util.hpp"
#include "wcvs/flow.hpp"
#include "wcvs/tensor.hpp"
#include "wcvs/world.hpp"

namespace wcvs {
namespace {

class Parallel : public ::testing::Test {
 protected:
  void SetUp() override {
    saved_ = omp_get_max_threads();
    omp_set_num_threads(4);
  }
  void TearDown() override { omp_set_num_threads(saved_); }

 private:
  int saved_ = 1;
};

TEST_F(Parallel, Conv2d) {
  Rng rng(1);
  const Tensor x = Tensor::uniform({2, 3, 19, 23}, rng, -1, 1);
  for (int stride : {1, 2}) {
    const ConvLayer l = ConvLayer::seeded(5, 3, 3, stride, 1, rng);
    EXPECT_EQ(conv2d(x, l), serial::conv2d(x, l));
  }
}

TEST_F(Parallel, PartialConv2d) {
  Rng rng(2);
  const Tensor x = Tensor::uniform({1, 4, 17, 21}, rng, -1, 1);
  Tensor m({1, 1, 17, 21});
  for (double& v : m.data()) v = rng.uniform() < 0.6 ? 1.0 : 0.0;
  const ConvLayer l = ConvLayer::seeded(6, 4, 3, 1, 1, rng);
  const PartialConvResult a = partial_conv2d(x, m, l), b = serial::partial_conv2d(x, m, l);
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(a.mask, b.mask);
}

TEST_F(Parallel, ZBufferWithManyTies) {
  Rng rng(3);
  std::vector<Point3> pts;
  for (int i = 0; i < 20000; ++i) {
    // Coarse depths so many points land on the same pixel at equal depth.
    pts.emplace_back(rng.uniform(-2, 2), rng.uniform(-2, 2), 4.0 + 0.5 * static_cast<double>(rng.below(3)));
  }
  const WorldCloud w(pts);
  const Camera cam = test::camera_at(Point3(0, 0, 0), Point3(0, 0, 1));
  const ZBuffer a = build_zbuffer(w, cam), b = serial::build_zbuffer(w, cam);
  EXPECT_EQ(a.index, b.index);
  EXPECT_EQ(a.depth, b.depth);
}

TEST_F(Parallel, Warp) {
  Rng rng(4);
  Image img(31, 37, 3);
  for (double& v : img.data()) v = rng.uniform();
  FlowField f(31, 37);
  for (double& v : f.displacement().data()) v = rng.uniform(-5, 5);
  const WarpResult a = warp(img, f), b = serial::warp(img, f);
  EXPECT_EQ(a.image, b.image);
  EXPECT_EQ(a.coverage, b.coverage);
}

TEST_F(Parallel, RenderGt) {
  const Camera cam = test::camera_at(Point3(0.4, -0.3, 0.2), Point3(0, 0.3, 6));
  const GroundTruth a = render_gt(test::checker_scene(), cam), b = serial::render_gt(test::checker_scene(), cam);
  EXPECT_EQ(a.rgb, b.rgb);
  EXPECT_EQ(a.depth, b.depth);
  EXPECT_EQ(a.semantics, b.semantics);
}

}  // namespace
}  // namespace wcvs
