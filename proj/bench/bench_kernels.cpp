// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.
#include <benchmark/benchmark.h>

#include "wcvs/flow.hpp"
#include "wcvs/random.hpp"
#include "wcvs/synthworld.hpp"
#include "wcvs/tensor.hpp"
#include "wcvs/world.hpp"

namespace {

using namespace wcvs;

struct ConvCase {
  Tensor x, mask;
  ConvLayer layer;
};

ConvCase make_conv(int size) {
  Rng rng(3);
  ConvCase c{Tensor::uniform({1, 16, size, size}, rng, -1.0, 1.0), Tensor({1, 1, size, size}),
             ConvLayer::seeded(16, 16, 3, 1, 1, rng)};
  for (double& m : c.mask.data()) m = rng.uniform() < 0.7 ? 1.0 : 0.0;
  return c;
}

SceneSpec bench_scene() {
  Quad wall;
  wall.corners = {Point3(-4, -3, 6), Point3(4, -3, 6), Point3(4, 3, 6), Point3(-4, 3, 6)};
  wall.texture = {Texture::Kind::Checker, {0.9, 0.5, 0.2}, {0.1, 0.3, 0.8}, 0.5};
  Quad box;
  box.corners = {Point3(-1, -1, 4), Point3(1, -1, 4), Point3(1, 1, 4), Point3(-1, 1, 4)};
  box.semantic_id = 2;
  return SceneSpec{{wall, box}, 1};
}

Camera bench_camera(int size) {
  return Camera{Intrinsics{size * 0.9, size * 0.9, (size - 1) / 2.0, (size - 1) / 2.0, size, size}, Pose()};
}

void BM_Conv2dSerial(benchmark::State& s) {
  const ConvCase c = make_conv(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(serial::conv2d(c.x, c.layer));
}
void BM_Conv2dParallel(benchmark::State& s) {
  const ConvCase c = make_conv(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(conv2d(c.x, c.layer));
}
void BM_PartialConvSerial(benchmark::State& s) {
  const ConvCase c = make_conv(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(serial::partial_conv2d(c.x, c.mask, c.layer));
}
void BM_PartialConvParallel(benchmark::State& s) {
  const ConvCase c = make_conv(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(partial_conv2d(c.x, c.mask, c.layer));
}

void BM_ZBufferSerial(benchmark::State& s) {
  const WorldCloud cloud = sample_cloud(bench_scene(), static_cast<double>(s.range(0)));
  const Camera cam = bench_camera(128);
  for (auto _ : s) benchmark::DoNotOptimize(serial::build_zbuffer(cloud, cam));
}
void BM_ZBufferParallel(benchmark::State& s) {
  const WorldCloud cloud = sample_cloud(bench_scene(), static_cast<double>(s.range(0)));
  const Camera cam = bench_camera(128);
  for (auto _ : s) benchmark::DoNotOptimize(build_zbuffer(cloud, cam));
}

struct WarpCase {
  Image img;
  FlowField flow;
};
WarpCase make_warp(int size) {
  Rng rng(5);
  WarpCase c{Image(size, size, 3), FlowField(size, size)};
  for (double& v : c.img.data()) v = rng.uniform();
  for (int y = 0; y < size; ++y)
    for (int x = 0; x < size; ++x) {
      c.flow.du(y, x) = rng.uniform(-3.0, 3.0);
      c.flow.dv(y, x) = rng.uniform(-3.0, 3.0);
      c.flow.valid().at(y, x) = 1;
    }
  return c;
}
void BM_WarpSerial(benchmark::State& s) {
  const WarpCase c = make_warp(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(serial::warp(c.img, c.flow));
}
void BM_WarpParallel(benchmark::State& s) {
  const WarpCase c = make_warp(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(warp(c.img, c.flow));
}

void BM_RenderGtSerial(benchmark::State& s) {
  const SceneSpec scene = bench_scene();
  const Camera cam = bench_camera(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(serial::render_gt(scene, cam));
}
void BM_RenderGtParallel(benchmark::State& s) {
  const SceneSpec scene = bench_scene();
  const Camera cam = bench_camera(static_cast<int>(s.range(0)));
  for (auto _ : s) benchmark::DoNotOptimize(render_gt(scene, cam));
}

BENCHMARK(BM_Conv2dSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_Conv2dParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_PartialConvSerial)->Arg(32)->Arg(64);
BENCHMARK(BM_PartialConvParallel)->Arg(32)->Arg(64);
BENCHMARK(BM_ZBufferSerial)->Arg(400)->Arg(4000);
BENCHMARK(BM_ZBufferParallel)->Arg(400)->Arg(4000);
BENCHMARK(BM_WarpSerial)->Arg(128)->Arg(256);
BENCHMARK(BM_WarpParallel)->Arg(128)->Arg(256);
BENCHMARK(BM_RenderGtSerial)->Arg(64)->Arg(128);
BENCHMARK(BM_RenderGtParallel)->Arg(64)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
