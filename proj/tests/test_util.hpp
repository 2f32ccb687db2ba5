#pragma once

#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "wcvs/geometry.hpp"
#include "wcvs/random.hpp"
#include "wcvs/synthworld.hpp"

namespace wcvs::test {

inline Intrinsics intrinsics(int size, double f) {
  return Intrinsics{f, f, (size - 1) / 2.0, (size - 1) / 2.0, size, size};
}

inline Camera camera_at(const Point3& eye, const Point3& target, int size = 64, double f = 56.0) {
  return Camera{intrinsics(size, f), look_at(eye, target, Point3(0, -1, 0))};
}

inline Quad quad(Point3 a, Point3 b, Point3 c, Point3 d, Rgb color, int id = 1) {
  Quad q;
  q.corners = {a, b, c, d};
  q.texture.kind = Texture::Kind::Solid;
  q.texture.color_a = color;
  q.semantic_id = id;
  return q;
}

// Fronto-parallel square at depth z with half-extent h.
inline Quad wall(double z, double h, Rgb color, int id = 1) {
  return quad(Point3(-h, -h, z), Point3(h, -h, z), Point3(h, h, z), Point3(-h, h, z), color, id);
}

// Checker wall, floor and an occluding box face.
inline SceneSpec checker_scene(std::uint64_t seed = 1, double period = 1.0) {
  Quad back = wall(6.0, 4.0, {0.85, 0.55, 0.3}, 1);
  back.texture = {Texture::Kind::Checker, {0.85, 0.55, 0.3}, {0.2, 0.35, 0.7}, period};
  Quad floor = quad(Point3(-4, 1.5, 1), Point3(4, 1.5, 1), Point3(4, 1.5, 6), Point3(-4, 1.5, 6),
                    {0.4, 0.7, 0.35}, 2);
  floor.texture = {Texture::Kind::Checker, {0.4, 0.7, 0.35}, {0.9, 0.9, 0.8}, 0.75 * period};
  Quad box = quad(Point3(-1, -1, 4), Point3(0.5, -1, 4), Point3(0.5, 1.5, 4), Point3(-1, 1.5, 4),
                  {0.75, 0.2, 0.25}, 3);
  return SceneSpec{{back, floor, box}, seed};
}

class TempDir {
 public:
  explicit TempDir(const std::string& name)
      : path_(std::filesystem::temp_directory_path() / ("wcvs_test_" + name)) {
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& p) const { return path_ / p; }

 private:
  std::filesystem::path path_;
};

inline std::filesystem::path data_path(const std::string& name) {
  return std::filesystem::path(WCVS_TEST_DATA) / name;
}

}  // namespace wcvs::test
