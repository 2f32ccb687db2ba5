#pragma once

#include <optional>

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace wcvs {

using Point3 = Eigen::Vector3d;
using Matrix3 = Eigen::Matrix3d;

// Points with camera-space z at or below this are treated as behind the camera.
inline constexpr double kDepthEpsilon = 1e-6;
inline constexpr double kRotationTolerance = 1e-9;

// Pinhole intrinsics. Pixel (0,0) is the center of the top-left pixel; +x
// right, +y down, +z forward.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  // Throws Error(BadSpec) when focal lengths or principal point are invalid.
  void validate() const;
  bool operator==(const Intrinsics&) const = default;
};

// World-to-camera rigid transform: p_cam = rotation * p_world + translation.
class Pose {
 public:
  Pose() : rotation_(Matrix3::Identity()), translation_(Point3::Zero()) {}
  // Throws Error(NotARotation) unless rotation is orthonormal with det +1
  // within kRotationTolerance.
  Pose(const Matrix3& rotation, const Point3& translation);

  static Pose identity() { return Pose(); }

  const Matrix3& rotation() const { return rotation_; }
  const Point3& translation() const { return translation_; }

  // Camera center in world coordinates.
  Point3 center() const { return -rotation_.transpose() * translation_; }

  Pose inverse() const;
  // (a * b) applies b first, then a.
  Pose operator*(const Pose& other) const;

  bool operator==(const Pose& other) const {
    return rotation_ == other.rotation_ && translation_ == other.translation_;
  }

 private:
  Matrix3 rotation_;
  Point3 translation_;
};

struct Camera {
  Intrinsics intrinsics;
  Pose pose;

  bool operator==(const Camera&) const = default;
};

struct PixelProjection {
  double u = 0.0;
  double v = 0.0;
  double depth = 0.0;
};

Point3 transform_to_camera(const Point3& p, const Pose& pose);

// Continuous pixel coordinates; does not check image bounds.
// Returns nullopt when the point is not in front of the camera.
std::optional<PixelProjection> try_project(const Point3& p, const Camera& cam);

// As try_project, but throws Error(NotInFront).
PixelProjection project(const Point3& p, const Camera& cam);

// Throws Error(BadDepth) when depth <= 0.
Point3 backproject(double u, double v, double depth, const Camera& cam);

// Closest rotation in Frobenius norm (polar decomposition via SVD).
// Throws Error(NotARotation) if the closest orthogonal matrix is a reflection.
Matrix3 nearest_rotation(const Matrix3& m);

// Max deviation of m from orthonormality, max |m^T m - I|.
double orthonormality_error(const Matrix3& m);

Matrix3 rotation_about_axis(const Point3& axis, double angle_radians);

// Camera at `eye` looking at `target`, +y of the image pointing along -up.
Pose look_at(const Point3& eye, const Point3& target, const Point3& up);

}  // namespace wcvs
