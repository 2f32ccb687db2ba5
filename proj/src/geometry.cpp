#include "wcvs/geometry.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SVD>

#include "wcvs/error.hpp"

namespace wcvs {

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::BadSpec, "focal lengths must be positive");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::BadSpec, "image size must be positive");
  }
  if (!(cx >= 0.0 && cx < width && cy >= 0.0 && cy < height)) {
    throw Error(ErrorCode::BadSpec, "principal point outside image");
  }
}

double orthonormality_error(const Matrix3& m) {
  return (m.transpose() * m - Matrix3::Identity()).cwiseAbs().maxCoeff();
}

Pose::Pose(const Matrix3& rotation, const Point3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw Error(ErrorCode::NotARotation, "non-finite pose");
  }
  const double ortho = orthonormality_error(rotation);
  const double det = rotation.determinant();
  if (ortho > kRotationTolerance || std::abs(det - 1.0) > kRotationTolerance) {
    std::ostringstream os;
    os << "orthonormality error " << ortho << ", determinant " << det;
    throw Error(ErrorCode::NotARotation, os.str());
  }
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Point3 transform_to_camera(const Point3& p, const Pose& pose) {
  return pose.rotation() * p + pose.translation();
}

std::optional<PixelProjection> try_project(const Point3& p, const Camera& cam) {
  const Point3 pc = transform_to_camera(p, cam.pose);
  if (!(pc.z() > kDepthEpsilon)) {
    return std::nullopt;
  }
  const Intrinsics& k = cam.intrinsics;
  return PixelProjection{k.fx * (pc.x() / pc.z()) + k.cx, k.fy * (pc.y() / pc.z()) + k.cy,
                         pc.z()};
}

PixelProjection project(const Point3& p, const Camera& cam) {
  auto proj = try_project(p, cam);
  if (!proj) {
    throw Error(ErrorCode::NotInFront, "point is not in front of the camera");
  }
  return *proj;
}

Point3 backproject(double u, double v, double depth, const Camera& cam) {
  if (!(depth > 0.0)) {
    throw Error(ErrorCode::BadDepth, "depth must be positive");
  }
  const Intrinsics& k = cam.intrinsics;
  const Point3 pc((u - k.cx) / k.fx * depth, (v - k.cy) / k.fy * depth, depth);
  return cam.pose.rotation().transpose() * (pc - cam.pose.translation());
}

Matrix3 nearest_rotation(const Matrix3& m) {
  Eigen::JacobiSVD<Matrix3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix3 r = svd.matrixU() * svd.matrixV().transpose();
  if (r.determinant() < 0.0) {
    throw Error(ErrorCode::NotARotation, "matrix is closest to a reflection");
  }
  return r;
}

Matrix3 rotation_about_axis(const Point3& axis, double angle_radians) {
  return Eigen::AngleAxisd(angle_radians, axis.normalized()).toRotationMatrix();
}

Pose look_at(const Point3& eye, const Point3& target, const Point3& up) {
  const Point3 forward = target - eye;
  const Point3 side = (-up).cross(forward);
  if (!(forward.norm() > 0.0) || !(side.norm() > 1e-12 * forward.norm() * up.norm())) {
    throw Error(ErrorCode::BadSpec, "look_at needs distinct eye and target and a view not parallel to up");
  }
  const Point3 z = forward.normalized();
  const Point3 x = side.normalized();
  const Point3 y = z.cross(x);
  Matrix3 r;
  r.row(0) = x.transpose();
  r.row(1) = y.transpose();
  r.row(2) = z.transpose();
  r = nearest_rotation(r);
  return Pose(r, -(r * eye));
}

}  // namespace wcvs
