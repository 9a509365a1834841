#include "skyfuse/geometry.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <string>

#include "skyfuse/error.hpp"

namespace skyfuse {

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  }
  if (image_width <= 0 || image_height <= 0) {
    throw Error(ErrorCode::kInvalidArgument, "image size must be positive");
  }
  if (!(cx > 0.0 && cx < image_width) || !(cy > 0.0 && cy < image_height)) {
    throw Error(ErrorCode::kInvalidArgument, "principal point must lie inside the image");
  }
}

Eigen::Matrix3d CameraIntrinsics::matrix() const {
  Eigen::Matrix3d k;
  k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

bool clamp_to_limits(RollPitch& value) noexcept {
  const RollPitch before = value;
  value.roll = std::clamp(value.roll, -kMechanicalLimit, kMechanicalLimit);
  value.pitch = std::clamp(value.pitch, -kMechanicalLimit, kMechanicalLimit);
  return !(before == value);
}

Line2D fit_line_least_squares(std::span<const PixelPoint> points) {
  if (points.size() < 2) {
    throw Error(ErrorCode::kDegenerateInput, "line fit needs at least two points");
  }
  // Centered normal equations; better conditioned than the raw sums for
  // pixel-scale coordinates.
  double mean_col = 0.0;
  double mean_row = 0.0;
  for (const auto& p : points) {
    mean_col += p.col;
    mean_row += p.row;
  }
  const double n = static_cast<double>(points.size());
  mean_col /= n;
  mean_row /= n;

  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : points) {
    const double dc = p.col - mean_col;
    sxx += dc * dc;
    sxy += dc * (p.row - mean_row);
  }
  if (sxx <= 0.0) {
    throw Error(ErrorCode::kDegenerateInput, "all points share one column (vertical line)");
  }
  const double slope = sxy / sxx;
  return Line2D{slope, mean_row - slope * mean_col};
}

double roll_from_skylines(const Line2D& current, const Line2D& reference) noexcept {
  return std::atan(current.slope) - std::atan(reference.slope);
}

double pitch_from_heights(double h1, double h2, const CameraIntrinsics& intr) noexcept {
  return std::atan((h1 - intr.cy) / intr.fy) - std::atan((h2 - intr.cy) / intr.fy);
}

Vec3 backproject(double u, double v, const CameraIntrinsics& intr) noexcept {
  return Vec3((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
}

Vec3 intersect_ground(const Vec3& ray, const Vec3& gravity_dir, double height) {
  if (!(height > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "height must be positive");
  }
  const double ray_norm = ray.norm();
  const double g_norm = gravity_dir.norm();
  if (ray_norm == 0.0 || g_norm == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "zero-length ray or gravity direction");
  }
  const double cos_theta = ray.dot(gravity_dir) / (ray_norm * g_norm);
  if (!(cos_theta > kMinGroundCosine)) {
    throw Error(ErrorCode::kRayParallelToGround,
                "ray does not reach the ground (cos=" + std::to_string(cos_theta) + ")");
  }
  const double length = height / cos_theta;
  return (length / ray_norm) * ray;
}

Vec3 plane_normal(const Vec3& p_i, const Vec3& p_j, const Vec3& p_k, const Vec3& orientation) {
  const Vec3 a = p_i - p_j;
  const Vec3 b = p_i - p_k;
  const Vec3 cross = a.cross(b);
  const double scale = a.norm() * b.norm();
  if (!(cross.norm() >= 1e-9 * scale) || scale == 0.0) {
    throw Error(ErrorCode::kCollinearPoints, "plane points are collinear or coincident");
  }
  Vec3 normal = cross.normalized();
  if (normal.dot(orientation) < 0.0) normal = -normal;
  return normal;
}

RotationMatrix align_rotation(const Vec3& m, const Vec3& n) {
  const double m_norm = m.norm();
  const double n_norm = n.norm();
  if (!(m_norm > 0.0) || !(n_norm > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "align_rotation needs nonzero vectors");
  }
  const Vec3 m_hat = m / m_norm;
  const Vec3 n_hat = n / n_norm;
  const double s = m_hat.dot(n_hat);
  if (s < -1.0 + 1e-6) {
    throw Error(ErrorCode::kAntiparallelVectors, "vectors are antiparallel; rotation axis undefined");
  }
  const Vec3 k = m_hat.cross(n_hat);
  Eigen::Matrix3d k_cross;
  k_cross << 0.0, -k.z(), k.y(),
             k.z(), 0.0, -k.x(),
             -k.y(), k.x(), 0.0;
  return RotationMatrix::Identity() + k_cross + k_cross * k_cross / (1.0 + s);
}

EulerAngles euler_from_rotation(const RotationMatrix& r) noexcept {
  const double r32 = r(2, 1);
  const double r33 = r(2, 2);
  const double cos_pitch = std::sqrt(r32 * r32 + r33 * r33);
  EulerAngles out;
  out.roll = std::atan2(r32, r33);
  out.pitch = std::atan2(-r(2, 0), cos_pitch);
  out.yaw = std::atan2(r(1, 0), r(0, 0));
  out.gimbal_lock = cos_pitch < 1e-6;
  return out;
}

RotationMatrix rotation_from_euler(double roll, double pitch, double yaw) noexcept {
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) *
          Eigen::AngleAxisd(roll, Vec3::UnitX()))
      .toRotationMatrix();
}

Vec3 camera_to_body(const Vec3& v) noexcept { return Vec3(-v.z(), v.x(), -v.y()); }

Vec3 body_to_camera(const Vec3& v) noexcept { return Vec3(v.y(), -v.z(), -v.x()); }

namespace {

Vec3 up_in_body(RollPitch a) noexcept {
  const double sr = std::sin(a.roll), cr = std::cos(a.roll);
  const double sp = std::sin(a.pitch), cp = std::cos(a.pitch);
  return Vec3(-sp, sr * cp, cr * cp);
}

}  // namespace

Vec3 up_in_camera(RollPitch attitude) noexcept { return body_to_camera(up_in_body(attitude)); }

double great_circle_distance(RollPitch a, RollPitch b) noexcept {
  const Vec3 ua = up_in_body(a);
  const Vec3 ub = up_in_body(b);
  return std::atan2(ua.cross(ub).norm(), ua.dot(ub));
}

double manifold_distance_sq(RollPitch a, RollPitch b) noexcept {
  const double c = std::cos(0.5 * (a.pitch + b.pitch));
  const double dr = a.roll - b.roll;
  const double dp = a.pitch - b.pitch;
  return c * c * dr * dr + dp * dp;
}

}  // namespace skyfuse
