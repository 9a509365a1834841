#pragma once

// Closed-form geometry shared by the skyline and ground-plane trackers.
//
// Conventions used throughout the library:
//   * Image: column u grows right, row v grows down; the skyline "height" of a
//     frame is the row of the skyline at column cx.
//   * Camera frame: x right, y down, z along the optical axis.
//   * Body frame (Euler extraction): x = -z_cam, y = x_cam, z = -y_cam. In this
//     frame a camera attitude is R = Rz(yaw) * Ry(pitch) * Rx(roll), positive
//     roll tilts the skyline toward positive image slope and positive pitch
//     moves the skyline down the image.
//   * Angles are radians everywhere inside the library.

#include <Eigen/Core>
#include <numbers>
#include <span>

namespace skyfuse {

using Vec3 = Eigen::Vector3d;
using RotationMatrix = Eigen::Matrix3d;

inline constexpr double kPi = std::numbers::pi;
/// Mechanical roll/pitch limit of the gimbal.
inline constexpr double kMechanicalLimit = kPi / 4.0;
/// Rays closer than this cosine to the ground plane are rejected by intersect_ground.
inline constexpr double kMinGroundCosine = 0.05;

constexpr double deg2rad(double deg) noexcept { return deg * kPi / 180.0; }
constexpr double rad2deg(double rad) noexcept { return rad * 180.0 / kPi; }

struct CameraIntrinsics {
  double fx = 400.0;
  double fy = 400.0;
  double cx = 320.0;
  double cy = 240.0;
  int image_width = 640;
  int image_height = 480;

  /// Throws Error(kInvalidArgument) when the invariants do not hold.
  void validate() const;
  Eigen::Matrix3d matrix() const;
};

struct PixelPoint {
  double col = 0.0;
  double row = 0.0;
};

/// Skyline model row = slope * col + intercept.
struct Line2D {
  double slope = 0.0;
  double intercept = 0.0;

  double row_at(double col) const noexcept { return slope * col + intercept; }
};

struct RollPitch {
  double roll = 0.0;
  double pitch = 0.0;

  friend bool operator==(const RollPitch&, const RollPitch&) = default;
};

/// Clamps both angles to the mechanical limit. Returns true if anything moved.
bool clamp_to_limits(RollPitch& value) noexcept;

struct EulerAngles {
  double roll = 0.0;
  double pitch = 0.0;
  double yaw = 0.0;
  bool gimbal_lock = false;
};

Line2D fit_line_least_squares(std::span<const PixelPoint> points);

double roll_from_skylines(const Line2D& current, const Line2D& reference) noexcept;

double pitch_from_heights(double h1, double h2, const CameraIntrinsics& intr) noexcept;

/// K^-1 [u, v, 1]^T.
Vec3 backproject(double u, double v, const CameraIntrinsics& intr) noexcept;

/// Point where `ray` meets the plane at distance `height` along `gravity_dir`.
/// The result is l * ray/|ray| with l = height / cos(theta).
Vec3 intersect_ground(const Vec3& ray, const Vec3& gravity_dir, double height);

/// Unit normal of the plane through three points, oriented so that
/// normal . orientation > 0.
Vec3 plane_normal(const Vec3& p_i, const Vec3& p_j, const Vec3& p_k,
                  const Vec3& orientation = Vec3::UnitZ());

/// Rodrigues alignment: the rotation taking m/|m| onto n/|n| about their
/// common normal.
RotationMatrix align_rotation(const Vec3& m, const Vec3& n);

EulerAngles euler_from_rotation(const RotationMatrix& r) noexcept;

/// Rz(yaw) * Ry(pitch) * Rx(roll).
RotationMatrix rotation_from_euler(double roll, double pitch, double yaw) noexcept;

Vec3 camera_to_body(const Vec3& v) noexcept;
Vec3 body_to_camera(const Vec3& v) noexcept;

/// Unit "up" direction in the camera frame for a camera at the given attitude
/// relative to a level reference.
Vec3 up_in_camera(RollPitch attitude) noexcept;

/// Angle between the gravity directions implied by two attitudes.
double great_circle_distance(RollPitch a, RollPitch b) noexcept;

/// Squared local metric on the roll/pitch sphere, cos^2(mean pitch) * droll^2 + dpitch^2.
double manifold_distance_sq(RollPitch a, RollPitch b) noexcept;

}  // namespace skyfuse
