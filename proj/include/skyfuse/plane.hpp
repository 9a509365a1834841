#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "skyfuse/geometry.hpp"
#include "skyfuse/mask.hpp"
#include "skyfuse/observation.hpp"

namespace skyfuse {

struct GroundPlaneConfig {
  int grid_rows = 32;
  int grid_cols = 16;
  /// Barometric height (m) below which the flat-ground model is not trusted.
  double min_height = 300.0;
  int ransac_rounds = 16;
  double variance = deg2rad(1.0) * deg2rad(1.0);
  std::uint64_t ransac_seed = 0x9e3779b97f4a7c15ULL;

  void validate() const;
};

/// Grid points (cell centers of a grid_rows x grid_cols lattice over the image)
/// that fall in the ground region. Throws kInsufficientGround below three.
std::vector<PixelPoint> sample_ground_pixels(const BinaryMask& mask, const GroundPlaneConfig& cfg);

/// Result of reconstructing the ground from one mask.
struct GroundPlaneFit {
  Vec3 normal;                   ///< unit, camera frame, pointing from the camera toward the ground
  std::vector<Vec3> points;      ///< sampled ground pixels intersected with the plane at `height`
  std::vector<Vec3> horizon_rays;
  double range = 0.0;            ///< median distance from the camera to `points`
};

/// Ground normal from the far edge of the ground region: back-projected
/// boundary pixels of the sampled columns lie on the plane through the camera
/// center parallel to the ground, so the normal of the best (camera, ray, ray)
/// triple, refit on its inliers, is the ground normal. Sampled ground pixels are
/// then intersected with the ground at `height`.
GroundPlaneFit fit_ground_plane(const BinaryMask& mask, const CameraIntrinsics& intr,
                                double height, const GroundPlaneConfig& cfg);

/// Roll and pitch of the rotation aligning `current_normal` onto
/// `reference_normal` (both camera frame). Yaw is dropped.
RollPitch attitude_from_normals(const Vec3& current_normal, const Vec3& reference_normal);

OrientationObservation estimate_plane_observation(const BinaryMask& mask,
                                                  const CameraIntrinsics& intr, double height,
                                                  const Vec3& reference_normal,
                                                  const GroundPlaneConfig& cfg, double t);

/// Normalized mean of the ground normals of a set of static frames.
Vec3 reference_ground_normal(std::span<const BinaryMask> frames, const CameraIntrinsics& intr,
                             double height, const GroundPlaneConfig& cfg);

}  // namespace skyfuse
