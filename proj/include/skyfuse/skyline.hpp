#pragma once

#include <optional>
#include <span>
#include <vector>

#include "skyfuse/geometry.hpp"
#include "skyfuse/mask.hpp"
#include "skyfuse/observation.hpp"

namespace skyfuse {

struct SkylineConfig {
  int stride = 8;
  int search_window = 25;
  double variance = deg2rad(0.5) * deg2rad(0.5);
};

struct TimedLine {
  Line2D line;
  double t = 0.0;
};

/// Tracking state for one camera stream. The reference is fixed at
/// construction; history holds the two most recent fitted lines.
struct SkylineTrack {
  Line2D reference_line;
  double reference_center_row = 0.0;
  std::optional<TimedLine> prev_line;
  std::optional<TimedLine> prev_prev_line;
  double angular_rate = 0.0;  // rad/s of the skyline angle
  /// Most recent range to the ground, used to convert barometric height
  /// changes into a row shift.
  std::optional<double> ground_distance;
  SkylineConfig config;
};

/// Sky-to-ground transition of every stride-th column (col 0, stride, 2*stride...).
/// Throws kNoBoundary when fewer than two columns carry a transition.
std::vector<PixelPoint> extract_boundary_points(const BinaryMask& mask, int stride);

/// As extract_boundary_points, but each column takes the transition nearest to
/// `predicted` (windowed search with full-column fallback).
std::vector<PixelPoint> extract_boundary_points_near(const BinaryMask& mask, int stride,
                                                     const Line2D& predicted, int window);

/// Row at column cx of the skyline after rotating `points` by -slope_angle
/// about the principal point (the roll-compensated skyline height).
double compensated_center_row(std::span<const PixelPoint> points, double slope_angle,
                              const CameraIntrinsics& intr) noexcept;

/// Builds a track whose reference is the pooled fit over the given static frames.
SkylineTrack make_skyline_track(std::span<const BinaryMask> reference_frames,
                                const CameraIntrinsics& intr, SkylineConfig config = {});

/// Constant-angular-velocity prediction of the skyline at time t.
/// Falls back to the reference line when the track has no history.
Line2D predict_skyline(const SkylineTrack& track, double t, const CameraIntrinsics& intr) noexcept;

OrientationObservation update_skyline(SkylineTrack& track, const BinaryMask& mask,
                                      double baro_delta, const CameraIntrinsics& intr, double t);

/// Both |roll| and |pitch| inside the closed band.
bool within_tolerance(RollPitch obs, double band) noexcept;

}  // namespace skyfuse
