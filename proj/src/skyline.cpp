#include "skyfuse/skyline.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "skyfuse/error.hpp"
#include "skyfuse/kernels.hpp"

namespace skyfuse {

std::string_view to_string(ObservationSource source) noexcept {
  switch (source) {
    case ObservationSource::kImu: return "imu";
    case ObservationSource::kSkyline: return "skyline";
    case ObservationSource::kGroundPlane: return "ground_plane";
  }
  return "unknown";
}

namespace {

std::vector<int> sampled_columns(int width, int stride) {
  if (stride < 1) throw Error(ErrorCode::kInvalidArgument, "stride must be >= 1");
  std::vector<int> cols;
  cols.reserve(static_cast<std::size_t>(width / stride + 1));
  for (int c = 0; c < width; c += stride) cols.push_back(c);
  return cols;
}

std::vector<PixelPoint> collect(std::span<const int> cols, std::span<const int> rows) {
  std::vector<PixelPoint> points;
  points.reserve(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (rows[i] != kernels::kNoTransition) points.push_back({double(cols[i]), double(rows[i])});
  }
  if (points.size() < 2) {
    throw Error(ErrorCode::kNoBoundary,
                "skyline found in " + std::to_string(points.size()) + " sampled column(s)");
  }
  return points;
}

double center_row(const Line2D& line, const CameraIntrinsics& intr) noexcept {
  return line.row_at(intr.cx);
}

Line2D line_through_center(double angle, double row_at_cx, const CameraIntrinsics& intr) noexcept {
  const double slope = std::tan(angle);
  return Line2D{slope, row_at_cx - slope * intr.cx};
}

}  // namespace

std::vector<PixelPoint> extract_boundary_points(const BinaryMask& mask, int stride) {
  const auto cols = sampled_columns(mask.width(), stride);
  std::vector<int> rows(cols.size());
  kernels::parallel::scan_columns(mask, cols, {}, 0, rows);
  return collect(cols, rows);
}

std::vector<PixelPoint> extract_boundary_points_near(const BinaryMask& mask, int stride,
                                                     const Line2D& predicted, int window) {
  const auto cols = sampled_columns(mask.width(), stride);
  std::vector<double> predicted_rows(cols.size());
  for (std::size_t i = 0; i < cols.size(); ++i) predicted_rows[i] = predicted.row_at(cols[i]);
  std::vector<int> rows(cols.size());
  kernels::parallel::scan_columns(mask, cols, predicted_rows, window, rows);
  return collect(cols, rows);
}

double compensated_center_row(std::span<const PixelPoint> points, double slope_angle,
                              const CameraIntrinsics& intr) noexcept {
  const double c = std::cos(slope_angle);
  const double s = std::sin(slope_angle);
  double sum = 0.0;
  for (const auto& p : points) {
    const double du = p.col - intr.cx;
    const double dv = p.row - intr.cy;
    sum += -s * du + c * dv;
  }
  return intr.cy + sum / static_cast<double>(points.size());
}

SkylineTrack make_skyline_track(std::span<const BinaryMask> reference_frames,
                                const CameraIntrinsics& intr, SkylineConfig config) {
  if (reference_frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "skyline reference needs at least one frame");
  }
  std::vector<PixelPoint> pooled;
  for (const auto& frame : reference_frames) {
    const auto points = extract_boundary_points(frame, config.stride);
    pooled.insert(pooled.end(), points.begin(), points.end());
  }
  SkylineTrack track;
  track.config = config;
  track.reference_line = fit_line_least_squares(pooled);
  track.reference_center_row =
      compensated_center_row(pooled, std::atan(track.reference_line.slope), intr);
  return track;
}

Line2D predict_skyline(const SkylineTrack& track, double t, const CameraIntrinsics& intr) noexcept {
  if (!track.prev_line) return track.reference_line;
  if (!track.prev_prev_line) return track.prev_line->line;
  const auto& a = *track.prev_prev_line;
  const auto& b = *track.prev_line;
  const double span = b.t - a.t;
  if (!(span > 0.0)) return b.line;
  const double f = (t - b.t) / span;
  const double angle_a = std::atan(a.line.slope);
  const double angle_b = std::atan(b.line.slope);
  const double row_a = center_row(a.line, intr);
  const double row_b = center_row(b.line, intr);
  return line_through_center(angle_b + f * (angle_b - angle_a), row_b + f * (row_b - row_a), intr);
}

OrientationObservation update_skyline(SkylineTrack& track, const BinaryMask& mask,
                                      double baro_delta, const CameraIntrinsics& intr, double t) {
  if (track.prev_line && !(t > track.prev_line->t)) {
    throw Error(ErrorCode::kInvalidArgument, "skyline timestamps must be strictly increasing");
  }
  const Line2D predicted = predict_skyline(track, t, intr);
  const auto points =
      extract_boundary_points_near(mask, track.config.stride, predicted, track.config.search_window);
  const Line2D line = fit_line_least_squares(points);
  const double slope_angle = std::atan(line.slope);

  OrientationObservation obs;
  obs.source = ObservationSource::kSkyline;
  obs.timestamp = t;
  obs.variance = track.config.variance;

  double h1 = compensated_center_row(points, slope_angle, intr);
  if (track.ground_distance && *track.ground_distance > 0.0) {
    h1 -= baro_delta * intr.fy / *track.ground_distance;
  } else if (baro_delta != 0.0) {
    obs.variance *= 4.0;
  }

  obs.value.roll = roll_from_skylines(line, track.reference_line);
  obs.value.pitch = pitch_from_heights(h1, track.reference_center_row, intr);
  obs.clamped = clamp_to_limits(obs.value);

  if (track.prev_line) {
    const double dt = t - track.prev_line->t;
    track.angular_rate = (slope_angle - std::atan(track.prev_line->line.slope)) / dt;
  }
  track.prev_prev_line = track.prev_line;
  track.prev_line = TimedLine{line, t};
  return obs;
}

bool within_tolerance(RollPitch obs, double band) noexcept {
  return std::abs(obs.roll) <= band && std::abs(obs.pitch) <= band;
}

}  // namespace skyfuse
