#include "skyfuse/plane.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "skyfuse/error.hpp"

namespace skyfuse {

void GroundPlaneConfig::validate() const {
  if (grid_rows < 1 || grid_cols < 1 || grid_rows * grid_cols < 3) {
    throw Error(ErrorCode::kInvalidArgument, "ground grid needs at least three points");
  }
  if (!(min_height > 0.0)) throw Error(ErrorCode::kInvalidArgument, "min_height must be positive");
  if (ransac_rounds < 1) throw Error(ErrorCode::kInvalidArgument, "ransac_rounds must be >= 1");
  if (!(variance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "variance must be positive");
}

namespace {

int grid_coord(int index, int count, int extent) {
  return static_cast<int>(std::floor((index + 0.5) * extent / count));
}

double median(std::vector<double> values) {
  const auto mid = values.begin() + static_cast<std::ptrdiff_t>(values.size() / 2);
  std::nth_element(values.begin(), mid, values.end());
  return *mid;
}

// Row of the top edge of the ground run containing (col, row); -1 when the
// run reaches the top of the image.
int ground_top_edge(const BinaryMask& mask, int col, int row) {
  while (row > 0 && mask.is_ground(col, row - 1)) --row;
  return row == 0 ? -1 : row;
}

Vec3 smallest_eigenvector(const std::vector<Vec3>& rays, const std::vector<std::size_t>& idx) {
  Eigen::Matrix3d scatter = Eigen::Matrix3d::Zero();
  for (std::size_t i : idx) scatter += rays[i] * rays[i].transpose();
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(scatter);
  return solver.eigenvectors().col(0);
}

}  // namespace

std::vector<PixelPoint> sample_ground_pixels(const BinaryMask& mask, const GroundPlaneConfig& cfg) {
  cfg.validate();
  std::vector<PixelPoint> samples;
  for (int r = 0; r < cfg.grid_rows; ++r) {
    const int row = grid_coord(r, cfg.grid_rows, mask.height());
    for (int c = 0; c < cfg.grid_cols; ++c) {
      const int col = grid_coord(c, cfg.grid_cols, mask.width());
      if (mask.is_ground(col, row)) samples.push_back({double(col), double(row)});
    }
  }
  if (samples.size() < 3) {
    throw Error(ErrorCode::kInsufficientGround,
                std::to_string(samples.size()) + " ground sample(s) on the grid");
  }
  return samples;
}

GroundPlaneFit fit_ground_plane(const BinaryMask& mask, const CameraIntrinsics& intr,
                                double height, const GroundPlaneConfig& cfg) {
  const auto samples = sample_ground_pixels(mask, cfg);

  // Topmost ground sample of each grid column, then walk up to the edge of
  // its ground run. The edge lies half a pixel above the first ground row.
  std::vector<int> top_sample(static_cast<std::size_t>(mask.width()), -1);
  Vec3 toward_ground = Vec3::Zero();
  for (const auto& s : samples) {
    const auto col = static_cast<std::size_t>(s.col);
    if (top_sample[col] < 0 || s.row < top_sample[col]) top_sample[col] = static_cast<int>(s.row);
    toward_ground += backproject(s.col, s.row, intr).normalized();
  }
  GroundPlaneFit fit;
  for (int col = 0; col < mask.width(); ++col) {
    if (top_sample[col] < 0) continue;
    const int edge = ground_top_edge(mask, col, top_sample[col]);
    if (edge < 0) continue;
    fit.horizon_rays.push_back(backproject(col, edge - 0.5, intr).normalized());
  }
  const auto& rays = fit.horizon_rays;
  if (rays.size() < 2) {
    throw Error(ErrorCode::kInsufficientGround, "far edge of the ground is not visible");
  }

  std::mt19937_64 rng(cfg.ransac_seed);
  std::uniform_int_distribution<std::size_t> pick(0, rays.size() - 1);
  const Vec3 origin = Vec3::Zero();
  Vec3 best_normal = Vec3::Zero();
  double best_score = 0.0;
  std::vector<double> residuals(rays.size());
  for (int round = 0; round < cfg.ransac_rounds; ++round) {
    const std::size_t j = pick(rng);
    std::size_t k = pick(rng);
    if (rays.size() > 1 && k == j) k = (j + 1) % rays.size();
    Vec3 candidate;
    try {
      candidate = plane_normal(origin, rays[j], rays[k], toward_ground);
    } catch (const Error&) {
      continue;
    }
    for (std::size_t i = 0; i < rays.size(); ++i) residuals[i] = std::abs(candidate.dot(rays[i]));
    const double score = median(residuals);
    if (best_normal.isZero() || score < best_score) {
      best_normal = candidate;
      best_score = score;
    }
  }
  if (best_normal.isZero()) {
    throw Error(ErrorCode::kCollinearPoints, "every sampled ray triple was degenerate");
  }

  // Least-squares refit on the consensus set.
  const double gate = std::max(3.0 * best_score, 1e-4);
  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < rays.size(); ++i) {
    if (std::abs(best_normal.dot(rays[i])) <= gate) inliers.push_back(i);
  }
  Vec3 normal = inliers.size() >= 2 ? smallest_eigenvector(rays, inliers) : best_normal;
  if (normal.dot(toward_ground) < 0.0) normal = -normal;
  fit.normal = normal.normalized();

  std::vector<double> ranges;
  for (const auto& s : samples) {
    const Vec3 ray = backproject(s.col, s.row, intr);
    // Samples grazing the horizon have no stable range; skip them up front
    // rather than through the exception path, which is hot here.
    if (!(ray.dot(fit.normal) > kMinGroundCosine * ray.norm())) continue;
    fit.points.push_back(intersect_ground(ray, fit.normal, height));
    ranges.push_back(fit.points.back().norm());
  }
  fit.range = ranges.empty() ? 0.0 : median(ranges);
  return fit;
}

RollPitch attitude_from_normals(const Vec3& current_normal, const Vec3& reference_normal) {
  const RotationMatrix r = align_rotation(camera_to_body(current_normal), camera_to_body(reference_normal));
  const EulerAngles e = euler_from_rotation(r);
  return RollPitch{e.roll, e.pitch};
}

OrientationObservation estimate_plane_observation(const BinaryMask& mask,
                                                  const CameraIntrinsics& intr, double height,
                                                  const Vec3& reference_normal,
                                                  const GroundPlaneConfig& cfg, double t) {
  cfg.validate();
  if (height < cfg.min_height) {
    throw Error(ErrorCode::kBelowActivationHeight,
                "height " + std::to_string(height) + " m below " + std::to_string(cfg.min_height) + " m");
  }
  const GroundPlaneFit fit = fit_ground_plane(mask, intr, height, cfg);
  OrientationObservation obs;
  obs.source = ObservationSource::kGroundPlane;
  obs.timestamp = t;
  obs.variance = cfg.variance;
  obs.value = attitude_from_normals(fit.normal, reference_normal);
  obs.clamped = clamp_to_limits(obs.value);
  obs.ground_range = fit.range;
  return obs;
}

Vec3 reference_ground_normal(std::span<const BinaryMask> frames, const CameraIntrinsics& intr,
                             double height, const GroundPlaneConfig& cfg) {
  if (frames.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "ground reference needs at least one frame");
  }
  Vec3 sum = Vec3::Zero();
  for (const auto& frame : frames) sum += fit_ground_plane(frame, intr, height, cfg).normal;
  return sum.normalized();
}

}  // namespace skyfuse
