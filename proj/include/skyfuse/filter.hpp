#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "skyfuse/geometry.hpp"
#include "skyfuse/observation.hpp"

namespace skyfuse {

/// Resolution level of a particle's cell, coarse to fine.
enum class CellLevel : std::uint8_t { kCoarse = 0, kMedium = 1, kFine = 2 };

struct CellIndex {
  int roll = 0;
  int pitch = 0;

  friend bool operator==(const CellIndex&, const CellIndex&) = default;
};

/// Three nested discretizations of the bounded roll/pitch domain.
struct SphericalGrid {
  double roll_min = -kMechanicalLimit;
  double roll_max = kMechanicalLimit;
  double pitch_min = -kMechanicalLimit;
  double pitch_max = kMechanicalLimit;
  std::array<double, 3> cell_size = {deg2rad(5.0), deg2rad(1.0), deg2rad(0.2)};

  /// Ranges inside the mechanical limit, sizes strictly decreasing, every level
  /// tiling the range exactly and nesting in the next coarser one.
  void validate() const;

  double size(CellLevel level) const noexcept { return cell_size[static_cast<int>(level)]; }
  int cell_count_roll(CellLevel level) const noexcept;
  int cell_count_pitch(CellLevel level) const noexcept;
  /// Containing cell; positions outside the range map to the border cell.
  CellIndex cell_of(RollPitch position, CellLevel level) const noexcept;
  RollPitch center(CellIndex cell, CellLevel level) const noexcept;
  RollPitch clamp(RollPitch position) const noexcept;
};

struct Particle {
  CellIndex cell;
  CellLevel level = CellLevel::kCoarse;
  double weight = 0.0;
  double birth_time = 0.0;
  /// Unsnapped track position. Propagation moves the anchor and `cell` is
  /// always the cell containing it, so motion smaller than a cell accumulates.
  RollPitch anchor;
  /// Set by lifetime maintenance once a coarse particle outlives its budget.
  bool expired = false;
};

struct FilterConfig {
  int n_particles = 200;
  int n_children = 5;
  double epsilon = 2.0 * deg2rad(5.0);
  double lifetime = 1.0;
  double imu_sigma = deg2rad(0.5);
  double imu_bias_offset = 0.0;
  /// Random-walk intensity added on every propagation (rad/sqrt(s)).
  double process_noise = 0.01;
  /// Coarse particles older than removal_factor * lifetime are dropped at resampling.
  double removal_factor = 3.0;
  /// Resample when ESS < resample_threshold * n_particles.
  double resample_threshold = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

struct SourceSet {
  std::uint8_t bits = 0;

  void insert(ObservationSource s) noexcept { bits |= static_cast<std::uint8_t>(1u << static_cast<int>(s)); }
  bool contains(ObservationSource s) const noexcept { return (bits >> static_cast<int>(s)) & 1u; }
  friend bool operator==(const SourceSet&, const SourceSet&) = default;
};

struct FusedEstimate {
  RollPitch value;
  double timestamp = 0.0;
  double effective_sample_size = 0.0;
  SourceSet contributing_sources;
};

struct FusedCv {
  RollPitch mean;
  double variance = 0.0;
};

/// Inverse-variance combination of two vision observations.
FusedCv fuse_cv(const OrientationObservation& c1, const OrientationObservation& c2);

enum class WeightUpdateStatus { kUpdated, kReinitialized };

/// Adaptive-resolution particle filter over (roll, pitch).
///
/// Particles are born on coarse cells from the IMU, vision observations spawn
/// children on medium (one source) or fine (both sources) cells around the
/// observation, and particles drift back to coarser cells as they age. Weights
/// are normalized after every public operation.
///
/// Single writer; the caller serializes access.
class ManifoldParticleFilter {
 public:
  ManifoldParticleFilter(SphericalGrid grid, FilterConfig config);

  bool initialized() const noexcept { return initialized_; }
  std::span<const Particle> particles() const noexcept { return particles_; }
  const SphericalGrid& grid() const noexcept { return grid_; }
  const FilterConfig& config() const noexcept { return cfg_; }
  RollPitch center(const Particle& p) const noexcept { return grid_.center(p.cell, p.level); }

  /// Replaces the particle set (cells are re-derived from anchors, weights normalized).
  void set_particles(std::vector<Particle> particles);

  /// First call: draws N coarse particles from N(mu_I + rate*dt, (sigma_I + b)^2).
  /// Later calls: shifts every anchor by rate*dt plus process noise and re-snaps.
  void propagate_from_imu(const OrientationObservation& imu, double dt, RollPitch rate);

  /// Multiplies weights by the Gaussian kernel of each particle's distance to
  /// the observation. When every kernel underflows, the filter restarts from
  /// the observation and reports kReinitialized.
  WeightUpdateStatus weight_update(const OrientationObservation& obs);

  /// Spawns n_children around the (fused) observation for every particle
  /// within epsilon of it. Returns the number of children added.
  std::size_t refine(std::span<const OrientationObservation> observations, double now);

  /// Demotes aged fine/medium particles one level and flags long-lived coarse ones.
  void lifetime_maintenance(double now);

  /// Systematic resampling back to N when ESS < threshold*N or the set has
  /// grown past N. Returns true if it ran.
  bool resample();

  double effective_sample_size() const noexcept;

  /// Weighted mean of cell centers. Throws kEmptyFilter on an empty set.
  FusedEstimate estimate(double now) const;

 private:
  Particle make_particle(RollPitch anchor, CellLevel level, double weight, double birth) const noexcept;
  void normalize();
  void reinitialize_from(const OrientationObservation& obs);

  SphericalGrid grid_;
  FilterConfig cfg_;
  std::mt19937_64 rng_;
  std::vector<Particle> particles_;
  bool initialized_ = false;
  SourceSet sources_;
  std::vector<double> roll_buf_;
  std::vector<double> pitch_buf_;
  std::vector<double> weight_buf_;
};

}  // namespace skyfuse
