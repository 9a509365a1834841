#pragma once
// Synthetic scenarios: attitude trajectories, rendered sky/ground masks, a
// drifting IMU, a noisy barometer and ground-visibility dropouts. Every output
// is a pure function of its configuration and seed.

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

#include "skyfuse/geometry.hpp"
#include "skyfuse/mask.hpp"
#include "skyfuse/observation.hpp"

namespace skyfuse {

/// Deterministic 64-bit seed derivation (splitmix64 over seed ^ stream).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

enum class Pattern { kPureRoll, kPurePitch, kMixed };

std::string_view to_string(Pattern p) noexcept;
/// Throws kInvalidArgument for anything but pure_roll / pure_pitch / mixed.
Pattern parse_pattern(std::string_view name);

struct TrajectorySpec {
  Pattern pattern = Pattern::kPureRoll;
  double angular_speed = 3.0;  // deg/s
  double duration = 125.0;     // s, including the static hold
  double frame_rate = 20.0;    // Hz
  std::uint64_t seed = 1;
  /// Leading interval held level for reference capture (s).
  double static_hold = 2.0;
  double amplitude = 30.0;  // deg
  /// Correlation time of the mixed pattern's rate process (s).
  double mixed_tau = 1.0;

  void validate() const;
  std::size_t frame_count() const noexcept;
};

struct TruthSample {
  double t = 0.0;
  RollPitch value;
};

/// duration * frame_rate samples at t = k / frame_rate.
std::vector<TruthSample> generate_trajectory(const TrajectorySpec& spec);

/// Magnitude of the truth angular rate at every sample (backward difference,
/// 0 at the first sample).
std::vector<double> angular_rates(std::span<const TruthSample> truth);

struct NoiseSpec {
  double imu_sigma = 0.001;         // rad, white
  double imu_bias_walk = 0.003;     // rad/sqrt(s)
  double skyline_noise = 3.0;       // px
  double ground_dropout_rate = 0.002;  // per-frame loss probability at rest
  double baro_sigma = 0.5;          // m

  void validate() const;
};

/// Two-state visibility chain. With s = |rate| / reference_rate and
/// stress = 1 + gain * s^exponent:
///   P(lose ground)    = min(1, d * stress)
///   P(regain ground)  = (1 - d) * recovery / stress^2
/// where d is NoiseSpec::ground_dropout_rate.
struct DropoutModel {
  double gain = 12.0;
  double exponent = 4.0;
  double reference_rate = deg2rad(15.0);  // rad/s
  double recovery = 0.1;

  void validate() const;
};

/// Per-frame distortion of the rendered horizon.
struct HorizonPerturbation {
  double offset = 0.0;  // rows
  double tilt = 0.0;    // rad
  double ridge_amplitude = 0.0;  // rows
  double ridge_period = 160.0;   // columns
  std::vector<double> column_jitter;  // rows, one per column or empty
};

/// Offset ~ N(0, noise), tilt moving the image edge by ~N(0, noise) rows,
/// per-column jitter ~ N(0, noise / 2).
HorizonPerturbation draw_perturbation(double skyline_noise, const CameraIntrinsics& intr,
                                      std::mt19937_64& rng);

/// Boundary row of every column for a camera at `truth` relative to a level
/// reference whose horizon sits on `reference_pitch_row`.
std::vector<double> horizon_rows(RollPitch truth, const CameraIntrinsics& intr,
                                 double reference_pitch_row, const HorizonPerturbation& perturb = {});

/// Sky above the horizon (255), ground on and below it (0). |roll| must be < 45 deg.
BinaryMask render_mask(RollPitch truth, const CameraIntrinsics& intr, double reference_pitch_row,
                       const HorizonPerturbation& perturb = {});
void render_mask_into(RollPitch truth, const CameraIntrinsics& intr, double reference_pitch_row,
                      const HorizonPerturbation& perturb, BinaryMask& mask,
                      std::vector<double>& rows_scratch);

/// truth + bias(t) + white noise, the bias a random walk from zero.
std::vector<OrientationObservation> simulate_imu(std::span<const TruthSample> truth,
                                                 const NoiseSpec& noise, std::uint64_t seed);

std::vector<double> simulate_baro(std::span<const double> true_height, double sigma, std::uint64_t seed);

/// 1 = ground visible. `rates` are truth angular rate magnitudes (rad/s).
std::vector<std::uint8_t> simulate_ground_availability(std::span<const double> rates,
                                                       const NoiseSpec& noise, std::uint64_t seed,
                                                       const DropoutModel& model = {});

struct ScenarioSpec {
  TrajectorySpec trajectory;
  NoiseSpec noise;
  DropoutModel dropout;
  CameraIntrinsics intrinsics;
  double height = 400.0;  // m, constant true height
  double ridge_amplitude = 0.0;  // rows
  double ridge_period = 160.0;   // columns

  void validate() const;
};

/// Everything about one frame except the mask.
struct FrameSample {
  double t = 0.0;
  RollPitch truth;
  OrientationObservation imu;
  double height = 0.0;  // barometer reading
  bool ground_available = true;
};

/// Precomputes the sensor series and renders masks on demand, so a scenario
/// of any length can be streamed without holding its masks in memory.
class ScenarioGenerator {
 public:
  explicit ScenarioGenerator(ScenarioSpec spec);

  const ScenarioSpec& spec() const noexcept { return spec_; }
  std::size_t size() const noexcept { return truth_.size(); }
  FrameSample sample(std::size_t k) const;
  /// Mask of frame k; its noise depends only on (seed, k).
  BinaryMask mask(std::size_t k) const;
  void mask_into(std::size_t k, BinaryMask& out) const;

  std::span<const TruthSample> truth() const noexcept { return truth_; }

 private:
  ScenarioSpec spec_;
  std::vector<TruthSample> truth_;
  std::vector<OrientationObservation> imu_;
  std::vector<double> baro_;
  std::vector<std::uint8_t> available_;
  mutable std::vector<double> rows_scratch_;
};

}  // namespace skyfuse
