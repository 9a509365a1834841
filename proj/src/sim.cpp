#include "skyfuse/sim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "skyfuse/error.hpp"
#include "skyfuse/kernels.hpp"

namespace skyfuse {

namespace {

// Seed streams of a scenario.
enum : std::uint64_t { kImuStream = 1, kBaroStream = 2, kGroundStream = 3, kMaskStream = 4 };

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kInvalidArgument, what);
}

double triangle(double t, double speed, double amplitude) {
  const double quarter = amplitude / speed;
  const double phase = std::fmod(t, 4.0 * quarter);
  if (phase < quarter) return speed * phase;
  if (phase < 3.0 * quarter) return 2.0 * amplitude - speed * phase;
  return speed * phase - 4.0 * amplitude;
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed ^ (stream * 0xd1b54a32d192ed03ULL);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string_view to_string(Pattern p) noexcept {
  switch (p) {
    case Pattern::kPureRoll: return "pure_roll";
    case Pattern::kPurePitch: return "pure_pitch";
    case Pattern::kMixed: return "mixed";
  }
  return "unknown";
}

Pattern parse_pattern(std::string_view name) {
  if (name == "pure_roll") return Pattern::kPureRoll;
  if (name == "pure_pitch") return Pattern::kPurePitch;
  if (name == "mixed") return Pattern::kMixed;
  throw Error(ErrorCode::kInvalidArgument, "unknown pattern '" + std::string(name) + "'");
}

void TrajectorySpec::validate() const {
  require(duration > 0.0, "duration must be positive");
  require(frame_rate > 0.0, "frame_rate must be positive");
  require(angular_speed >= 0.0, "angular_speed must be non-negative");
  require(static_hold >= 0.0, "static_hold must be non-negative");
  require(amplitude > 0.0 && amplitude < 45.0, "amplitude must be in (0, 45) deg");
  require(mixed_tau > 0.0, "mixed_tau must be positive");
}

std::size_t TrajectorySpec::frame_count() const noexcept {
  return static_cast<std::size_t>(std::llround(duration * frame_rate));
}

std::vector<TruthSample> generate_trajectory(const TrajectorySpec& spec) {
  spec.validate();
  const std::size_t n = spec.frame_count();
  const double dt = 1.0 / spec.frame_rate;
  const double speed = deg2rad(spec.angular_speed);
  const double amplitude = deg2rad(spec.amplitude);
  std::vector<TruthSample> out(n);

  if (spec.pattern != Pattern::kMixed) {
    for (std::size_t k = 0; k < n; ++k) {
      const double t = static_cast<double>(k) * dt;
      const double moving = t - spec.static_hold;
      const double angle = moving > 0.0 && speed > 0.0 ? triangle(moving, speed, amplitude) : 0.0;
      out[k].t = t;
      out[k].value = spec.pattern == Pattern::kPureRoll ? RollPitch{angle, 0.0} : RollPitch{0.0, angle};
    }
    return out;
  }

  // Ornstein-Uhlenbeck rate with a weak spring toward level, clamped to the
  // speed limit per axis and to the amplitude.
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double tau = spec.mixed_tau;
  const double sigma = speed * std::sqrt(2.0 / tau);
  const double spring = speed / (amplitude * tau);
  double angle[2] = {0.0, 0.0};
  double rate[2] = {0.0, 0.0};
  for (std::size_t k = 0; k < n; ++k) {
    const double t = static_cast<double>(k) * dt;
    out[k].t = t;
    out[k].value = RollPitch{angle[0], angle[1]};
    // Draw every step so the stream does not depend on the hold length.
    const double xi[2] = {gauss(rng), gauss(rng)};
    if (t + dt <= spec.static_hold) continue;
    for (int a = 0; a < 2; ++a) {
      rate[a] += (-rate[a] / tau - spring * angle[a]) * dt + sigma * std::sqrt(dt) * xi[a];
      rate[a] = std::clamp(rate[a], -speed, speed);
      angle[a] += rate[a] * dt;
      if (std::abs(angle[a]) > amplitude) {
        angle[a] = std::copysign(amplitude, angle[a]);
        rate[a] = 0.0;
      }
    }
  }
  return out;
}

std::vector<double> angular_rates(std::span<const TruthSample> truth) {
  std::vector<double> rates(truth.size(), 0.0);
  for (std::size_t k = 1; k < truth.size(); ++k) {
    const double dt = truth[k].t - truth[k - 1].t;
    if (!(dt > 0.0)) continue;
    rates[k] = std::hypot(truth[k].value.roll - truth[k - 1].value.roll,
                          truth[k].value.pitch - truth[k - 1].value.pitch) / dt;
  }
  return rates;
}

void NoiseSpec::validate() const {
  require(imu_sigma >= 0.0 && imu_bias_walk >= 0.0 && skyline_noise >= 0.0 && baro_sigma >= 0.0,
          "noise magnitudes must be non-negative");
  require(ground_dropout_rate >= 0.0 && ground_dropout_rate <= 1.0,
          "ground_dropout_rate must be a probability");
}

void DropoutModel::validate() const {
  require(gain >= 0.0, "dropout gain must be non-negative");
  require(exponent > 0.0, "dropout exponent must be positive");
  require(reference_rate > 0.0, "dropout reference_rate must be positive");
  require(recovery >= 0.0 && recovery <= 1.0, "dropout recovery must be a probability");
}

HorizonPerturbation draw_perturbation(double skyline_noise, const CameraIntrinsics& intr,
                                      std::mt19937_64& rng) {
  HorizonPerturbation p;
  if (!(skyline_noise > 0.0)) return p;
  std::normal_distribution<double> gauss(0.0, 1.0);
  p.offset = skyline_noise * gauss(rng);
  p.tilt = std::atan(skyline_noise * gauss(rng) / std::max(intr.cx, 1.0));
  p.column_jitter.resize(static_cast<std::size_t>(intr.image_width));
  for (double& j : p.column_jitter) j = 0.5 * skyline_noise * gauss(rng);
  return p;
}

namespace {

void fill_horizon_rows(RollPitch truth, const CameraIntrinsics& intr, double reference_pitch_row,
                       const HorizonPerturbation& perturb, std::vector<double>& rows) {
  if (!(std::abs(truth.roll) < kMechanicalLimit)) {
    throw Error(ErrorCode::kInvalidArgument, "render roll must be inside +-45 deg");
  }
  const int width = intr.image_width;
  rows.resize(static_cast<std::size_t>(width));
  // Exact pinhole horizon of a camera rolled by a and pitched by b:
  // v - v0 = (fy/fx) tan(a) (u - cx) + fy tan(b) / cos(a).
  const double slope = intr.fy / intr.fx * std::tan(truth.roll + perturb.tilt);
  const double center = reference_pitch_row + intr.fy * std::tan(truth.pitch) / std::cos(truth.roll) +
                        perturb.offset;
  const bool jitter = perturb.column_jitter.size() == rows.size();
  const double ridge_k = 2.0 * kPi / perturb.ridge_period;
  for (int u = 0; u < width; ++u) {
    double v = center + slope * (u - intr.cx);
    if (perturb.ridge_amplitude != 0.0) v += perturb.ridge_amplitude * std::sin(ridge_k * u);
    if (jitter) v += perturb.column_jitter[static_cast<std::size_t>(u)];
    rows[static_cast<std::size_t>(u)] = v;
  }
}

}  // namespace

std::vector<double> horizon_rows(RollPitch truth, const CameraIntrinsics& intr,
                                 double reference_pitch_row, const HorizonPerturbation& perturb) {
  std::vector<double> rows;
  fill_horizon_rows(truth, intr, reference_pitch_row, perturb, rows);
  return rows;
}

void render_mask_into(RollPitch truth, const CameraIntrinsics& intr, double reference_pitch_row,
                      const HorizonPerturbation& perturb, BinaryMask& mask,
                      std::vector<double>& rows_scratch) {
  fill_horizon_rows(truth, intr, reference_pitch_row, perturb, rows_scratch);
  if (mask.width() != intr.image_width || mask.height() != intr.image_height) {
    mask = BinaryMask(intr.image_width, intr.image_height);
  }
  kernels::parallel::render_boundary(rows_scratch, mask);
}

BinaryMask render_mask(RollPitch truth, const CameraIntrinsics& intr, double reference_pitch_row,
                       const HorizonPerturbation& perturb) {
  intr.validate();
  BinaryMask mask(intr.image_width, intr.image_height);
  std::vector<double> rows;
  render_mask_into(truth, intr, reference_pitch_row, perturb, mask, rows);
  return mask;
}

std::vector<OrientationObservation> simulate_imu(std::span<const TruthSample> truth,
                                                 const NoiseSpec& noise, std::uint64_t seed) {
  noise.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<OrientationObservation> out(truth.size());
  double bias_roll = 0.0;
  double bias_pitch = 0.0;
  for (std::size_t k = 0; k < truth.size(); ++k) {
    if (k > 0) {
      const double step = noise.imu_bias_walk * std::sqrt(std::max(0.0, truth[k].t - truth[k - 1].t));
      bias_roll += step * gauss(rng);
      bias_pitch += step * gauss(rng);
    }
    auto& obs = out[k];
    obs.source = ObservationSource::kImu;
    obs.timestamp = truth[k].t;
    obs.value.roll = truth[k].value.roll + bias_roll + noise.imu_sigma * gauss(rng);
    obs.value.pitch = truth[k].value.pitch + bias_pitch + noise.imu_sigma * gauss(rng);
    obs.variance = noise.imu_sigma * noise.imu_sigma;
  }
  return out;
}

std::vector<double> simulate_baro(std::span<const double> true_height, double sigma, std::uint64_t seed) {
  require(sigma >= 0.0, "baro sigma must be non-negative");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> out(true_height.size());
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = true_height[k] + sigma * gauss(rng);
  return out;
}

std::vector<std::uint8_t> simulate_ground_availability(std::span<const double> rates,
                                                       const NoiseSpec& noise, std::uint64_t seed,
                                                       const DropoutModel& model) {
  noise.validate();
  model.validate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const double d = noise.ground_dropout_rate;
  std::vector<std::uint8_t> out(rates.size());
  bool visible = true;
  for (std::size_t k = 0; k < rates.size(); ++k) {
    const double s = std::abs(rates[k]) / model.reference_rate;
    const double stress = 1.0 + model.gain * std::pow(s, model.exponent);
    const double u = uniform(rng);
    if (visible) {
      visible = !(u < std::min(1.0, d * stress));
    } else {
      visible = u < (1.0 - d) * model.recovery / (stress * stress);
    }
    out[k] = visible ? 1 : 0;
  }
  return out;
}

void ScenarioSpec::validate() const {
  trajectory.validate();
  noise.validate();
  dropout.validate();
  intrinsics.validate();
  require(height > 0.0, "height must be positive");
  require(ridge_period > 0.0, "ridge_period must be positive");
}

ScenarioGenerator::ScenarioGenerator(ScenarioSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
  const std::uint64_t seed = spec_.trajectory.seed;
  truth_ = generate_trajectory(spec_.trajectory);
  imu_ = simulate_imu(truth_, spec_.noise, mix_seed(seed, kImuStream));
  const std::vector<double> heights(truth_.size(), spec_.height);
  baro_ = simulate_baro(heights, spec_.noise.baro_sigma, mix_seed(seed, kBaroStream));
  available_ = simulate_ground_availability(angular_rates(truth_), spec_.noise,
                                            mix_seed(seed, kGroundStream), spec_.dropout);
}

FrameSample ScenarioGenerator::sample(std::size_t k) const {
  if (k >= truth_.size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  return FrameSample{truth_[k].t, truth_[k].value, imu_[k], baro_[k], available_[k] != 0};
}

void ScenarioGenerator::mask_into(std::size_t k, BinaryMask& out) const {
  if (k >= truth_.size()) throw Error(ErrorCode::kInvalidArgument, "frame index out of range");
  std::mt19937_64 rng(mix_seed(mix_seed(spec_.trajectory.seed, kMaskStream), k));
  HorizonPerturbation p = draw_perturbation(spec_.noise.skyline_noise, spec_.intrinsics, rng);
  p.ridge_amplitude = spec_.ridge_amplitude;
  p.ridge_period = spec_.ridge_period;
  render_mask_into(truth_[k].value, spec_.intrinsics, spec_.intrinsics.cy, p, out, rows_scratch_);
}

BinaryMask ScenarioGenerator::mask(std::size_t k) const {
  BinaryMask out;
  mask_into(k, out);
  return out;
}

}  // namespace skyfuse
