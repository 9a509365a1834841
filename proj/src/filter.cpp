#include "skyfuse/filter.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "skyfuse/error.hpp"
#include "skyfuse/kernels.hpp"

namespace skyfuse {

namespace {

bool is_integer_ratio(double a, double b) {
  const double q = a / b;
  return std::abs(q - std::round(q)) < 1e-6 && std::round(q) >= 1.0;
}

}  // namespace

void SphericalGrid::validate() const {
  const double limit = kMechanicalLimit + 1e-12;
  if (!(roll_min < roll_max) || !(pitch_min < pitch_max) || roll_min < -limit ||
      roll_max > limit || pitch_min < -limit || pitch_max > limit) {
    throw Error(ErrorCode::kInvalidArgument, "grid ranges must be nonempty and within +-45 deg");
  }
  for (std::size_t i = 0; i < cell_size.size(); ++i) {
    if (!(cell_size[i] > 0.0)) throw Error(ErrorCode::kInvalidArgument, "cell sizes must be positive");
    if (i + 1 < cell_size.size() &&
        (!(cell_size[i] > cell_size[i + 1]) || !is_integer_ratio(cell_size[i], cell_size[i + 1]))) {
      throw Error(ErrorCode::kInvalidArgument, "cell sizes must shrink by integer ratios");
    }
  }
  if (!is_integer_ratio(roll_max - roll_min, cell_size[0]) ||
      !is_integer_ratio(pitch_max - pitch_min, cell_size[0])) {
    throw Error(ErrorCode::kInvalidArgument, "coarse cells must tile the ranges exactly");
  }
}

int SphericalGrid::cell_count_roll(CellLevel level) const noexcept {
  return static_cast<int>((roll_max - roll_min) / size(level) + 0.5);
}

int SphericalGrid::cell_count_pitch(CellLevel level) const noexcept {
  return static_cast<int>((pitch_max - pitch_min) / size(level) + 0.5);
}

CellIndex SphericalGrid::cell_of(RollPitch position, CellLevel level) const noexcept {
  const double s = size(level);
  const int nr = cell_count_roll(level);
  const int np = cell_count_pitch(level);
  const int r = static_cast<int>(std::floor((position.roll - roll_min) / s));
  const int p = static_cast<int>(std::floor((position.pitch - pitch_min) / s));
  return CellIndex{std::clamp(r, 0, nr - 1), std::clamp(p, 0, np - 1)};
}

RollPitch SphericalGrid::center(CellIndex cell, CellLevel level) const noexcept {
  const double s = size(level);
  return RollPitch{roll_min + (cell.roll + 0.5) * s, pitch_min + (cell.pitch + 0.5) * s};
}

RollPitch SphericalGrid::clamp(RollPitch position) const noexcept {
  return RollPitch{std::clamp(position.roll, roll_min, roll_max),
                   std::clamp(position.pitch, pitch_min, pitch_max)};
}

void FilterConfig::validate() const {
  if (n_particles < 10) throw Error(ErrorCode::kInvalidArgument, "n_particles must be >= 10");
  if (n_children < 1) throw Error(ErrorCode::kInvalidArgument, "n_children must be >= 1");
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be positive");
  if (!(lifetime > 0.0)) throw Error(ErrorCode::kInvalidArgument, "lifetime must be positive");
  if (!(imu_sigma + imu_bias_offset > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "imu_sigma + imu_bias_offset must be positive");
  }
  if (process_noise < 0.0) throw Error(ErrorCode::kInvalidArgument, "process_noise must be >= 0");
  if (!(removal_factor > 0.0)) throw Error(ErrorCode::kInvalidArgument, "removal_factor must be positive");
  if (!(resample_threshold > 0.0 && resample_threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "resample_threshold must be in (0, 1]");
  }
}

FusedCv fuse_cv(const OrientationObservation& c1, const OrientationObservation& c2) {
  if (!(c1.variance > 0.0) || !(c2.variance > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "observation variances must be positive");
  }
  const double w1 = 1.0 / c1.variance;
  const double w2 = 1.0 / c2.variance;
  FusedCv out;
  out.variance = 1.0 / (w1 + w2);
  out.mean.roll = out.variance * (c1.value.roll * w1 + c2.value.roll * w2);
  out.mean.pitch = out.variance * (c1.value.pitch * w1 + c2.value.pitch * w2);
  return out;
}

ManifoldParticleFilter::ManifoldParticleFilter(SphericalGrid grid, FilterConfig config)
    : grid_(grid), cfg_(config), rng_(config.seed) {
  grid_.validate();
  cfg_.validate();
}

Particle ManifoldParticleFilter::make_particle(RollPitch anchor, CellLevel level, double weight,
                                               double birth) const noexcept {
  Particle p;
  p.anchor = grid_.clamp(anchor);
  p.level = level;
  p.cell = grid_.cell_of(p.anchor, level);
  p.weight = weight;
  p.birth_time = birth;
  return p;
}

void ManifoldParticleFilter::set_particles(std::vector<Particle> particles) {
  for (auto& p : particles) {
    p.anchor = grid_.clamp(p.anchor);
    p.cell = grid_.cell_of(p.anchor, p.level);
  }
  particles_ = std::move(particles);
  initialized_ = !particles_.empty();
  normalize();
}

void ManifoldParticleFilter::normalize() {
  double total = 0.0;
  for (const auto& p : particles_) total += p.weight;
  if (!(total > 0.0) || !std::isfinite(total)) {
    const double uniform = particles_.empty() ? 0.0 : 1.0 / static_cast<double>(particles_.size());
    for (auto& p : particles_) p.weight = uniform;
    return;
  }
  for (auto& p : particles_) p.weight /= total;
}

void ManifoldParticleFilter::propagate_from_imu(const OrientationObservation& imu, double dt,
                                                RollPitch rate) {
  if (imu.source != ObservationSource::kImu) {
    throw Error(ErrorCode::kInvalidArgument, "propagate_from_imu expects an IMU observation");
  }
  if (dt < 0.0) throw Error(ErrorCode::kInvalidArgument, "dt must be non-negative");
  sources_ = SourceSet{};
  sources_.insert(ObservationSource::kImu);

  const RollPitch shift{rate.roll * dt, rate.pitch * dt};
  if (!initialized_) {
    std::normal_distribution<double> spread(0.0, cfg_.imu_sigma + cfg_.imu_bias_offset);
    const double w = 1.0 / cfg_.n_particles;
    particles_.clear();
    particles_.reserve(static_cast<std::size_t>(cfg_.n_particles) * (1 + cfg_.n_children));
    for (int j = 0; j < cfg_.n_particles; ++j) {
      const RollPitch sample{imu.value.roll + shift.roll + spread(rng_),
                             imu.value.pitch + shift.pitch + spread(rng_)};
      particles_.push_back(make_particle(sample, CellLevel::kCoarse, w, imu.timestamp));
    }
    initialized_ = true;
    return;
  }

  const double sigma = cfg_.process_noise * std::sqrt(dt);
  std::normal_distribution<double> noise(0.0, sigma > 0.0 ? sigma : 1.0);
  for (auto& p : particles_) {
    RollPitch a{p.anchor.roll + shift.roll, p.anchor.pitch + shift.pitch};
    if (sigma > 0.0) {
      a.roll += noise(rng_);
      a.pitch += noise(rng_);
    }
    p.anchor = grid_.clamp(a);
    p.cell = grid_.cell_of(p.anchor, p.level);
  }
}

WeightUpdateStatus ManifoldParticleFilter::weight_update(const OrientationObservation& obs) {
  if (obs.source == ObservationSource::kImu) {
    throw Error(ErrorCode::kInvalidArgument, "weight_update expects a vision observation");
  }
  if (!(obs.variance > 0.0)) throw Error(ErrorCode::kInvalidArgument, "variance must be positive");
  sources_.insert(obs.source);
  if (particles_.empty()) {
    reinitialize_from(obs);
    return WeightUpdateStatus::kReinitialized;
  }

  const std::size_t n = particles_.size();
  roll_buf_.resize(n);
  pitch_buf_.resize(n);
  weight_buf_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const RollPitch c = center(particles_[i]);
    roll_buf_[i] = c.roll;
    pitch_buf_[i] = c.pitch;
    weight_buf_[i] = particles_[i].weight;
  }
  kernels::parallel::reweight(roll_buf_, pitch_buf_, obs.value, obs.variance, weight_buf_);

  double total = 0.0;
  for (double w : weight_buf_) total += w;
  if (!(total > 0.0) || !std::isfinite(total)) {
    reinitialize_from(obs);
    return WeightUpdateStatus::kReinitialized;
  }
  for (std::size_t i = 0; i < n; ++i) particles_[i].weight = weight_buf_[i] / total;
  return WeightUpdateStatus::kUpdated;
}

void ManifoldParticleFilter::reinitialize_from(const OrientationObservation& obs) {
  std::normal_distribution<double> spread(0.0, std::sqrt(obs.variance));
  const double w = 1.0 / cfg_.n_particles;
  particles_.clear();
  for (int j = 0; j < cfg_.n_particles; ++j) {
    const RollPitch sample{obs.value.roll + spread(rng_), obs.value.pitch + spread(rng_)};
    particles_.push_back(make_particle(sample, CellLevel::kMedium, w, obs.timestamp));
  }
  initialized_ = true;
}

std::size_t ManifoldParticleFilter::refine(std::span<const OrientationObservation> observations,
                                           double now) {
  const OrientationObservation* skyline = nullptr;
  const OrientationObservation* ground = nullptr;
  for (const auto& o : observations) {
    if (o.source == ObservationSource::kSkyline) skyline = &o;
    if (o.source == ObservationSource::kGroundPlane) ground = &o;
  }
  if (!skyline && !ground) return 0;

  FusedCv target;
  CellLevel level;
  if (skyline && ground) {
    target = fuse_cv(*skyline, *ground);
    level = CellLevel::kFine;
  } else {
    const auto& single = skyline ? *skyline : *ground;
    target = FusedCv{single.value, single.variance};
    level = CellLevel::kMedium;
  }

  const double eps_sq = cfg_.epsilon * cfg_.epsilon;
  std::vector<std::size_t> parents;
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    if (manifold_distance_sq(center(particles_[i]), target.mean) <= eps_sq) parents.push_back(i);
  }
  // Keep the set bounded by N*(1+m) when refine runs twice without a resample.
  const std::size_t m = static_cast<std::size_t>(cfg_.n_children);
  const std::size_t cap = static_cast<std::size_t>(cfg_.n_particles) * (1 + m);
  const std::size_t room = cap > particles_.size() ? (cap - particles_.size()) / m : 0;
  if (parents.size() > room) {
    std::stable_sort(parents.begin(), parents.end(), [&](std::size_t a, std::size_t b) {
      return particles_[a].weight > particles_[b].weight;
    });
    parents.resize(room);
  }

  std::normal_distribution<double> spread(0.0, std::sqrt(target.variance));
  const double inv = 0.5 / target.variance;
  std::vector<Particle> children;
  children.reserve(parents.size() * m);
  for (std::size_t idx : parents) {
    const double parent_weight = particles_[idx].weight;
    for (std::size_t c = 0; c < m; ++c) {
      const RollPitch sample{target.mean.roll + spread(rng_), target.mean.pitch + spread(rng_)};
      Particle child = make_particle(sample, level, 0.0, now);
      const double d2 = manifold_distance_sq(center(child), target.mean);
      child.weight = parent_weight * std::exp(-d2 * inv);
      children.push_back(child);
    }
  }
  particles_.insert(particles_.end(), children.begin(), children.end());
  normalize();
  return children.size();
}

void ManifoldParticleFilter::lifetime_maintenance(double now) {
  for (auto& p : particles_) {
    const double age = now - p.birth_time;
    if (p.level == CellLevel::kCoarse) {
      if (age > cfg_.removal_factor * cfg_.lifetime) p.expired = true;
      continue;
    }
    if (age > cfg_.lifetime) {
      p.level = static_cast<CellLevel>(static_cast<int>(p.level) - 1);
      p.cell = grid_.cell_of(p.anchor, p.level);
      p.birth_time = now;
    }
  }
}

double ManifoldParticleFilter::effective_sample_size() const noexcept {
  double sum_sq = 0.0;
  for (const auto& p : particles_) sum_sq += p.weight * p.weight;
  return sum_sq > 0.0 ? 1.0 / sum_sq : 0.0;
}

bool ManifoldParticleFilter::resample() {
  const auto n = static_cast<std::size_t>(cfg_.n_particles);
  if (particles_.empty()) return false;
  const bool degenerate = effective_sample_size() < cfg_.resample_threshold * cfg_.n_particles;
  if (!degenerate && particles_.size() <= n) return false;

  std::vector<double> w(particles_.size());
  double total = 0.0;
  for (std::size_t i = 0; i < particles_.size(); ++i) {
    w[i] = particles_[i].expired ? 0.0 : particles_[i].weight;
    total += w[i];
  }
  if (!(total > 0.0)) {  // everything expired: ignore expiry this round
    for (std::size_t i = 0; i < particles_.size(); ++i) w[i] = particles_[i].weight;
    total = std::accumulate(w.begin(), w.end(), 0.0);
  }

  std::uniform_real_distribution<double> uniform(0.0, 1.0 / static_cast<double>(n));
  const double u0 = uniform(rng_);
  std::vector<Particle> survivors;
  survivors.reserve(n * (1 + static_cast<std::size_t>(cfg_.n_children)));
  double cumulative = w[0] / total;
  std::size_t i = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = u0 + static_cast<double>(j) / static_cast<double>(n);
    while (u > cumulative && i + 1 < particles_.size()) {
      ++i;
      cumulative += w[i] / total;
    }
    Particle p = particles_[i];
    p.weight = 1.0 / static_cast<double>(n);
    survivors.push_back(p);
  }
  particles_ = std::move(survivors);
  return true;
}

FusedEstimate ManifoldParticleFilter::estimate(double now) const {
  if (particles_.empty()) throw Error(ErrorCode::kEmptyFilter, "no particles to estimate from");
  FusedEstimate out;
  double total = 0.0;
  for (const auto& p : particles_) {
    const RollPitch c = center(p);
    out.value.roll += p.weight * c.roll;
    out.value.pitch += p.weight * c.pitch;
    total += p.weight;
  }
  out.value.roll /= total;
  out.value.pitch /= total;
  out.timestamp = now;
  out.effective_sample_size = effective_sample_size();
  out.contributing_sources = sources_;
  return out;
}

}  // namespace skyfuse
