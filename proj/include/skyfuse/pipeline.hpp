#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <vector>

#include "skyfuse/config.hpp"
#include "skyfuse/filter.hpp"
#include "skyfuse/report.hpp"
#include "skyfuse/sim.hpp"
#include "skyfuse/skyline.hpp"

namespace skyfuse {

/// Random-access stream of frames with their sensor readings.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const RunConfig& config() const noexcept = 0;
  virtual std::size_t size() const noexcept = 0;
  virtual FrameSample sample(std::size_t k) const = 0;
  virtual void mask_into(std::size_t k, BinaryMask& out) const = 0;
};

/// Frames rendered on demand from a RunConfig.
class GeneratedSource final : public FrameSource {
 public:
  explicit GeneratedSource(RunConfig config);

  const RunConfig& config() const noexcept override { return config_; }
  std::size_t size() const noexcept override { return gen_.size(); }
  FrameSample sample(std::size_t k) const override { return gen_.sample(k); }
  void mask_into(std::size_t k, BinaryMask& out) const override { gen_.mask_into(k, out); }

 private:
  RunConfig config_;
  ScenarioGenerator gen_;
};

/// A scenario directory written by write_scenario. Malformed or missing files
/// raise kScenarioError.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(std::filesystem::path dir);

  const RunConfig& config() const noexcept override { return config_; }
  std::size_t size() const noexcept override { return frames_.size(); }
  FrameSample sample(std::size_t k) const override;
  void mask_into(std::size_t k, BinaryMask& out) const override;

  void set_filter_seed(std::uint64_t seed) noexcept { config_.filter.seed = seed; }

 private:
  std::filesystem::path dir_;
  RunConfig config_;
  std::vector<FrameSample> frames_;
};

std::filesystem::path mask_path(const std::filesystem::path& dir, std::size_t k);

/// scenario.json, frames.csv and masks/frame_NNNNNN.pgm.
void write_scenario(const std::filesystem::path& dir, const FrameSource& source);

/// Per-frame estimators of all four methods sharing one set of references.
class Pipeline {
 public:
  /// Captures the skyline, ground and barometer references from the frames
  /// inside the configured static hold (at least the first frame).
  Pipeline(const FrameSource& source, MethodSet methods);

  /// Runs every enabled method on one frame. Frames must arrive in time order.
  FrameRecord step(const FrameSample& sample, const BinaryMask& mask);

  bool has_ground_reference() const noexcept { return ground_reference_.has_value(); }
  const SkylineTrack& skyline_track() const noexcept { return track_; }

 private:
  RunConfig cfg_;
  MethodSet methods_;
  SkylineTrack track_;
  std::optional<Vec3> ground_reference_;
  double baro_reference_ = 0.0;
  double last_range_ = 0.0;
  ManifoldParticleFilter filter_;
  std::optional<FrameSample> previous_;
};

/// Runs the pipeline over a whole source and summarizes the result.
RunReport run_methods(const FrameSource& source, MethodSet methods);

}  // namespace skyfuse
