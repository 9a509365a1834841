#pragma once

#include <cstdint>
#include <string_view>

#include "skyfuse/geometry.hpp"

namespace skyfuse {

enum class ObservationSource : std::uint8_t { kImu = 0, kSkyline = 1, kGroundPlane = 2 };

std::string_view to_string(ObservationSource source) noexcept;

/// One attitude measurement with an isotropic variance (rad^2, per axis).
struct OrientationObservation {
  ObservationSource source = ObservationSource::kImu;
  RollPitch value;
  double variance = 1.0;
  double timestamp = 0.0;
  /// Set when the raw estimate exceeded the mechanical limit and was clamped.
  bool clamped = false;
  /// Range to the reconstructed ground (ground-plane observations only; 0 otherwise).
  double ground_range = 0.0;
};

}  // namespace skyfuse
