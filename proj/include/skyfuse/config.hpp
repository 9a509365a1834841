#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "skyfuse/filter.hpp"
#include "skyfuse/plane.hpp"
#include "skyfuse/sim.hpp"
#include "skyfuse/skyline.hpp"

namespace skyfuse {

/// Everything needed to simulate a scenario and run the estimators on it.
struct RunConfig {
  ScenarioSpec scenario;
  SkylineConfig skyline;
  GroundPlaneConfig ground;
  SphericalGrid grid;
  FilterConfig filter;

  void validate() const;
};

/// Parses a JSON run configuration. Every key is optional and defaults to the
/// library default; unknown keys are rejected. Errors are thrown as
/// Error(kConfigError) whose message starts with "<origin>:<line>:" and names
/// the offending field.
RunConfig parse_config(std::string_view text, std::string_view origin = "config");
RunConfig load_config(const std::filesystem::path& path);

/// Canonical JSON form with every field spelled out. Angles are written in
/// degrees, so parsing it back reproduces `config` up to conversion rounding.
std::string dump_config(const RunConfig& config);

}  // namespace skyfuse
