#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "skyfuse/geometry.hpp"

namespace skyfuse {

enum class Method { kImu = 0, kSkyline = 1, kGround = 2, kFusion = 3 };
inline constexpr std::array<Method, 4> kAllMethods = {Method::kImu, Method::kSkyline, Method::kGround,
                                                      Method::kFusion};

std::string_view to_string(Method m) noexcept;

struct MethodSet {
  std::array<bool, 4> enabled = {true, true, true, true};

  bool contains(Method m) const noexcept { return enabled[static_cast<int>(m)]; }
  void insert(Method m) noexcept { enabled[static_cast<int>(m)] = true; }
  bool empty() const noexcept;
  /// Comma-separated subset of imu, skyline, ground, fusion. Throws kInvalidArgument.
  static MethodSet parse(std::string_view list);
  static MethodSet none() noexcept { return MethodSet{{false, false, false, false}}; }
};

/// Absolute error above which a frame counts against a method (rad).
inline constexpr double kFailureThreshold = 0.3;
inline constexpr std::string_view kFailedToken = "-----";

/// One frame of a run; estimates a method did not produce are NaN.
struct FrameRecord {
  double t = 0.0;
  RollPitch truth;
  std::array<RollPitch, 4> estimate;

  RollPitch& at(Method m) noexcept { return estimate[static_cast<int>(m)]; }
  const RollPitch& at(Method m) const noexcept { return estimate[static_cast<int>(m)]; }
};

/// Per-frame error distribution, the error of a frame being the mean of its
/// absolute roll and pitch errors.
struct ErrorStats {
  double mean = 0.0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct MethodSummary {
  double rmse_roll = 0.0;
  double rmse_pitch = 0.0;
  std::size_t valid_frames = 0;
  std::size_t bad_roll = 0;   // NaN or |error| > threshold
  std::size_t bad_pitch = 0;
  bool failed = false;
  ErrorStats stats;

  double rmse() const noexcept { return 0.5 * (rmse_roll + rmse_pitch); }
};

struct RunReport {
  MethodSet methods = MethodSet::none();
  std::vector<FrameRecord> records;
  std::array<MethodSummary, 4> summary;

  const MethodSummary& of(Method m) const noexcept { return summary[static_cast<int>(m)]; }
};

/// sqrt(mean(e^2)) over the finite entries; NaN when there are none.
double rmse(std::span<const double> errors) noexcept;

/// More than half of the frames are NaN or off by more than the threshold.
bool exceeds_failure_rule(std::size_t bad_frames, std::size_t frame_count) noexcept;

/// Fills report.summary from its records.
void summarize(RunReport& report);

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);

void write_report_csv(std::ostream& out, const RunReport& report);
void write_report_csv(const std::filesystem::path& path, const RunReport& report);
/// key=value lines: per-method RMSE, failure flag and error statistics.
void write_summary(std::ostream& out, const RunReport& report);
/// Reads a report written by write_report_csv and recomputes its summary.
/// Throws kScenarioError on malformed input.
RunReport read_report_csv(const std::filesystem::path& path);

struct NamedReport {
  std::string name;
  RunReport report;
};

/// Per-report RMSE table: report,method,rmse_roll,rmse_pitch,rmse,failed.
/// Failed methods print the failure token instead of numbers.
void write_rmse_table(std::ostream& out, std::span<const NamedReport> reports);
/// Per-report error statistics plus one aggregate row per method (means over
/// the reports): report,method,mean_error,median_error,min_error,max_error.
void write_trial_stats(std::ostream& out, std::span<const NamedReport> reports);

}  // namespace skyfuse
