#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "skyfuse/report.hpp"

namespace skyfuse {

/// Process exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitConfig = 2, kExitScenario = 3 };

/// Simulates the configured scenario into `out_dir`. `seed` overrides the
/// configured scenario seed.
void cmd_simulate(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                  const std::filesystem::path& out_dir);

/// Runs `methods` over a scenario directory, writes the per-frame report to
/// `out_csv` and the key=value summary next to it (`<out_csv>.summary`).
/// `seed` overrides the particle filter seed.
RunReport cmd_fuse(const std::filesystem::path& scenario_dir, MethodSet methods,
                   std::optional<std::uint64_t> seed, const std::filesystem::path& out_csv);

/// Reads reports and writes the RMSE table to `out_csv` and the per-trial error
/// statistics to `<stem>_trials.csv` beside it. A human-readable table in
/// degrees goes to `human`.
void cmd_evaluate(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_csv,
                  std::ostream& human);

/// Path of the summary sidecar of a report.
std::filesystem::path summary_path(const std::filesystem::path& report_csv);
std::filesystem::path trials_path(const std::filesystem::path& table_csv);

}  // namespace skyfuse
