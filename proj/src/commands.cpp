#include "skyfuse/commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>

#include "skyfuse/config.hpp"
#include "skyfuse/error.hpp"
#include "skyfuse/pipeline.hpp"

namespace skyfuse {

std::filesystem::path summary_path(const std::filesystem::path& report_csv) {
  auto p = report_csv;
  p += ".summary";
  return p;
}

std::filesystem::path trials_path(const std::filesystem::path& table_csv) {
  return table_csv.parent_path() / (table_csv.stem().string() + "_trials.csv");
}

void cmd_simulate(const std::filesystem::path& config_path, std::optional<std::uint64_t> seed,
                  const std::filesystem::path& out_dir) {
  RunConfig config = load_config(config_path);
  if (seed) config.scenario.trajectory.seed = *seed;
  const GeneratedSource source(config);
  write_scenario(out_dir, source);
}

RunReport cmd_fuse(const std::filesystem::path& scenario_dir, MethodSet methods,
                   std::optional<std::uint64_t> seed, const std::filesystem::path& out_csv) {
  DirectorySource source(scenario_dir);
  if (seed) source.set_filter_seed(*seed);
  RunReport report = run_methods(source, methods);
  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  write_report_csv(out_csv, report);
  std::ofstream summary(summary_path(out_csv), std::ios::binary);
  write_summary(summary, report);
  return report;
}

void cmd_evaluate(const std::vector<std::filesystem::path>& reports, const std::filesystem::path& out_csv,
                  std::ostream& human) {
  if (reports.empty()) throw Error(ErrorCode::kInvalidArgument, "evaluate needs at least one report");
  std::vector<NamedReport> named;
  for (const auto& path : reports) named.push_back({path.stem().string(), read_report_csv(path)});

  if (out_csv.has_parent_path()) std::filesystem::create_directories(out_csv.parent_path());
  {
    std::ofstream out(out_csv, std::ios::binary);
    if (!out) throw Error(ErrorCode::kScenarioError, "cannot write " + out_csv.string());
    write_rmse_table(out, named);
  }
  {
    std::ofstream out(trials_path(out_csv), std::ios::binary);
    if (!out) throw Error(ErrorCode::kScenarioError, "cannot write " + trials_path(out_csv).string());
    write_trial_stats(out, named);
  }

  char line[160];
  std::snprintf(line, sizeof(line), "%-24s %-8s %12s %12s %12s\n", "report", "method", "roll[deg]",
                "pitch[deg]", "mean[deg]");
  human << line;
  for (const auto& nr : named) {
    for (Method m : kAllMethods) {
      if (!nr.report.methods.contains(m)) continue;
      const auto& s = nr.report.of(m);
      if (s.failed) {
        std::snprintf(line, sizeof(line), "%-24s %-8s %12s %12s %12s\n", nr.name.c_str(),
                      std::string(to_string(m)).c_str(), "-----", "-----", "-----");
      } else {
        std::snprintf(line, sizeof(line), "%-24s %-8s %12.4f %12.4f %12.4f\n", nr.name.c_str(),
                      std::string(to_string(m)).c_str(), rad2deg(s.rmse_roll), rad2deg(s.rmse_pitch),
                      rad2deg(s.rmse()));
      }
      human << line;
    }
  }
}

}  // namespace skyfuse
