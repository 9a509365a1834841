#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "skyfuse/commands.hpp"
#include "skyfuse/error.hpp"
#include "skyfuse/geometry.hpp"

namespace fs = std::filesystem;
using namespace skyfuse;

namespace {

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::kConfigError: return kExitConfig;
    case ErrorCode::kInvalidArgument: return kExitUsage;
    default: return kExitScenario;
  }
}

void print_summary(const RunReport& report) {
  for (Method m : kAllMethods) {
    if (!report.methods.contains(m)) continue;
    const auto& s = report.of(m);
    std::cout << to_string(m) << ": ";
    if (s.failed) {
      std::cout << "failed (" << s.bad_roll << " roll / " << s.bad_pitch << " pitch frames off by > 0.3 rad)\n";
    } else {
      std::cout << "rmse roll " << rad2deg(s.rmse_roll) << " deg, pitch " << rad2deg(s.rmse_pitch) << " deg\n";
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Roll/pitch estimation from sky masks, ground planes and an IMU"};
  app.require_subcommand(1);

  std::string config_path;
  std::string scenario_dir;
  std::string methods = "imu,skyline,ground,fusion";
  std::string out;
  std::optional<std::uint64_t> seed;
  std::vector<std::string> reports;

  auto* sim = app.add_subcommand("simulate", "Render a synthetic scenario directory");
  sim->add_option("--config", config_path, "JSON run configuration")->required()->check(CLI::ExistingFile);
  sim->add_option("--seed", seed, "Override the scenario seed");
  sim->add_option("--out", out, "Output directory")->required();

  auto* fuse = app.add_subcommand("fuse", "Run estimators over a scenario and write a report CSV");
  fuse->add_option("--scenario", scenario_dir, "Scenario directory")->required();
  fuse->add_option("--methods", methods, "Comma-separated subset of imu,skyline,ground,fusion");
  fuse->add_option("--seed", seed, "Override the particle filter seed");
  fuse->add_option("--out", out, "Report CSV path")->required();

  auto* eval = app.add_subcommand("evaluate", "Summarize report CSVs");
  eval->add_option("reports", reports, "Report CSV files")->required()->check(CLI::ExistingFile);
  eval->add_option("--out", out, "RMSE table CSV path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      cmd_simulate(config_path, seed, out);
      std::cout << "wrote scenario to " << out << '\n';
    } else if (fuse->parsed()) {
      MethodSet set;
      try {
        set = MethodSet::parse(methods);
      } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return kExitUsage;
      }
      print_summary(cmd_fuse(scenario_dir, set, seed, out));
    } else if (eval->parsed()) {
      std::vector<fs::path> paths(reports.begin(), reports.end());
      cmd_evaluate(paths, out, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitScenario;
  }
  return kExitOk;
}
