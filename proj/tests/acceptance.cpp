// Acceptance checks, one line per criterion. Exit status is the number of
// failing criteria.

#include <Eigen/LU>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "skyfuse/commands.hpp"
#include "skyfuse/filter.hpp"
#include "skyfuse/geometry.hpp"
#include "skyfuse/kernels.hpp"
#include "skyfuse/pipeline.hpp"
#include "skyfuse/plane.hpp"
#include "skyfuse/sim.hpp"
#include "skyfuse/skyline.hpp"

namespace fs = std::filesystem;
using namespace skyfuse;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kGeometryTol = 1e-9;
constexpr double kGeometryBudget = 5.0;  // s
constexpr int kRoundTrips = 500;
constexpr double kRoundTripTol = deg2rad(0.5);
constexpr double kRoundTripBudget = 60.0;  // s
constexpr int kConvergenceSeeds = 20;
constexpr int kConvergenceUpdates = 20;
constexpr double kFineCell = deg2rad(0.2);
constexpr int kTrials = 10;
constexpr int kRequiredWins = 8;
constexpr double kDriftRatio = 5.0;
constexpr int kRequiredGroundFailures = 5;
constexpr double kRequiredFps = 20.0;

int failures = 0;

void report(int id, const char* name, bool pass, const std::string& detail) {
  std::printf("[%s] %d %s: %s\n", pass ? "PASS" : "FAIL", id, name, detail.c_str());
  std::fflush(stdout);
  failures += pass ? 0 : 1;
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* f, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), f, args...);
  return buf;
}

void geometry_suite() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> angle(-kPi, kPi), half(-1.5, 1.5);
  double worst = 0.0;
  int cases = 0;
  while (cases < 10000) {
    const Vec3 m(g(rng), g(rng), g(rng)), n(g(rng), g(rng), g(rng));
    if (m.normalized().dot(n.normalized()) < -1.0 + 1e-6) continue;
    const RotationMatrix r = align_rotation(m, n);
    worst = std::max(worst, (r * m.normalized() - n.normalized()).cwiseAbs().maxCoeff());
    worst = std::max(worst, (r.transpose() * r - RotationMatrix::Identity()).cwiseAbs().maxCoeff());
    worst = std::max(worst, std::abs(r.determinant() - 1.0));
    ++cases;
  }
  double worst_euler = 0.0;
  for (int i = 0; i < 10000; ++i) {
    const double roll = angle(rng), pitch = half(rng), yaw = angle(rng);
    const EulerAngles e = euler_from_rotation(rotation_from_euler(roll, pitch, yaw));
    const auto wrap = [](double a) { return std::abs(std::remainder(a, 2.0 * kPi)); };
    worst_euler = std::max({worst_euler, wrap(e.roll - roll), wrap(e.pitch - pitch), wrap(e.yaw - yaw)});
  }
  const double elapsed = seconds_since(start);
  report(1, "geometry suite",
         worst < kGeometryTol && worst_euler < kGeometryTol && elapsed < kGeometryBudget,
         fmt("10000 alignments worst %.2e, euler round trip worst %.2e, %.2f s", worst, worst_euler, elapsed));
}

void round_trip() {
  const auto start = Clock::now();
  const CameraIntrinsics intr;
  const BinaryMask level = render_mask({0, 0}, intr, intr.cy);
  const GroundPlaneConfig gcfg;
  const Vec3 ref_normal = reference_ground_normal(std::span(&level, 1), intr, 400.0, gcfg);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(deg2rad(-30.0), deg2rad(30.0));
  std::uniform_real_distribution<double> h(300.0, 1000.0);
  double worst_sky = 0.0, worst_ground = 0.0;
  for (int i = 0; i < kRoundTrips; ++i) {
    const RollPitch truth{u(rng), u(rng)};
    const BinaryMask mask = render_mask(truth, intr, intr.cy);
    SkylineTrack track = make_skyline_track(std::span(&level, 1), intr);
    const auto sky = update_skyline(track, mask, 0.0, intr, 0.0);
    worst_sky = std::max({worst_sky, std::abs(sky.value.roll - truth.roll), std::abs(sky.value.pitch - truth.pitch)});
    const auto gnd = estimate_plane_observation(mask, intr, h(rng), ref_normal, gcfg, 0.0);
    worst_ground =
        std::max({worst_ground, std::abs(gnd.value.roll - truth.roll), std::abs(gnd.value.pitch - truth.pitch)});
  }
  const double elapsed = seconds_since(start);
  report(2, "renderer round trip",
         worst_sky < kRoundTripTol && worst_ground < kRoundTripTol && elapsed < kRoundTripBudget,
         fmt("%d poses, skyline worst %.3f deg, ground worst %.3f deg, %.2f s", kRoundTrips, rad2deg(worst_sky),
             rad2deg(worst_ground), elapsed));
}

void convergence() {
  int converged = 0;
  int slowest = 0;
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(deg2rad(-30.0), deg2rad(30.0));
  for (int seed = 1; seed <= kConvergenceSeeds; ++seed) {
    const RollPitch truth{u(rng), u(rng)};
    FilterConfig cfg;
    cfg.seed = static_cast<std::uint64_t>(seed);
    ManifoldParticleFilter f({}, cfg);
    OrientationObservation imu{ObservationSource::kImu, truth, deg2rad(0.5) * deg2rad(0.5)};
    OrientationObservation obs[2] = {
        {ObservationSource::kSkyline, truth, deg2rad(0.5) * deg2rad(0.5)},
        {ObservationSource::kGroundPlane, truth, deg2rad(1.0) * deg2rad(1.0)}};
    int hit = 0;
    for (int k = 1; k <= kConvergenceUpdates; ++k) {
      const double t = 0.05 * k;
      imu.timestamp = obs[0].timestamp = obs[1].timestamp = t;
      f.propagate_from_imu(imu, 0.05, {0, 0});
      for (const auto& o : obs) f.weight_update(o);
      f.refine(obs, t);
      f.lifetime_maintenance(t);
      const RollPitch e = f.estimate(t).value;
      const bool inside = std::abs(e.roll - truth.roll) <= kFineCell && std::abs(e.pitch - truth.pitch) <= kFineCell;
      if (inside && hit == 0) hit = k;
      if (!inside) hit = 0;
      f.resample();
    }
    if (hit > 0) {
      ++converged;
      slowest = std::max(slowest, hit);
    }
  }
  report(3, "filter convergence", converged == kConvergenceSeeds,
         fmt("%d/%d seeds inside a fine cell within %d updates (slowest settles at update %d)", converged,
             kConvergenceSeeds, kConvergenceUpdates, slowest));
}

struct SequenceResult {
  Pattern pattern;
  double speed;
  int fusion_wins = 0;
  int ground_failures = 0;
  int fusion_failures = 0;
  double imu_rmse = 0.0;     // trial mean
  double fusion_rmse = 0.0;  // trial mean
};

double duration_of(Pattern p) {
  switch (p) {
    case Pattern::kPureRoll: return 125.0;
    case Pattern::kPurePitch: return 127.0;
    case Pattern::kMixed: return 960.0;
  }
  return 0.0;
}

std::vector<SequenceResult> run_sequences() {
  std::vector<SequenceResult> out;
  for (Pattern p : {Pattern::kPureRoll, Pattern::kPurePitch, Pattern::kMixed}) {
    for (double speed : {3.0, 9.0, 15.0}) {
      SequenceResult r{p, speed};
      for (int trial = 0; trial < kTrials; ++trial) {
        RunConfig c;
        c.scenario.trajectory.pattern = p;
        c.scenario.trajectory.angular_speed = speed;
        c.scenario.trajectory.duration = duration_of(p);
        c.scenario.trajectory.seed = 1000 + static_cast<std::uint64_t>(trial);
        c.filter.seed = 1 + static_cast<std::uint64_t>(trial);
        const RunReport rep = run_methods(GeneratedSource(c), MethodSet{});
        const auto& fusion = rep.of(Method::kFusion);
        bool wins = !fusion.failed;
        for (Method m : {Method::kImu, Method::kSkyline, Method::kGround}) {
          const auto& s = rep.of(m);
          if (!s.failed && fusion.rmse() > s.rmse()) wins = false;
        }
        r.fusion_wins += wins;
        r.ground_failures += rep.of(Method::kGround).failed;
        r.fusion_failures += fusion.failed;
        r.imu_rmse += rep.of(Method::kImu).rmse() / kTrials;
        r.fusion_rmse += fusion.rmse() / kTrials;
      }
      std::printf("    %-10s %4.0f deg/s: fusion best %2d/%d, ground failed %2d/%d, imu %.4f, fusion %.4f rad\n",
                  std::string(to_string(p)).c_str(), speed, r.fusion_wins, kTrials, r.ground_failures, kTrials,
                  r.imu_rmse, r.fusion_rmse);
      std::fflush(stdout);
      out.push_back(r);
    }
  }
  return out;
}

void ordering_and_failures() {
  const auto start = Clock::now();
  const auto results = run_sequences();
  const double elapsed = seconds_since(start);

  int worst_wins = kTrials;
  for (const auto& r : results) worst_wins = std::min(worst_wins, r.fusion_wins);
  report(4, "method ordering", worst_wins >= kRequiredWins,
         fmt("fusion at least as good as every single method in >= %d/%d trials on all 9 sequences, %.0f s",
             worst_wins, kTrials, elapsed));

  double worst_ratio = 1e300;
  for (const auto& r : results) {
    if (r.pattern == Pattern::kMixed) worst_ratio = std::min(worst_ratio, r.imu_rmse / r.fusion_rmse);
  }
  report(5, "mixed drift gap", worst_ratio >= kDriftRatio,
         fmt("IMU/fusion RMSE ratio on the 960 s mixed sequences >= %.1fx (need %.0fx)", worst_ratio, kDriftRatio));

  int worst_ground = kTrials, fusion_failed = 0;
  for (const auto& r : results) {
    fusion_failed += r.fusion_failures;
    if (r.speed == 15.0) worst_ground = std::min(worst_ground, r.ground_failures);
  }
  report(6, "ground failure at 15 deg/s", worst_ground >= kRequiredGroundFailures && fusion_failed == 0,
         fmt("ground-only failed in >= %d/%d trials of every 15 deg/s sequence, fusion failed %d times", worst_ground,
             kTrials, fusion_failed));
}

void throughput() {
  RunConfig c;
  c.scenario.trajectory.pattern = Pattern::kMixed;
  c.scenario.trajectory.angular_speed = 9.0;
  c.scenario.trajectory.duration = 30.0;
  const GeneratedSource source(c);
  std::vector<BinaryMask> masks(source.size());
  for (std::size_t k = 0; k < masks.size(); ++k) source.mask_into(k, masks[k]);
  Pipeline pipeline(source, MethodSet{});
  const auto start = Clock::now();
  for (std::size_t k = 0; k < masks.size(); ++k) pipeline.step(source.sample(k), masks[k]);
  const double fps = static_cast<double>(masks.size()) / seconds_since(start);
  report(7, "throughput", fps >= kRequiredFps,
         fmt("%.0f frames/s at 640x480 over %zu frames on %d thread(s)", fps, masks.size(), kernels::max_threads()));
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

void determinism() {
  const fs::path dir = fs::temp_directory_path() / ("skyfuse_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream cfg(dir / "cfg.json");
    cfg << R"({"seed": 99, "trajectory": {"pattern": "mixed", "angular_speed_deg": 15, "duration": 20}})";
  }
  bool same = true;
  std::size_t bytes = 0;
  for (std::uint64_t filter_seed : {1u, 2u}) {
    for (const char* run : {"a", "b"}) {
      cmd_simulate(dir / "cfg.json", std::nullopt, dir / (std::string("s") + run));
      cmd_fuse(dir / (std::string("s") + run), MethodSet{}, filter_seed, dir / (std::string(run) + ".csv"));
    }
    const std::string a = slurp(dir / "a.csv");
    same &= !a.empty() && a == slurp(dir / "b.csv");
    bytes += a.size();
  }
  fs::remove_all(dir);
  report(8, "determinism", same, fmt("two simulate + fuse runs per filter seed, %zu report bytes identical", bytes));
}

}  // namespace

int main() {
  geometry_suite();
  round_trip();
  convergence();
  throughput();
  determinism();
  ordering_and_failures();
  std::printf("%d criteria failed\n", failures);
  return failures;
}
