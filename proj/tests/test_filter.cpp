#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "skyfuse/error.hpp"
#include "skyfuse/filter.hpp"

using namespace skyfuse;

namespace {

OrientationObservation make_obs(ObservationSource source, RollPitch value, double variance, double t = 0.0) {
  OrientationObservation o;
  o.source = source;
  o.value = value;
  o.variance = variance;
  o.timestamp = t;
  return o;
}

OrientationObservation imu_at(RollPitch value, double t = 0.0) {
  return make_obs(ObservationSource::kImu, value, 1.0, t);
}

Particle particle_at(RollPitch anchor, CellLevel level, double weight, double birth = 0.0) {
  Particle p;
  p.anchor = anchor;
  p.level = level;
  p.weight = weight;
  p.birth_time = birth;
  return p;
}

double weight_sum(const ManifoldParticleFilter& f) {
  double s = 0.0;
  for (const auto& p : f.particles()) s += p.weight;
  return s;
}

void check_weights(const ManifoldParticleFilter& f) {
  for (const auto& p : f.particles()) {
    REQUIRE(std::isfinite(p.weight));
    REQUIRE(p.weight >= 0.0);
  }
  CHECK(weight_sum(f) == doctest::Approx(1.0).epsilon(1e-9));
}

}  // namespace

TEST_CASE("grid cells nest and clamp") {
  SphericalGrid g;
  CHECK_NOTHROW(g.validate());
  CHECK(g.cell_count_roll(CellLevel::kCoarse) == 18);
  CHECK(g.cell_count_roll(CellLevel::kMedium) == 90);
  CHECK(g.cell_count_roll(CellLevel::kFine) == 450);
  const RollPitch c = g.center({0, 17}, CellLevel::kCoarse);
  CHECK(c.roll == doctest::Approx(deg2rad(-42.5)));
  CHECK(c.pitch == doctest::Approx(deg2rad(42.5)));
  CHECK(g.cell_of({1.0, -1.0}, CellLevel::kFine) == CellIndex{449, 0});

  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-kMechanicalLimit, kMechanicalLimit);
  for (int i = 0; i < 1000; ++i) {
    const RollPitch p{u(rng), u(rng)};
    // The fine cell of any point lies inside its medium cell, which lies inside its coarse cell.
    const RollPitch fine = g.center(g.cell_of(p, CellLevel::kFine), CellLevel::kFine);
    CHECK(g.cell_of(fine, CellLevel::kMedium) == g.cell_of(p, CellLevel::kMedium));
    const RollPitch med = g.center(g.cell_of(p, CellLevel::kMedium), CellLevel::kMedium);
    CHECK(g.cell_of(med, CellLevel::kCoarse) == g.cell_of(p, CellLevel::kCoarse));
  }

  SphericalGrid bad;
  bad.cell_size = {deg2rad(5.0), deg2rad(2.0), deg2rad(0.2)};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = {};
  bad.roll_max = deg2rad(50.0);
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("filter config validation") {
  FilterConfig c;
  CHECK_NOTHROW(c.validate());
  c.n_particles = 9;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.n_children = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.epsilon = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = {};
  c.lifetime = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
}

TEST_CASE("initial propagation draws N coarse particles with uniform weights") {
  ManifoldParticleFilter f({}, {});
  f.propagate_from_imu(imu_at({0, 0}), 0.05, {0, 0});
  REQUIRE(f.particles().size() == 200);
  for (const auto& p : f.particles()) {
    CHECK(p.level == CellLevel::kCoarse);
    CHECK(p.weight == doctest::Approx(1.0 / 200));
    // sigma 0.5 deg around the origin: every particle lands in one of the
    // four coarse cells touching it.
    CHECK(std::abs(f.center(p).roll) == doctest::Approx(deg2rad(2.5)));
    CHECK(std::abs(f.center(p).pitch) == doctest::Approx(deg2rad(2.5)));
  }
}

TEST_CASE("initial propagation applies the rate prediction") {
  FilterConfig cfg;
  cfg.n_particles = 2000;
  ManifoldParticleFilter f({}, cfg);
  f.propagate_from_imu(imu_at({0, 0}), 1.0, {0.1, 0.0});
  double mean = 0.0;
  for (const auto& p : f.particles()) mean += p.anchor.roll;
  mean /= static_cast<double>(f.particles().size());
  const double bound = 3.0 * (cfg.imu_sigma + cfg.imu_bias_offset) / std::sqrt(double(cfg.n_particles));
  CHECK(std::abs(mean - 0.1) < bound);
}

TEST_CASE("propagation clamps at the grid edge") {
  ManifoldParticleFilter f({}, {});
  f.propagate_from_imu(imu_at({deg2rad(44.0), deg2rad(-44.0)}), 0.05, {0, 0});
  for (int i = 0; i < 20; ++i) f.propagate_from_imu(imu_at({0, 0}), 0.5, {1.0, -1.0});
  const auto& g = f.grid();
  for (const auto& p : f.particles()) {
    CHECK(p.cell.roll >= 0);
    CHECK(p.cell.roll < g.cell_count_roll(p.level));
    CHECK(p.cell.pitch >= 0);
    CHECK(p.cell.pitch < g.cell_count_pitch(p.level));
    CHECK(p.anchor.roll <= g.roll_max);
    CHECK(p.anchor.pitch >= g.pitch_min);
  }
}

TEST_CASE("propagation rejects non-IMU input") {
  ManifoldParticleFilter f({}, {});
  CHECK_THROWS_AS(f.propagate_from_imu(make_obs(ObservationSource::kSkyline, {}, 1.0), 0.1, {}), Error);
}

TEST_CASE("weight update kernel") {
  ManifoldParticleFilter f({}, {});
  const SphericalGrid g;
  const RollPitch c0 = g.center({9, 9}, CellLevel::kCoarse);
  // Pitch neighbours: the pitch term of the metric is unscaled.
  const RollPitch c1 = g.center({9, 10}, CellLevel::kCoarse);
  const RollPitch cm = g.center({9, 8}, CellLevel::kCoarse);
  f.set_particles({particle_at(c0, CellLevel::kCoarse, 1.0), particle_at(c1, CellLevel::kCoarse, 1.0),
                   particle_at(cm, CellLevel::kCoarse, 1.0)});

  SUBCASE("observation on a cell center") {
    const double sigma = deg2rad(5.0) / 3.0;
    CHECK(f.weight_update(make_obs(ObservationSource::kSkyline, c0, sigma * sigma)) ==
          WeightUpdateStatus::kUpdated);
    const auto ps = f.particles();
    // Neighbours sit 3 sigma away: the ratio is exp(-9/2).
    CHECK(ps[1].weight / ps[0].weight == doctest::Approx(std::exp(-4.5)).epsilon(1e-12));
    CHECK(ps[2].weight / ps[0].weight == doctest::Approx(std::exp(-4.5)).epsilon(1e-12));
    CHECK(ps[0].weight > ps[1].weight);
    check_weights(f);
  }
  SUBCASE("equidistant particles keep equal weights") {
    f.weight_update(make_obs(ObservationSource::kGroundPlane, c0, 1e-3));
    CHECK(f.particles()[1].weight == doctest::Approx(f.particles()[2].weight).epsilon(1e-14));
  }
  SUBCASE("an incompatible observation reinitializes") {
    const RollPitch far{deg2rad(-40.0), deg2rad(40.0)};
    CHECK(f.weight_update(make_obs(ObservationSource::kSkyline, far, 1e-8)) ==
          WeightUpdateStatus::kReinitialized);
    REQUIRE(f.particles().size() == 200);
    for (const auto& p : f.particles()) {
      CHECK(p.level == CellLevel::kMedium);
      CHECK(std::abs(p.anchor.roll - far.roll) < 1e-3);
    }
    check_weights(f);
  }
  CHECK_THROWS_AS(f.weight_update(imu_at({0, 0})), Error);
}

TEST_CASE("inverse-variance fusion") {
  const auto sky = [](RollPitch v, double var) { return make_obs(ObservationSource::kSkyline, v, var); };
  const auto gnd = [](RollPitch v, double var) { return make_obs(ObservationSource::kGroundPlane, v, var); };

  auto f = fuse_cv(sky({0.1, 0}, 0.04), gnd({0.1, 0}, 0.04));
  CHECK(f.mean.roll == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(f.mean.pitch == 0.0);
  CHECK(f.variance == doctest::Approx(0.02));

  f = fuse_cv(sky({0, 0}, 1.0), gnd({0.3, 0}, 1e12));
  CHECK(std::abs(f.mean.roll) < 1e-9);

  f = fuse_cv(sky({0, 0}, 1.0), gnd({0.3, 0}, 1.0 / 3.0));
  CHECK(f.mean.roll == doctest::Approx(0.225).epsilon(1e-14));
  CHECK(f.variance == doctest::Approx(0.25).epsilon(1e-14));

  // Scaling both variances by a common factor moves only the variance.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-0.5, 0.5), v(0.01, 2.0);
  for (int i = 0; i < 100; ++i) {
    const auto a = sky({u(rng), u(rng)}, v(rng));
    const auto b = gnd({u(rng), u(rng)}, v(rng));
    const double k = v(rng) * 10.0;
    auto as = a, bs = b;
    as.variance *= k;
    bs.variance *= k;
    const auto base = fuse_cv(a, b);
    const auto scaled = fuse_cv(as, bs);
    CHECK(scaled.mean.roll == doctest::Approx(base.mean.roll).epsilon(1e-12));
    CHECK(scaled.mean.pitch == doctest::Approx(base.mean.pitch).epsilon(1e-12));
    CHECK(scaled.variance == doctest::Approx(base.variance * k).epsilon(1e-12));
  }
  CHECK_THROWS_AS(fuse_cv(sky({}, 0.0), gnd({}, 1.0)), Error);
}

TEST_CASE("refinement spawns children near the target") {
  FilterConfig cfg;
  cfg.n_children = 4;
  ManifoldParticleFilter f({}, cfg);
  const RollPitch target{deg2rad(2.5), deg2rad(2.5)};
  const auto sky = make_obs(ObservationSource::kSkyline, target, deg2rad(0.5) * deg2rad(0.5));
  const auto gnd = make_obs(ObservationSource::kGroundPlane, target, deg2rad(1.0) * deg2rad(1.0));

  SUBCASE("both sources: fine children") {
    f.set_particles({particle_at(target, CellLevel::kCoarse, 1.0)});
    const OrientationObservation both[] = {sky, gnd};
    CHECK(f.refine(both, 3.0) == 4);
    REQUIRE(f.particles().size() == 5);
    const double sd = std::sqrt(fuse_cv(sky, gnd).variance);
    for (std::size_t i = 1; i < 5; ++i) {
      const auto& c = f.particles()[i];
      CHECK(c.level == CellLevel::kFine);
      CHECK(c.birth_time == 3.0);
      CHECK(std::abs(f.center(c).roll - target.roll) < 5.0 * sd);
    }
    check_weights(f);
  }
  SUBCASE("one source: medium children") {
    f.set_particles({particle_at(target, CellLevel::kCoarse, 1.0)});
    const OrientationObservation one[] = {gnd};
    CHECK(f.refine(one, 0.0) == 4);
    for (std::size_t i = 1; i < 5; ++i) CHECK(f.particles()[i].level == CellLevel::kMedium);
  }
  SUBCASE("no parent within epsilon") {
    f.set_particles({particle_at({deg2rad(-30.0), 0.0}, CellLevel::kCoarse, 1.0)});
    const OrientationObservation one[] = {sky};
    CHECK(f.refine(one, 0.0) == 0);
    CHECK(f.particles().size() == 1);
  }
}

TEST_CASE("child weight equals the parent weight at zero distance") {
  // Grid whose medium cells are centered on the target.
  SphericalGrid g;
  g.roll_min = g.pitch_min = deg2rad(-40.0);
  g.roll_max = g.pitch_max = deg2rad(40.0);
  g.cell_size = {deg2rad(4.0), deg2rad(1.0), deg2rad(0.25)};
  FilterConfig cfg;
  cfg.n_children = 3;
  ManifoldParticleFilter f(g, cfg);
  const RollPitch target = g.center(g.cell_of({0.1, -0.05}, CellLevel::kMedium), CellLevel::kMedium);
  f.set_particles({particle_at(target, CellLevel::kCoarse, 0.25),
                   particle_at({deg2rad(-35.0), deg2rad(35.0)}, CellLevel::kCoarse, 0.75)});
  const OrientationObservation one[] = {make_obs(ObservationSource::kSkyline, target, 1e-14)};
  REQUIRE(f.refine(one, 0.0) == 3);
  const auto ps = f.particles();
  // Before normalization children carry 0.25 each; total mass 1 + 3 * 0.25.
  for (std::size_t i = 2; i < 5; ++i) CHECK(ps[i].weight == doctest::Approx(0.25 / 1.75).epsilon(1e-12));
}

TEST_CASE("lifetime maintenance demotes aged particles") {
  FilterConfig cfg;
  cfg.lifetime = 1.0;
  ManifoldParticleFilter f({}, cfg);
  const RollPitch pos{deg2rad(7.3), deg2rad(-2.1)};
  f.set_particles({particle_at(pos, CellLevel::kFine, 1.0, 0.0), particle_at(pos, CellLevel::kFine, 1.0, 1.5),
                   particle_at(pos, CellLevel::kMedium, 1.0, 0.0)});
  const auto& g = f.grid();

  f.lifetime_maintenance(2.0);
  auto ps = f.particles();
  CHECK(ps[0].level == CellLevel::kMedium);
  CHECK(ps[0].cell == g.cell_of(pos, CellLevel::kMedium));
  CHECK(ps[0].birth_time == 2.0);
  CHECK(ps[1].level == CellLevel::kFine);  // fresh: untouched
  CHECK(ps[1].birth_time == 1.5);
  CHECK(ps[2].level == CellLevel::kCoarse);
  CHECK(ps[2].cell == g.cell_of(pos, CellLevel::kCoarse));

  // Medium aged 2 lifetimes + 1 across two passes reaches coarse.
  f.set_particles({particle_at(pos, CellLevel::kMedium, 1.0, 0.0)});
  f.lifetime_maintenance(1.5);
  f.lifetime_maintenance(3.0);
  CHECK(f.particles()[0].level == CellLevel::kCoarse);

  // Demotion moves the position by at most half a coarse cell per axis.
  const RollPitch fine_c = g.center(g.cell_of(pos, CellLevel::kFine), CellLevel::kFine);
  const RollPitch coarse_c = f.center(f.particles()[0]);
  CHECK(std::abs(fine_c.roll - coarse_c.roll) <= g.size(CellLevel::kCoarse) / 2);
  CHECK(std::abs(fine_c.pitch - coarse_c.pitch) <= g.size(CellLevel::kCoarse) / 2);

  // Coarse particles are flagged after removal_factor lifetimes.
  f.lifetime_maintenance(3.0 + 3.0 * cfg.lifetime + 0.1);
  CHECK(f.particles()[0].expired);
  check_weights(f);
}

TEST_CASE("resampling") {
  FilterConfig cfg;
  cfg.n_particles = 10;
  ManifoldParticleFilter f({}, cfg);
  const SphericalGrid& g = f.grid();
  std::vector<Particle> ps;
  for (int i = 0; i < 10; ++i) ps.push_back(particle_at(g.center({i, 3}, CellLevel::kCoarse), CellLevel::kCoarse, 1.0));

  SUBCASE("high ESS is a no-op") {
    f.set_particles(ps);
    CHECK_FALSE(f.resample());
    CHECK(f.particles().size() == 10);
  }
  SUBCASE("dominant particle takes at least N-1 slots") {
    const double eps_w = 1e-4;
    for (int i = 1; i < 10; ++i) ps[static_cast<std::size_t>(i)].weight = eps_w;
    ps[0].weight = 1.0 - 9 * eps_w;
    f.set_particles(ps);
    REQUIRE(f.resample());
    REQUIRE(f.particles().size() == 10);
    int count = 0;
    for (const auto& p : f.particles()) {
      count += p.anchor == ps[0].anchor;
      CHECK(p.weight == doctest::Approx(0.1));
    }
    CHECK(count >= 9);
  }
  SUBCASE("an oversized set with equal weights keeps its cells") {
    std::vector<Particle> doubled;
    for (const auto& p : ps) doubled.insert(doubled.end(), {p, p});
    f.set_particles(doubled);
    REQUIRE(f.resample());
    REQUIRE(f.particles().size() == 10);
    // Twenty equal weights into ten systematic slots: one slot per adjacent pair.
    std::vector<int> hits(10, 0);
    for (const auto& p : f.particles()) ++hits[static_cast<std::size_t>(p.cell.roll)];
    for (int h : hits) CHECK(h == 1);
  }
  SUBCASE("expired particles are dropped") {
    for (int i = 0; i < 5; ++i) ps[static_cast<std::size_t>(i)].expired = true;
    ps[9].weight = 100.0;  // force a resample
    f.set_particles(ps);
    REQUIRE(f.resample());
    for (const auto& p : f.particles()) CHECK_FALSE(p.expired);
  }
}

TEST_CASE("estimate is the weighted mean of cell centers") {
  SphericalGrid g;
  g.roll_min = g.pitch_min = deg2rad(-40.0);
  g.roll_max = g.pitch_max = deg2rad(40.0);
  g.cell_size = {deg2rad(4.0), deg2rad(1.0), deg2rad(0.25)};
  ManifoldParticleFilter f(g, {});
  CHECK_THROWS_AS(f.estimate(0.0), Error);

  const RollPitch c = g.center(g.cell_of({0.1, -0.05}, CellLevel::kFine), CellLevel::kFine);
  f.set_particles({particle_at(c, CellLevel::kFine, 1.0)});
  auto e = f.estimate(1.0);
  CHECK(e.value.roll == c.roll);
  CHECK(e.value.pitch == c.pitch);
  CHECK(e.effective_sample_size == doctest::Approx(1.0));

  const RollPitch a = g.center(g.cell_of({0.0, 0.0}, CellLevel::kFine), CellLevel::kFine);
  const RollPitch b = g.center(g.cell_of({0.2, 0.0}, CellLevel::kFine), CellLevel::kFine);
  f.set_particles({particle_at(a, CellLevel::kFine, 1.0), particle_at(b, CellLevel::kFine, 1.0)});
  e = f.estimate(1.0);
  CHECK(e.value.roll == doctest::Approx(0.5 * (a.roll + b.roll)).epsilon(1e-14));
  CHECK(e.effective_sample_size == doctest::Approx(2.0));
}

namespace {

struct RunTrace {
  std::vector<RollPitch> estimates;
  std::size_t max_size = 0;
  bool weights_ok = true;
};

// One filter step as the pipeline runs it, with noiseless vision at `truth`.
RunTrace run_stationary(RollPitch truth, RollPitch imu, int steps, std::uint64_t seed) {
  FilterConfig cfg;
  cfg.seed = seed;
  ManifoldParticleFilter f({}, cfg);
  const auto sky_var = deg2rad(0.5) * deg2rad(0.5);
  const auto gnd_var = deg2rad(1.0) * deg2rad(1.0);
  RunTrace trace;
  const std::size_t cap = static_cast<std::size_t>(cfg.n_particles * (1 + cfg.n_children));
  for (int k = 0; k < steps; ++k) {
    const double t = 0.05 * k;
    f.propagate_from_imu(imu_at(imu, t), 0.05, {0, 0});
    const OrientationObservation obs[] = {make_obs(ObservationSource::kSkyline, truth, sky_var, t),
                                          make_obs(ObservationSource::kGroundPlane, truth, gnd_var, t)};
    for (const auto& o : obs) f.weight_update(o);
    f.refine(obs, t);
    f.lifetime_maintenance(t);
    trace.estimates.push_back(f.estimate(t).value);
    trace.max_size = std::max(trace.max_size, f.particles().size());
    trace.weights_ok &= std::abs(weight_sum(f) - 1.0) < 1e-9;
    f.resample();
    trace.weights_ok &= std::abs(weight_sum(f) - 1.0) < 1e-9;
    if (f.particles().size() > cfg.n_particles) trace.weights_ok = false;
    if (trace.max_size > cap) trace.weights_ok = false;
  }
  return trace;
}

}  // namespace

TEST_CASE("stationary truth converges within half a fine cell") {
  const RollPitch truth{deg2rad(5.0), deg2rad(-3.0)};
  const auto trace = run_stationary(truth, {deg2rad(4.0), deg2rad(-2.0)}, 1000, 1);
  const RollPitch last = trace.estimates.back();
  CHECK(std::abs(last.roll - truth.roll) <= deg2rad(0.2) / 2);
  CHECK(std::abs(last.pitch - truth.pitch) <= deg2rad(0.2) / 2);
  CHECK(trace.weights_ok);
  CHECK(trace.max_size <= 200u * 6u);
}

TEST_CASE("repeated observations bound the error by a fine cell") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(deg2rad(-30.0), deg2rad(30.0));
    const RollPitch truth{u(rng), u(rng)};
    const auto trace = run_stationary(truth, truth, 60, seed);
    for (std::size_t k = 40; k < trace.estimates.size(); ++k) {
      CHECK(std::abs(trace.estimates[k].roll - truth.roll) <= deg2rad(0.2));
      CHECK(std::abs(trace.estimates[k].pitch - truth.pitch) <= deg2rad(0.2));
    }
    CHECK(trace.weights_ok);
  }
}

TEST_CASE("identical seeds give identical estimates") {
  const RollPitch truth{0.1, -0.2};
  const auto a = run_stationary(truth, {0.12, -0.18}, 100, 9);
  const auto b = run_stationary(truth, {0.12, -0.18}, 100, 9);
  REQUIRE(a.estimates.size() == b.estimates.size());
  bool same = true;
  for (std::size_t i = 0; i < a.estimates.size(); ++i) same &= a.estimates[i] == b.estimates[i];
  CHECK(same);
}
