#include "ballchain/analysis.hpp"
#include "ballchain/errors.hpp"
#include "ballchain/estimator.hpp"
#include "ballchain/presets.hpp"

#include <doctest.h>

#include <cmath>

using namespace ballchain;

namespace {

BendConfig deg(double psi, double phi) { return bend_from_angles(deg_to_rad(psi), deg_to_rad(phi)); }

GainVector ones(const SceneSpec& s) { return GainVector::Ones(static_cast<Eigen::Index>(s.channel_count())); }

GainTable replay_table(std::size_t channels, double value = 1.0) {
  std::vector<GainEntry> entries;
  for (const BendConfig& c : replay_configs()) entries.push_back({c, GainVector::Constant(static_cast<Eigen::Index>(channels), value)});
  return GainTable(entries);
}

}  // namespace

TEST_SUITE("estimator") {

TEST_CASE("assign_manifold") {
  GainTable single({{deg(30, 0), GainVector::Ones(12)}});
  CHECK(assign_manifold(single, deg(170, -120)) == 0);

  const GainTable table = replay_table(12);
  for (std::size_t k = 0; k < table.size(); ++k) {
    CHECK(assign_manifold(table, table.entries()[k].center) == k);
  }

  // Equidistant query: lower index wins.
  GainTable two({{BendConfig(0.0, 1.0), GainVector::Ones(3)}, {BendConfig(0.0, -1.0), GainVector::Ones(3)}});
  CHECK(assign_manifold(two, BendConfig(0.5, 0.0)) == 0);
  GainTable swapped({{BendConfig(0.0, -1.0), GainVector::Ones(3)}, {BendConfig(0.0, 1.0), GainVector::Ones(3)}});
  CHECK(assign_manifold(swapped, BendConfig(0.5, 0.0)) == 0);

  CHECK_THROWS_AS(assign_manifold(GainTable(), BendConfig()), ConfigError);
}

TEST_CASE("gain table validation") {
  CHECK_THROWS_AS(GainTable({{deg(0, 0), GainVector::Ones(3)}, {deg(30, 0), GainVector::Ones(6)}}), ConfigError);
  CHECK_THROWS_AS(GainTable({{deg(0, 0), GainVector::Constant(3, -1.0)}}), ConfigError);
  CHECK_THROWS_AS(GainTable({{deg(0, 0), GainVector::Constant(3, NAN)}}), ConfigError);
  CHECK_THROWS_AS(GainTable({{deg(30, 0), GainVector::Ones(3)}, {deg(-30, 180), GainVector::Ones(3)}}), ConfigError);
}

TEST_CASE("fixed point") {
  for (const SceneSpec& scene : {config_one_scene(), config_two_scene()}) {
    for (const BendConfig& g : {deg(60, 30), deg(150, -90), deg(10, 170)}) {
      const EstimateResult r = solve_weighted(scene, forward_measurement(scene, g), ones(scene), g);
      CHECK(r.residual_norm < 1e-12);
      CHECK((r.gamma.vector() - g.vector()).norm() < 1e-9);
      CHECK(r.solver_status == SolverStatus::converged);
    }
  }
}

TEST_CASE("single solve from the straight chain") {
  const SceneSpec scene = config_one_scene();
  const BendConfig g = deg(90, 45);
  const EstimateResult r = solve_weighted(scene, forward_measurement(scene, g), ones(scene), BendConfig());
  CHECK((r.gamma.vector() - g.vector()).norm() < 1e-6);
  CHECK(r.gamma.is_canonical());
}

TEST_CASE("noise-free round trip with multi-start") {
  for (const SceneSpec& scene : {config_one_scene(), config_two_scene()}) {
    for (int i = 0; i < 12; i += 2) {
      for (int k = 1; k <= 6; k += 2) {
        const BendConfig g = deg(30.0 * k, -180.0 + 30.0 * i);
        const EstimateResult r = estimate_shape(scene, forward_measurement(scene, g), GainTable(), 0);
        CAPTURE(i);
        CAPTURE(k);
        CHECK((r.gamma.vector() - g.vector()).norm() < 1e-6);
        CHECK(r.iterations_outer == 0);
      }
    }
  }
}

TEST_CASE("N = 0 equals an identity-gain multi-start solve") {
  const SceneSpec scene = config_two_scene();
  const MeasurementVector q = forward_measurement(scene, deg(75, 120));
  const EstimateResult a = estimate_shape(scene, q, GainTable(), 0);
  const EstimateResult b = solve_multistart(scene, q, ones(scene));
  CHECK(a.gamma == b.gamma);
  CHECK(a.residual_norm == b.residual_norm);
}

TEST_CASE("uniform gains do not move the minimiser") {
  const SceneSpec scene = config_one_scene();
  const BendConfig truth = deg(100, -60);
  MeasurementVector q = forward_measurement(scene, truth);
  // perturb deterministically so the minimum has a nonzero residual
  for (Eigen::Index c = 0; c < q.size(); ++c) q[c] += 2e-8 * std::sin(1.7 * static_cast<double>(c) + 0.3);

  const EstimateResult base = estimate_shape(scene, q, GainTable(), 0);
  for (double c : {1e-3, 1.0, 1e6}) {
    const EstimateResult scaled = estimate_shape(scene, q, replay_table(scene.channel_count(), c), 2);
    CHECK((scaled.gamma.vector() - base.gamma.vector()).norm() < 1e-9);
    CHECK(scaled.iterations_outer == 2);
    const EstimateResult single = solve_weighted(scene, q, ones(scene) * c, base.gamma);
    CHECK((single.gamma.vector() - base.gamma.vector()).norm() < 1e-9);
  }
}

TEST_CASE("estimate errors") {
  const SceneSpec scene = config_one_scene();
  const MeasurementVector q = forward_measurement(scene, deg(40, 0));
  CHECK_THROWS_AS(estimate_shape(scene, q, GainTable(), 2), ConfigError);
  CHECK_THROWS_AS(estimate_shape(scene, q, GainTable(), -1), ConfigError);
  CHECK_THROWS_AS(estimate_shape(scene, q, replay_table(6), 2), ConfigError);
  CHECK_THROWS_AS(solve_weighted(scene, q.head(6), GainVector::Ones(6), BendConfig()), ConfigError);
  MeasurementVector bad = q;
  bad[0] = NAN;
  CHECK_THROWS_AS(solve_weighted(scene, bad, ones(scene), BendConfig()), ModelError);
}

TEST_CASE("all-zero gains are reported as degenerate") {
  const SceneSpec scene = config_one_scene();
  const MeasurementVector q = forward_measurement(scene, deg(40, 0));
  const EstimateResult r = solve_weighted(scene, q, GainVector::Zero(12), deg(30, 0));
  CHECK(r.solver_status == SolverStatus::degenerate_jacobian);
}

TEST_CASE("determinism") {
  const SceneSpec scene = config_two_scene();
  MeasurementVector q = forward_measurement(scene, deg(120, 45));
  q *= 1.01;
  const EstimateResult a = estimate_shape(scene, q, replay_table(12), 2);
  const EstimateResult b = estimate_shape(scene, q, replay_table(12), 2);
  CHECK(a.gamma == b.gamma);
  CHECK(a.residual_norm == b.residual_norm);
  CHECK(a.solver_iterations == b.solver_iterations);
}

TEST_CASE("calibration examples") {
  SceneSpec scene = config_one_scene();
  scene.sensors.resize(1);
  const BendConfig c = deg(30, 0);
  const MeasurementVector q = forward_measurement(scene, c);

  SUBCASE("equal max errors give a scaled identity") {
    const double e = 3e-7;
    std::vector<MeasurementVector> s{q + MeasurementVector::Constant(3, e), q - MeasurementVector::Constant(3, e / 2)};
    const GainTable t = calibrate_gains(scene, {c}, {s});
    for (Eigen::Index k = 0; k < 3; ++k) CHECK(t.entries()[0].gain[k] == doctest::Approx(1.0 / e).epsilon(1e-9));
  }
  SUBCASE("reciprocal of the per-channel maximum") {
    MeasurementVector a = q, b = q;
    a[0] += 1e-6;
    a[1] -= 2e-6;
    a[2] += 5e-7;
    b[0] -= 5e-7;
    b[1] += 1e-6;
    b[2] -= 4e-7;
    const GainTable t = calibrate_gains(scene, {c}, {{a, b}});
    const GainVector& g = t.entries()[0].gain;
    CHECK(g[0] == doctest::Approx(1e6).epsilon(1e-9));
    CHECK(g[1] == doctest::Approx(5e5).epsilon(1e-9));
    CHECK(g[2] == doctest::Approx(2e6).epsilon(1e-9));
  }
  SUBCASE("perfect samples hit the clamp") {
    const GainTable t = calibrate_gains(scene, {c}, {{q, q}});
    CHECK((t.entries()[0].gain.array() == kGainClamp).all());
  }
  SUBCASE("empty group is an error") {
    CHECK_THROWS_AS(calibrate_gains(scene, {c}, {{}}), ConfigError);
    CHECK_THROWS_AS(calibrate_gains(scene, {c, deg(60, 0)}, {{q}}), ConfigError);
  }
}

TEST_CASE("multi-start seeds") {
  const auto& seeds = multistart_seeds();
  REQUIRE(seeds.size() == 13);
  CHECK(seeds[0] == BendConfig());
  for (std::size_t k = 1; k < seeds.size(); ++k) CHECK(seeds[k].is_canonical());
}

}  // TEST_SUITE
