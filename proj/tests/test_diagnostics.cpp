#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmcflab/diagnostics.hpp"
#include "rmcflab/shrinkers.hpp"

using namespace rmcf;

namespace {

GeometrySnapshot circle(double r, int n, Eigen::Vector2d c = Eigen::Vector2d::Zero()) {
  GeometrySnapshot g;
  g.vertices.resize(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    g.vertices.col(k) = c + r * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  return differential_quantities(std::move(g));
}

GeometrySnapshot wavy(double r0, double eps, int waves, int n) {
  GeometrySnapshot g;
  g.vertices.resize(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    const double r = r0 + eps * std::cos(waves * a);
    g.vertices.col(k) = r * Eigen::Vector2d(std::cos(a), std::sin(a));
  }
  return differential_quantities(resample(g, n));
}

FlowTrajectory circle_run(double r0, int n, FlowMode mode, double t_max = 10.0) {
  FlowConfig cfg;
  cfg.mode = mode;
  cfg.initial = circle(r0, n);
  cfg.initial.time = mode == FlowMode::MCF ? -1.0 : 0.0;
  cfg.t_max = mode == FlowMode::MCF ? 0.0 : t_max;
  return run(cfg);
}

}  // namespace

TEST_CASE("ztilde closed forms on the unit circle") {
  auto g = circle(1.0, 512);
  CHECK(ztilde(g, 0.25, 7, 7) == 0.0);
  // antipodal pair: 2 r^2 Htilde - 2 r delta
  CHECK(ztilde(g, 0.25, 0, 256) == doctest::Approx(0.5).epsilon(1e-8));
  // boundary amplitude delta = r Htilde kills every pair
  for (int j : {1, 37, 128, 400})
    CHECK(std::abs(ztilde(g, 0.5, 0, j)) < 1e-8);
}

TEST_CASE("noncollapse_delta on circles") {
  auto rep = noncollapse_delta(circle(1.0, 512));
  CHECK(rep.delta_in == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(std::isinf(rep.delta_out));
  CHECK(rep.min_ztilde >= -1e-12);
  CHECK(rep.min_ztilde < 1e-8);
  CHECK(rep.argmin_i >= 0);
  CHECK(rep.argmin_j >= 0);

  CHECK(noncollapse_delta(circle(1.2, 512)).delta_in ==
        doctest::Approx(0.28).epsilon(1e-8));

  // concave side: a circle larger than the shrinker expands, nothing
  // obstructs exterior tangent balls, and the interior side carries the
  // two-sided constraint instead
  auto big = noncollapse_delta(circle(1.6, 512));
  CHECK(std::isinf(big.delta_in));
  CHECK(big.delta_out == doctest::Approx(1.6 * (0.8 - 1.0 / 1.6)).epsilon(1e-8));

  CHECK_THROWS_AS(noncollapse_delta(round_shrinker(1, 512)), MixedSign);
}

TEST_CASE("delta_in grows along the collapsing circle family") {
  auto traj = circle_run(1.0, 384, FlowMode::RMCF, 0.4);
  REQUIRE(traj.termination == Termination::ReachedTMax);
  double prev = 0.0;
  for (const auto& s : traj.snapshots) {
    const double d = noncollapse_delta(s).delta_in;
    CHECK(d == doctest::Approx(std::exp(s.time) / 2.0).epsilon(1e-2));
    CHECK(d >= prev * (1.0 - 1e-3));
    prev = d;
  }
}

TEST_CASE("sign preservation along circle runs") {
  auto in = sign_preservation(circle_run(1.0, 192, FlowMode::RMCF));
  CHECK(in.initial_sign == 1);
  CHECK(in.pass);
  CHECK(in.worst_margin > 0);

  auto out = sign_preservation(circle_run(1.6, 192, FlowMode::RMCF, 1.0));
  CHECK(out.initial_sign == -1);
  CHECK(out.pass);

  FlowConfig cfg;
  cfg.initial = round_shrinker(1, 192);
  cfg.t_max = 0.05;
  auto stat = sign_preservation(run(cfg));
  CHECK(stat.initial_sign == 0);
  CHECK(stat.pass);
}

TEST_CASE("avoidance of concentric circles under MCF") {
  auto inner = circle_run(1.0, 512, FlowMode::MCF);
  auto outer = circle_run(2.0, 512, FlowMode::MCF);
  auto rep = avoidance_check(inner, outer);
  CHECK(rep.initial_distance == doctest::Approx(1.0).epsilon(1e-4));
  CHECK(rep.pass);
  int compared = 0;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    CHECK(rep.distance[k] >= rep.initial_distance - 1e-3);
    const double u = rep.times[k] + 1.0;  // time since tau = -1
    const double r2in = 1.0 - 2.0 * u;
    if (r2in < 0.09) continue;  // closed form too steep near the collapse
    const double expect = std::sqrt(4.0 - 2.0 * u) - std::sqrt(r2in);
    CHECK(rep.distance[k] == doctest::Approx(expect).epsilon(1e-3));
    ++compared;
  }
  CHECK(compared >= 10);

  CHECK_THROWS_AS(avoidance_check(inner, circle_run(1.0, 192, FlowMode::RMCF)),
                  Error);

  FlowConfig cfg;
  cfg.mode = FlowMode::MCF;
  cfg.initial = circle(1.0, 128, {0.5, 0.0});
  cfg.initial.time = -1.0;
  cfg.t_max = 0.0;
  auto overlapping = run(cfg);
  CHECK_THROWS_AS(avoidance_check(inner, overlapping), NotDisjoint);
}

TEST_CASE("circles saturate the pinching bound") {
  for (double r : {1.0, 1.2, 1.35}) {
    auto g = circle(r, 384);
    CHECK(pinching_check(g, noncollapse_delta(g)) ==
          doctest::Approx(1.0).epsilon(1e-8));
  }
}

TEST_CASE("evolution identities close on the collapsing circle") {
  auto rep = verify_evolution_identities(circle(1.0, 128), {128}, {5e-5});
  CHECK(rep.errors.size() == 1);
  CHECK(rep.errors[0].max() < 1e-8);
  CHECK_FALSE(rep.has_spatial_order);

  // stationary shrinker: both sides vanish
  auto stat = verify_evolution_identities(round_shrinker(1, 512), {512}, {1e-4});
  CHECK(stat.errors[0].max() < 1e-3);
}

TEST_CASE("identity defects converge at second order in space") {
  auto g = wavy(1.0, 0.05, 3, 1536);
  auto rep = verify_evolution_identities(g, {192, 384, 768}, {2e-5, 2e-5, 2e-5});
  REQUIRE(rep.has_spatial_order);
  CHECK(rep.spatial_order.metric > 1.8);
  CHECK(rep.spatial_order.det_g > 1.8);
  CHECK(rep.spatial_order.normal > 1.8);
  CHECK(rep.spatial_order.mean_curvature > 1.8);
  CHECK(rep.spatial_order.weight > 1.8);
  CHECK(rep.spatial_order.rescaled > 1.8);
}

TEST_CASE("identity defects converge in time") {
  auto g = wavy(1.0, 0.05, 3, 1536);
  auto rep = verify_evolution_identities(g, {192, 192, 192}, {6e-4, 3e-4, 1.5e-4});
  REQUIRE(rep.has_temporal_order);
  CHECK(rep.temporal_order.metric > 0.9);
  CHECK(rep.temporal_order.det_g > 0.9);
  CHECK(rep.temporal_order.normal > 0.9);
  CHECK(rep.temporal_order.mean_curvature > 0.9);
  CHECK(rep.temporal_order.weight > 0.9);
  CHECK(rep.temporal_order.rescaled > 0.9);
}

TEST_CASE("identity probe over trajectories flags remesh contamination") {
  auto traj = circle_run(1.0, 256, FlowMode::RMCF, 0.3);
  auto rep = verify_evolution_identities(traj, 0.1, {256}, {1e-4});
  CHECK(rep.errors[0].max() < 1e-6);

  FlowTrajectory remeshy;
  remeshy.snapshots.push_back(circle(1.0, 128));
  remeshy.snapshots.push_back(circle(0.9, 256));
  remeshy.snapshots.back().time = 0.1;
  CHECK_THROWS_AS(verify_evolution_identities(remeshy, 0.05, {128}, {1e-4}),
                  ProbeContaminated);
}

TEST_CASE("singularity detection on collapsing circles") {
  auto mcf = detect_and_classify(circle_run(1.0, 256, FlowMode::MCF));
  CHECK(mcf.singular_time == doctest::Approx(-0.5).epsilon(5e-3));
  CHECK(mcf.tangent_type == TangentType::Round);
  CHECK(mcf.collapse_side == CollapseSide::Inside);
  CHECK(mcf.decay_exponent == doctest::Approx(0.5).epsilon(0.04));
  CHECK(mcf.decay_exponent_ci < 0.05);
  CHECK(mcf.singular_point.norm() < 2e-3);
  CHECK(mcf.fit_residual < 0.02);
  CHECK(mcf.normal_agreement > 0.9);

  auto rmcf = detect_and_classify(circle_run(1.0, 256, FlowMode::RMCF));
  CHECK(rmcf.singular_time == doctest::Approx(std::log(2.0)).epsilon(5e-3));
  CHECK(rmcf.tangent_type == TangentType::Round);
  CHECK(rmcf.collapse_side == CollapseSide::Inside);

  CHECK_THROWS_AS(detect_and_classify(circle_run(1.6, 128, FlowMode::RMCF, 1.0)),
                  Error);
}

TEST_CASE("nestedness of monotone circle families") {
  auto in = circle_run(1.0, 256, FlowMode::RMCF);
  CHECK(nestedness_violations(in, 5) == 0);

  auto out = circle_run(1.6, 192, FlowMode::RMCF, 1.5);
  CHECK(nestedness_violations(out, 5) == 0);

  FlowTrajectory reversed = in;
  std::reverse(reversed.snapshots.begin(), reversed.snapshots.end());
  CHECK(nestedness_violations(reversed, 10) > 0);
}
