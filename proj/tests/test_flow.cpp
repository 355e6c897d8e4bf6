#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmcflab/flow.hpp"
#include "rmcflab/shrinkers.hpp"

using namespace rmcf;

namespace {

GeometrySnapshot circle(double r, int n) {
  GeometrySnapshot g;
  g.vertices.resize(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    g.vertices.col(k) = Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
  }
  return differential_quantities(std::move(g));
}

double max_radius(const GeometrySnapshot& g) {
  return g.vertices.colwise().norm().maxCoeff();
}

FlowTrajectory collapse_run(double r0, int n, FlowMode mode, double cfl = 0.4) {
  FlowConfig cfg;
  cfg.mode = mode;
  cfg.initial = circle(r0, n);
  cfg.initial.time = mode == FlowMode::MCF ? -1.0 : 0.0;
  cfg.t_max = mode == FlowMode::MCF ? 0.0 : 10.0;
  cfg.cfl = cfl;
  return run(cfg);
}

}  // namespace

TEST_CASE("single euler steps match the circle closed forms") {
  auto g = circle(1.0, 512);
  const double dt = 1e-4;

  auto mcf = step(g, dt, FlowMode::MCF);
  CHECK(max_radius(mcf) == doctest::Approx(std::sqrt(1.0 - 2 * dt)).epsilon(1e-8));

  auto rmcf = step(g, dt, FlowMode::RMCF);
  CHECK(max_radius(rmcf) ==
        doctest::Approx(std::sqrt(2.0 - std::exp(dt))).epsilon(1e-8));
}

TEST_CASE("round circle is stationary under RMCF for 1e5 steps") {
  auto g = round_shrinker(1, 1024);
  const double dt = 0.4 * 0.375 * g.spacing * g.spacing;
  for (int k = 0; k < 100000; ++k) g = step(g, dt, FlowMode::RMCF);
  const auto radii = g.vertices.colwise().norm();
  CHECK(std::abs(radii.maxCoeff() - std::sqrt(2.0)) < 1e-6);
  CHECK(std::abs(radii.minCoeff() - std::sqrt(2.0)) < 1e-6);
}

TEST_CASE("RMCF circle r0=1 collapses at t* = ln 2") {
  auto traj = collapse_run(1.0, 256, FlowMode::RMCF);
  CHECK(traj.termination == Termination::BlowUp);
  CHECK(singular_time_estimate(traj) == doctest::Approx(std::log(2.0)).epsilon(5e-3));

  // delta_in closed form along the way: Htilde stays positive
  for (const auto& d : traj.series) CHECK(d.min_htilde > 0);
}

TEST_CASE("RMCF circle r0=1.6 expands and reaches t_max") {
  FlowConfig cfg;
  cfg.initial = circle(1.6, 256);
  cfg.t_max = 3.0;
  auto traj = run(cfg);
  CHECK(traj.termination == Termination::ReachedTMax);
  const double expect = std::sqrt(2.0 + (1.6 * 1.6 - 2.0) * std::exp(3.0));
  CHECK(max_radius(traj.snapshots.back()) == doctest::Approx(expect).epsilon(1e-2));
}

TEST_CASE("MCF circle r0=1 collapses at tau = -0.5") {
  auto traj = collapse_run(1.0, 256, FlowMode::MCF);
  CHECK(traj.termination == Termination::BlowUp);
  CHECK(singular_time_estimate(traj) == doctest::Approx(-0.5).epsilon(5e-3));
}

TEST_CASE("rmcf_to_mcf transport matches the direct MCF run") {
  auto rmcf = collapse_run(1.0, 256, FlowMode::RMCF);
  auto moved = rmcf_to_mcf(rmcf);
  CHECK(moved.mode == FlowMode::MCF);
  CHECK(moved.snapshots.front().time == doctest::Approx(-1.0));
  // r(tau)^2 = -2 tau - 1 for this family
  auto at = interpolate_snapshot(moved, -0.75);
  CHECK(max_radius(at) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));

  auto direct = collapse_run(1.0, 256, FlowMode::MCF);
  auto at2 = interpolate_snapshot(direct, -0.75);
  CHECK(max_radius(at2) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-4));

  // singular time maps t* = ln 2 to tau* = -1/2
  CHECK(singular_time_estimate(moved) == doctest::Approx(-0.5).epsilon(5e-3));
}

TEST_CASE("collapse time converges in dt and in h") {
  const double exact = std::log(2.0);
  const double e_coarse =
      std::abs(singular_time_estimate(collapse_run(1.0, 128, FlowMode::RMCF, 0.4)) - exact);
  const double e_dt =
      std::abs(singular_time_estimate(collapse_run(1.0, 128, FlowMode::RMCF, 0.1)) - exact);
  CHECK(std::log(e_coarse / e_dt) / std::log(4.0) > 0.9);

  const double e_h =
      std::abs(singular_time_estimate(collapse_run(1.0, 256, FlowMode::RMCF, 0.4)) - exact);
  CHECK(std::log(e_coarse / e_h) / std::log(2.0) > 1.8);
}

TEST_CASE("parabolic rescaling") {
  auto traj = collapse_run(1.0, 128, FlowMode::RMCF);

  RescalingSpec ident;
  auto same = parabolic_rescale(traj, ident);
  CHECK(same.snapshots.size() == traj.snapshots.size());
  CHECK((same.snapshots[1].vertices - traj.snapshots[1].vertices).cwiseAbs().maxCoeff() <
        1e-12);

  // blow up the collapse point: radii should follow sqrt(2(T-t)) sigma
  const double T = singular_time_estimate(traj);
  RescalingSpec zoom;
  zoom.sigma = 100.0;
  zoom.T = T;
  zoom.window = 50.0;  // flow-time width 5e-3, deep inside the asymptotic regime
  zoom.samples = 9;
  auto scaled = parabolic_rescale(traj, zoom);
  int checked = 0;
  for (const auto& s : scaled.snapshots) {
    if (s.time > -0.5) continue;  // too close to the end to be resolved
    // self-similar collapse: rescaled radius = sqrt(-2 s) in rescaled time s
    CHECK(max_radius(s) == doctest::Approx(std::sqrt(-2.0 * s.time)).epsilon(0.02));
    ++checked;
  }
  CHECK(checked >= 4);

  RescalingSpec outside;
  outside.T = 100.0;
  outside.window = 1e-6;
  CHECK_THROWS_AS(parabolic_rescale(traj, outside), InsufficientHistory);
}

TEST_CASE("insufficient history is reported") {
  FlowTrajectory empty;
  CHECK_THROWS_AS(singular_time_estimate(empty), InsufficientHistory);
  auto traj = collapse_run(1.0, 128, FlowMode::RMCF);
  CHECK_THROWS_AS(interpolate_snapshot(traj, 12.0), InsufficientHistory);
}
