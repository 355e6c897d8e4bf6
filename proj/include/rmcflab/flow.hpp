#pragma once

#include <string>
#include <vector>

#include "rmcflab/geometry.hpp"

namespace rmcf {

enum class FlowMode { RMCF, MCF };
enum class Termination { ReachedTMax, BlowUp, Error };

struct FlowConfig {
  FlowMode mode = FlowMode::RMCF;
  GeometrySnapshot initial;
  double t_max = 10.0;
  double cfl = 0.4;            // fraction of the explicit stability limit
  double a_max = 1e3;          // blow-up threshold on max |A|
  double output_every = 0.01;  // time between stored snapshots
  double redistribute_tol = 0.005;  // edge spread triggering redistribution
  double resolve_scale = 0.25;      // target h * max|A| when refining
  int max_vertices = 32768;
};

struct StepDiag {
  double time, dt, max_a, min_htilde, max_htilde, gaussian_area;
};

struct FlowTrajectory {
  FlowMode mode = FlowMode::RMCF;
  std::vector<GeometrySnapshot> snapshots;
  std::vector<StepDiag> series;          // one entry per accepted step
  Termination termination = Termination::Error;
  double final_time = 0.0;
  std::string note;                      // diagnostics for Termination::Error
};

// Parabolic rescaling window: times T + sigma^-2 t, geometry sigma (x - y).
struct RescalingSpec {
  double sigma = 1.0;
  Eigen::Vector2d y = Eigen::Vector2d::Zero();
  double T = 0.0;
  double window = 1.0;  // rescaled-time width to extract before T
  int samples = 0;      // 0 = stored snapshots, else uniform cubic resampling
};

// Largest principal curvature magnitude.
double max_abs_A(const GeometrySnapshot& geom);

// One explicit Euler step of normal velocity -Htilde (RMCF) or -H (MCF).
// Redistribution re-equidistributes vertices when the edge spread exceeds
// redistribute_tol (pass a negative tolerance for Lagrangian tracking).
GeometrySnapshot step(const GeometrySnapshot& state, double dt, FlowMode mode,
                      double redistribute_tol = 0.005);

FlowTrajectory run(const FlowConfig& config);

// Map an RMCF trajectory to the corresponding MCF via
// tau = -e^{-t}, x -> sqrt(-tau) x (MCF clock starts at tau = -1).
FlowTrajectory rmcf_to_mcf(const FlowTrajectory& traj);

FlowTrajectory parabolic_rescale(const FlowTrajectory& traj, const RescalingSpec& spec);

// Snapshot at an arbitrary time by cubic interpolation of stored snapshots
// (resampled to a common vertex count); InsufficientHistory outside the span.
GeometrySnapshot interpolate_snapshot(const FlowTrajectory& traj, double t,
                                      int n_vertices = 0);

// Blow-up time by quadratic extrapolation of 1/max|A|^2 over the last
// recorded steps; InsufficientHistory with fewer than 20 entries.
double singular_time_estimate(const FlowTrajectory& traj);

}  // namespace rmcf
