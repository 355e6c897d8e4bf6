#include "rmcflab/flow.hpp"

#include <cmath>

namespace rmcf {

namespace {

Eigen::ArrayXd velocity(const GeometrySnapshot& g, FlowMode mode) {
  return mode == FlowMode::RMCF ? g.Htilde : g.H;
}

double max_gradient(const GeometrySnapshot& g, const Eigen::ArrayXd& v) {
  const Eigen::Index n = g.size();
  const Eigen::Index nseg = g.closed ? n : n - 1;
  double worst = 0;
  for (Eigen::Index i = 0; i < nseg; ++i)
    worst = std::max(worst, std::abs(v((i + 1) % n) - v(i)) / g.edge_ds(i));
  return worst;
}

StepDiag diag_of(const GeometrySnapshot& g, double dt) {
  return {g.time,          dt,
          max_abs_A(g),    g.Htilde.minCoeff(),
          g.Htilde.maxCoeff(), gaussian_area(g)};
}

}  // namespace

double max_abs_A(const GeometrySnapshot& geom) {
  const GeometrySnapshot& g = geom;  // derived fields required
  const Eigen::Index n = g.size();
  double worst = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    double a = std::abs(g.kappa(i));
    if (g.mode == Mode::Revolution && !(!g.closed && (i == 0 || i == n - 1)))
      a = std::max(a, std::abs(g.normal(0, i) / g.vertices(0, i)));
    worst = std::max(worst, a);
  }
  return worst;
}

GeometrySnapshot step(const GeometrySnapshot& state, double dt, FlowMode mode,
                      double redistribute_tol) {
  GeometrySnapshot g = state.has_derived ? state : differential_quantities(state);
  const Eigen::ArrayXd v = velocity(g, mode);
  for (Eigen::Index i = 0; i < g.size(); ++i)
    g.vertices.col(i) -= dt * v(i) * g.normal.col(i);
  if (!g.vertices.allFinite()) throw NumericalBlowup();
  g.time += dt;
  g.has_derived = false;
  g = differential_quantities(std::move(g));
  if (redistribute_tol >= 0) {
    const double spread = (g.edge_ds / g.spacing - 1.0).abs().maxCoeff();
    if (spread > redistribute_tol)
      g = differential_quantities(resample(g, static_cast<int>(g.size())));
  }
  return g;
}

FlowTrajectory run(const FlowConfig& config) {
  FlowTrajectory traj;
  traj.mode = config.mode;
  GeometrySnapshot g = config.initial.has_derived
                           ? config.initial
                           : differential_quantities(config.initial);
  if (config.t_max <= g.time) throw Error("run: t_max must exceed the start time");

  double last_output = g.time;
  double last_stored_a = max_abs_A(g);
  traj.snapshots.push_back(g);

  const double eps = 1e-300;
  while (true) {
    const double max_a = max_abs_A(g);
    if (max_a >= config.a_max) {
      traj.termination = Termination::BlowUp;
      break;
    }
    if (g.time >= config.t_max - 1e-14) {
      traj.termination = Termination::ReachedTMax;
      break;
    }

    const Eigen::ArrayXd v = velocity(g, config.mode);
    const double h = g.spacing;
    double dt = config.cfl * std::min({0.375 * h * h, 1.0 / (max_a * max_a + eps),
                                       h / (max_gradient(g, v) + eps)});
    dt = std::min(dt, config.t_max - g.time);

    try {
      g = step(g, dt, config.mode, config.redistribute_tol);

      // refine when curvature outruns the grid
      const double target = config.resolve_scale / std::max(max_abs_A(g), 1.0);
      if (g.spacing > target && g.size() < config.max_vertices) {
        const int n_new = std::min<int>(
            config.max_vertices,
            static_cast<int>(std::ceil(g.length / target)));
        if (n_new > g.size()) g = differential_quantities(resample(g, n_new));
      }
      if (g.edge_ds.minCoeff() < 1e-8 * diameter(g))
        g = differential_quantities(resample(g, static_cast<int>(g.size())));
    } catch (const NumericalBlowup&) {
      traj.termination = Termination::Error;
      traj.note = "numerical blow-up before the geometric threshold";
      break;
    } catch (const DegenerateGeometry&) {
      traj.termination = max_a > 0.2 * config.a_max ? Termination::BlowUp
                                                    : Termination::Error;
      traj.note = "geometry degenerated";
      break;
    } catch (const AxisCollision&) {
      traj.termination = max_a > 0.2 * config.a_max ? Termination::BlowUp
                                                    : Termination::Error;
      traj.note = "profile reached the rotation axis";
      break;
    }

    traj.series.push_back(diag_of(g, dt));
    const double cur_a = traj.series.back().max_a;
    if (g.time - last_output >= config.output_every || cur_a >= 1.05 * last_stored_a) {
      traj.snapshots.push_back(g);
      last_output = g.time;
      last_stored_a = cur_a;
    }
  }

  if (traj.snapshots.back().time < g.time) traj.snapshots.push_back(g);
  traj.final_time = traj.snapshots.back().time;
  return traj;
}

FlowTrajectory rmcf_to_mcf(const FlowTrajectory& traj) {
  if (traj.mode != FlowMode::RMCF) throw Error("rmcf_to_mcf: input is not RMCF");
  FlowTrajectory out;
  out.mode = FlowMode::MCF;
  out.termination = traj.termination;
  out.note = traj.note;
  for (const auto& s : traj.snapshots) {
    GeometrySnapshot g = s;
    const double tau = -std::exp(-s.time);
    g.vertices *= std::sqrt(-tau);
    g.time = tau;
    g.has_derived = false;
    g = differential_quantities(std::move(g));
    out.snapshots.push_back(g);
    out.series.push_back(diag_of(g, 0.0));
  }
  out.final_time = out.snapshots.back().time;
  return out;
}

GeometrySnapshot interpolate_snapshot(const FlowTrajectory& traj, double t,
                                      int n_vertices) {
  const auto& snaps = traj.snapshots;
  if (snaps.size() < 2) throw InsufficientHistory();
  if (t < snaps.front().time - 1e-12 || t > snaps.back().time + 1e-12)
    throw InsufficientHistory();

  std::size_t k = 0;
  while (k + 2 < snaps.size() && snaps[k + 1].time <= t) ++k;
  const std::size_t lo = k > 0 ? k - 1 : 0;
  const std::size_t hi = std::min(k + 2, snaps.size() - 1);

  int n = n_vertices;
  if (n == 0)
    for (std::size_t i = lo; i <= hi; ++i)
      n = std::max<int>(n, static_cast<int>(snaps[i].size()));

  GeometrySnapshot out = resample(snaps[k], n);
  out.time = t;
  out.vertices.setZero();
  for (std::size_t i = lo; i <= hi; ++i) {
    double w = 1.0;
    for (std::size_t j = lo; j <= hi; ++j)
      if (j != i) w *= (t - snaps[j].time) / (snaps[i].time - snaps[j].time);
    out.vertices += w * resample(snaps[i], n).vertices;
  }
  return differential_quantities(std::move(out));
}

FlowTrajectory parabolic_rescale(const FlowTrajectory& traj, const RescalingSpec& spec) {
  if (spec.sigma <= 0) throw Error("parabolic_rescale: sigma must be positive");
  if (traj.snapshots.empty()) throw InsufficientHistory();
  const double start = spec.T - spec.window / (spec.sigma * spec.sigma);
  const double first = traj.snapshots.front().time;
  const double last = traj.snapshots.back().time;
  if (start > last) throw InsufficientHistory();

  auto transform = [&](GeometrySnapshot g) {
    if (g.mode == Mode::Revolution && spec.y(0) != 0.0)
      throw Error("parabolic_rescale: revolution center must lie on the axis");
    g.vertices = (spec.sigma * (g.vertices.colwise() - spec.y)).eval();
    g.time = spec.sigma * spec.sigma * (g.time - spec.T);
    g.has_derived = false;
    return differential_quantities(std::move(g));
  };

  FlowTrajectory out;
  out.mode = traj.mode;
  out.termination = Termination::ReachedTMax;
  if (spec.samples <= 0) {
    for (const auto& s : traj.snapshots)
      if (s.time >= start) out.snapshots.push_back(transform(s));
  } else {
    if (start < first - 1e-12) throw InsufficientHistory();
    const double end = std::min(last, spec.T);
    if (end <= start) throw InsufficientHistory();
    for (int i = 0; i < spec.samples; ++i) {
      const double t = start + (end - start) * i / (spec.samples - 1);
      out.snapshots.push_back(transform(interpolate_snapshot(traj, t)));
    }
  }
  if (out.snapshots.empty()) throw InsufficientHistory();
  for (const auto& s : out.snapshots) out.series.push_back(diag_of(s, 0.0));
  out.final_time = out.snapshots.back().time;
  return out;
}

double singular_time_estimate(const FlowTrajectory& traj) {
  const auto& s = traj.series;
  if (s.size() < 20) throw InsufficientHistory();
  const std::size_t m = 20, off = s.size() - m;
  const double t0 = s.back().time;

  // least-squares quadratic y(u) = a + b u + c u^2 for y = 1/max|A|^2,
  // u = t - t0, extrapolated to its first nonnegative root
  Eigen::MatrixXd M(m, 3);
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double u = s[off + i].time - t0;
    M(i, 0) = 1.0;
    M(i, 1) = u;
    M(i, 2) = u * u;
    const double a = s[off + i].max_a;
    rhs(i) = 1.0 / (a * a);
  }
  const Eigen::Vector3d coef = M.colPivHouseholderQr().solve(rhs);
  const double a = coef(0), b = coef(1), c = coef(2);
  const double disc = b * b - 4.0 * a * c;
  if (std::abs(c) > 1e-30 && disc >= 0) {
    const double r1 = (-b - std::sqrt(disc)) / (2.0 * c);
    const double r2 = (-b + std::sqrt(disc)) / (2.0 * c);
    double best = std::numeric_limits<double>::infinity();
    for (double r : {r1, r2})
      if (r >= 0 && r < best) best = r;
    if (std::isfinite(best)) return t0 + best;
  }
  if (b < 0) return t0 - a / b;
  throw Error("singular_time_estimate: curvature is not blowing up");
}

}  // namespace rmcf
