#include "rmcflab/shrinkers.hpp"

#include <cmath>
#include <numeric>

#include "rmcflab/detail/rk45.hpp"

namespace rmcf {

namespace {

using detail::State3;

// Planar shrinker curve in arclength: state (x, y, theta),
// kappa = <x,n>/2 with t = (cos th, sin th), n = (sin th, -cos th).
State3 planar_rhs(double, const State3& y) {
  const double c = std::cos(y(2)), s = std::sin(y(2));
  return {c, s, 0.5 * (y(0) * s - y(1) * c)};
}

// Revolution profile in arclength: state (r, z, theta),
// kappa = <g,n>/2 - n_r/r.
State3 profile_rhs(double, const State3& y) {
  const double c = std::cos(y(2)), s = std::sin(y(2));
  const double nr = s, nz = -c;
  return {c, s, 0.5 * (y(0) * nr + y(1) * nz) - nr / y(0)};
}

struct HalfPeriod {
  double angle;      // polar angle swept from radial max to radial min
  double arclength;  // arclength of the half period
  double r_min;
};

// Integrate an Abresch-Langer arc from a radial maximum on the positive
// x-axis to the next radial minimum.
HalfPeriod planar_half_period(double rho, double h_max) {
  const detail::EventFn radial_extremum = [](double, const State3& y) {
    return y(0) * std::cos(y(2)) + y(1) * std::sin(y(2));  // <x, t>
  };
  auto res = detail::integrate_dp54(planar_rhs, {rho, 0.0, M_PI / 2}, 0.0, 60.0, 1e-12,
                                    h_max, radial_extremum, +1, 1e-3);
  if (!res.event_hit) throw ShootingBracketFailure("no radial minimum found");
  const State3& y = res.y_event;
  double phi = std::atan2(y(1), y(0));
  if (phi < 0) phi += 2 * M_PI;
  return {phi, res.s_event, std::hypot(y(0), y(1))};
}

// Sample the ODE solution at the exact node arclengths by integrating from
// node to node (interpolating a stored trace would add noise that the 1/h^2
// curvature stencils amplify).
std::vector<State3> integrate_nodes(const detail::Rhs3& f, const State3& y0,
                                    double step, int count) {
  std::vector<State3> nodes;
  nodes.reserve(count + 1);
  nodes.push_back(y0);
  State3 y = y0;
  for (int k = 1; k <= count; ++k) {
    y = detail::integrate_dp54(f, y, (k - 1) * step, k * step, 1e-12, 0.01)
            .trace.back()
            .y;
    nodes.push_back(y);
  }
  return nodes;
}

}  // namespace

GeometrySnapshot round_shrinker(int n, int n_vertices) {
  if (n != 1 && n != 2) throw Error("round_shrinker: dimension must be 1 or 2");
  GeometrySnapshot g;
  if (n == 1) {
    g.mode = Mode::Curve;
    g.closed = true;
    const double r = std::sqrt(2.0);
    g.vertices.resize(2, n_vertices);
    for (int k = 0; k < n_vertices; ++k) {
      const double a = 2 * M_PI * k / n_vertices;
      g.vertices.col(k) = Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
    }
  } else {
    g.mode = Mode::Revolution;
    g.closed = false;
    const double r = 2.0;
    g.vertices.resize(2, n_vertices);
    for (int k = 0; k < n_vertices; ++k) {
      const double u = M_PI * k / (n_vertices - 1);
      g.vertices.col(k) = Eigen::Vector2d(r * std::sin(u), r * std::cos(u));
    }
    g.vertices(0, 0) = 0.0;
    g.vertices(0, n_vertices - 1) = 0.0;
  }
  return differential_quantities(std::move(g));
}

double shrinker_residual(const GeometrySnapshot& geom) {
  const GeometrySnapshot g = geom.has_derived ? geom : differential_quantities(geom);
  return g.Htilde.abs().maxCoeff();
}

ShootingResult shoot_abresch_langer(const ShrinkerSpec& spec) {
  if (spec.kind != ShrinkerKind::AbreschLanger)
    throw Error("shoot_abresch_langer: wrong spec kind");
  const int p = spec.p, q = spec.q;
  if (p < 1 || q < 1 || std::gcd(p, q) != 1)
    throw Error("abresch_langer: p, q must be coprime positive integers");
  if (p == 1 && q == 1) {
    // the trivial branch is the round circle
    ShootingResult res;
    res.geometry = round_shrinker(1, spec.n_vertices);
    res.shooting_parameter = std::sqrt(2.0);
    res.closure_error = 0.0;
    res.residual = shrinker_residual(res.geometry);
    return res;
  }
  // admissibility window p/q in (1/2, 1/sqrt 2)
  if (!(2 * p > q && 2 * p * p < q * q))
    throw NoSolutionInWindow("abresch_langer: p/q outside (1/2, 1/sqrt(2))");

  const double target = M_PI * p / q;  // polar angle of one half period
  const double search_h = 0.02;

  // the half-period angle decreases monotonically from pi/sqrt(2) as the
  // shooting radius moves away from sqrt(2)
  double lo = std::sqrt(2.0) * (1 + 1e-7);
  double hi = 2.0;
  double angle_hi = planar_half_period(hi, search_h).angle;
  int guard = 0;
  while (angle_hi > target) {
    hi *= 1.4;
    if (++guard > 30) throw ShootingBracketFailure("abresch_langer bracket expansion");
    angle_hi = planar_half_period(hi, search_h).angle;
  }
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double a = planar_half_period(mid, search_h).angle;
    if (std::abs(a - target) < spec.tolerance || hi - lo < 1e-14) {
      lo = hi = mid;
      break;
    }
    (a > target ? lo : hi) = mid;
  }
  const double rho = 0.5 * (lo + hi);

  // assembly of the full curve (q full radial periods)
  const HalfPeriod half = planar_half_period(rho, 0.01);
  const double total = 2.0 * q * half.arclength;
  const int n = spec.n_vertices;
  const auto nodes = integrate_nodes(planar_rhs, {rho, 0.0, M_PI / 2}, total / n, n);
  ShootingResult res;
  res.geometry.mode = Mode::Curve;
  res.geometry.immersed = p > 1;
  res.geometry.vertices.resize(2, n);
  for (int k = 0; k < n; ++k)
    res.geometry.vertices.col(k) = nodes[k].head<2>();
  res.geometry = differential_quantities(std::move(res.geometry));
  res.shooting_parameter = rho;
  res.closure_error = std::hypot(nodes[n](0) - rho, nodes[n](1));
  res.residual = shrinker_residual(res.geometry);
  return res;
}

ShootingResult shoot_angenent_torus(const ShrinkerSpec& spec) {
  if (spec.kind != ShrinkerKind::AngenentTorus)
    throw Error("shoot_angenent_torus: wrong spec kind");
  const double guess = spec.initial_guess > 0 ? spec.initial_guess : 3.3;

  // shoot from the outer equator (r0, 0) with vertical tangent; a closed
  // profile crosses z=0 again with vertical tangent (cos theta = 0)
  const detail::EventFn z_cross = [](double, const State3& y) { return y(1); };
  auto miss = [&](double r0, double h_max) -> double {
    auto res = detail::integrate_dp54(profile_rhs, {r0, 0.0, M_PI / 2}, 0.0, 60.0, 1e-12,
                                      h_max, z_cross, -1, 0.05);
    if (!res.event_hit) return std::numeric_limits<double>::quiet_NaN();
    return std::cos(res.y_event(2));
  };

  const double search_h = 0.02;
  const int n_scan = 25;
  double lo = 0, hi = 0;
  double prev_r = 0, prev_m = std::numeric_limits<double>::quiet_NaN();
  for (int k = 0; k <= n_scan; ++k) {
    const double r0 = guess * (0.75 + 0.5 * k / n_scan);
    const double m = miss(r0, search_h);
    if (std::isfinite(prev_m) && std::isfinite(m) && (prev_m > 0) != (m > 0)) {
      lo = prev_r;
      hi = r0;
      break;
    }
    prev_r = r0;
    prev_m = m;
  }
  if (hi == 0) throw ShootingBracketFailure("angenent_torus: no sign change near guess");

  double m_lo = miss(lo, search_h);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double m = miss(mid, search_h);
    if (std::abs(m) < spec.tolerance || hi - lo < 1e-14) {
      lo = hi = mid;
      break;
    }
    if ((m > 0) == (m_lo > 0)) {
      lo = mid;
      m_lo = m;
    } else {
      hi = mid;
    }
  }
  const double r0 = 0.5 * (lo + hi);

  auto fine = detail::integrate_dp54(profile_rhs, {r0, 0.0, M_PI / 2}, 0.0, 60.0, 1e-12,
                                     0.01, z_cross, -1, 0.05);
  if (!fine.event_hit) throw ShootingBracketFailure("angenent_torus: fine pass lost the root");
  const int n = spec.n_vertices + (spec.n_vertices % 2);  // even, so the seam is sampled
  const auto nodes =
      integrate_nodes(profile_rhs, {r0, 0.0, M_PI / 2}, 2.0 * fine.s_event / n, n / 2);
  ShootingResult res;
  res.geometry.mode = Mode::Revolution;
  res.geometry.vertices.resize(2, n);
  for (int k = 0; k <= n / 2; ++k)
    res.geometry.vertices.col(k) = nodes[k].head<2>();
  for (int k = n / 2 + 1; k < n; ++k) {
    res.geometry.vertices(0, k) = nodes[n - k](0);
    res.geometry.vertices(1, k) = -nodes[n - k](1);
  }
  res.geometry = differential_quantities(std::move(res.geometry));
  res.shooting_parameter = r0;
  res.closure_error = std::abs(std::cos(fine.y_event(2)));
  res.residual = shrinker_residual(res.geometry);
  return res;
}

}  // namespace rmcf
