#include "rmcflab/diagnostics.hpp"

#include <algorithm>
#include <cmath>

namespace rmcf {

namespace {

// below this band Htilde is treated as sign-free (discretization noise)
constexpr double kSignBand = 1e-7;

const GeometrySnapshot& require_derived(const GeometrySnapshot& g) {
  if (!g.has_derived)
    throw Error("diagnostics: derived fields are stale; run differential_quantities");
  return g;
}

int uniform_sign(const GeometrySnapshot& g) {
  if (g.Htilde.minCoeff() > kSignBand) return 1;
  if (g.Htilde.maxCoeff() < -kSignBand) return -1;
  return 0;
}

// per-vertex largest principal curvature magnitude
Eigen::ArrayXd pointwise_A(const GeometrySnapshot& g) {
  const Eigen::Index n = g.size();
  Eigen::ArrayXd a = g.kappa.abs();
  if (g.mode == Mode::Revolution) {
    for (Eigen::Index i = 0; i < n; ++i) {
      if (!g.closed && (i == 0 || i == n - 1)) continue;  // axis: both equal kappa
      a(i) = std::max(a(i), std::abs(g.normal(0, i) / g.vertices(0, i)));
    }
  }
  return a;
}

double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return a.x() * b.y() - a.y() * b.x();
}

bool segments_intersect(const Eigen::Vector2d& p, const Eigen::Vector2d& q,
                        const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  const double d1 = cross2(q - p, a - p), d2 = cross2(q - p, b - p);
  const double d3 = cross2(b - a, p - a), d4 = cross2(b - a, q - a);
  return ((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0));
}

bool polylines_intersect(const GeometrySnapshot& a, const GeometrySnapshot& b) {
  const Eigen::Index na = a.size(), nb = b.size();
  const Eigen::Index sa = a.closed ? na : na - 1, sb = b.closed ? nb : nb - 1;
  for (Eigen::Index i = 0; i < sa; ++i)
    for (Eigen::Index j = 0; j < sb; ++j)
      if (segments_intersect(a.vertices.col(i), a.vertices.col((i + 1) % na),
                             b.vertices.col(j), b.vertices.col((j + 1) % nb)))
        return true;
  return false;
}

double symmetric_distance(const GeometrySnapshot& a, const GeometrySnapshot& b) {
  double d = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    d = std::min(d, distance_to(b, a.vertices.col(i)));
  for (Eigen::Index j = 0; j < b.size(); ++j)
    d = std::min(d, distance_to(a, b.vertices.col(j)));
  return d;
}

// least-squares circle through a point set (Kasa form); returns rms radial
// deviation relative to the fitted radius
struct CircleFit {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 0.0;
  double residual = std::numeric_limits<double>::infinity();
};

CircleFit fit_circle(const std::vector<Eigen::Vector2d>& pts) {
  CircleFit fit;
  const std::size_t m = pts.size();
  if (m < 3) return fit;
  Eigen::MatrixXd M(m, 3);
  Eigen::VectorXd rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    M(i, 0) = 2.0 * pts[i].x();
    M(i, 1) = 2.0 * pts[i].y();
    M(i, 2) = 1.0;
    rhs(i) = pts[i].squaredNorm();
  }
  const Eigen::Vector3d c = M.colPivHouseholderQr().solve(rhs);
  const double r2 = c(2) + c(0) * c(0) + c(1) * c(1);
  if (r2 <= 0) return fit;
  fit.center = c.head<2>();
  fit.radius = std::sqrt(r2);
  double ss = 0;
  for (const auto& p : pts) {
    const double d = (p - fit.center).norm() - fit.radius;
    ss += d * d;
  }
  fit.residual = std::sqrt(ss / m) / fit.radius;
  return fit;
}

// slope with a two-sigma confidence half width from the fit residuals
struct SlopeFit {
  double slope = 0.0, ci = std::numeric_limits<double>::infinity();
};

SlopeFit fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
  SlopeFit out;
  const std::size_t m = x.size();
  if (m < 2) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < m; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double den = m * sxx - sx * sx;
  if (den <= 0) return out;
  out.slope = (m * sxy - sx * sy) / den;
  const double icpt = (sy - out.slope * sx) / m;
  if (m > 2) {
    double ss = 0;
    for (std::size_t i = 0; i < m; ++i) {
      const double r = y[i] - icpt - out.slope * x[i];
      ss += r * r;
    }
    out.ci = 2.0 * std::sqrt(ss / (m - 2) / (den / m));
  }
  return out;
}

}  // namespace

double IdentityErrors::max() const {
  return std::max({metric, det_g, normal, mean_curvature, weight, rescaled});
}

double ztilde(const GeometrySnapshot& geom, double delta, Eigen::Index i,
              Eigen::Index j) {
  const GeometrySnapshot& g = require_derived(geom);
  const Eigen::Vector2d d = g.vertices.col(j) - g.vertices.col(i);
  return 0.5 * g.Htilde(i) * d.squaredNorm() + delta * d.dot(g.normal.col(i));
}

NonCollapseReport noncollapse_delta(const GeometrySnapshot& geom) {
  const GeometrySnapshot& g = require_derived(geom);
  const int sign = uniform_sign(g);
  if (sign == 0) throw MixedSign();

  const Eigen::Index n = g.size();
  // for revolution profiles the scan covers the antipodal meridian as well
  // (the mirrored profile), where the across-the-hole tangency lives
  const bool rev = g.mode == Mode::Revolution;
  auto other = [&](Eigen::Index j) {
    Eigen::Vector2d p = g.vertices.col(j % n);
    if (j >= n) p.x() = -p.x();
    return p;
  };
  const Eigen::Index n_other = rev ? 2 * n : n;

  NonCollapseReport rep;
  rep.delta_in = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::abs(g.Htilde(i));
    for (Eigen::Index j = 0; j < n_other; ++j) {
      if (j == i) continue;
      const Eigen::Vector2d d = other(j) - g.vertices.col(i);
      const double dn = sign * d.dot(g.normal.col(i));
      const double d2 = d.squaredNorm();
      if (d2 == 0) continue;
      if (dn < 0) {
        const double delta = h * d2 / (2.0 * -dn);
        if (delta < rep.delta_in) {
          rep.delta_in = delta;
          rep.argmin_i = i;
          rep.argmin_j = j % n;
        }
      } else if (dn > 0) {
        rep.delta_out = std::min(rep.delta_out, h * d2 / (2.0 * dn));
      }
    }
  }
  // no constraining pairs (e.g. the collapsing side of a convex curve seen
  // from outside): tangent balls of any radius fit, delta_in stays +infinity

  // consistency of the reported delta: sign * Z with delta = sign * delta_in
  // is |Htilde| |d|^2 / 2 - delta_in |<d,n>| >= 0 on the constraining pairs,
  // vanishing at the argmin
  rep.min_ztilde = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double h = std::abs(g.Htilde(i));
    for (Eigen::Index j = 0; j < n_other; ++j) {
      if (j == i) continue;
      const Eigen::Vector2d d = other(j) - g.vertices.col(i);
      const double dn = sign * d.dot(g.normal.col(i));
      if (dn >= 0) continue;
      rep.min_ztilde =
          std::min(rep.min_ztilde, 0.5 * h * d.squaredNorm() + rep.delta_in * dn);
    }
  }
  if (!std::isfinite(rep.min_ztilde)) rep.min_ztilde = 0.0;
  return rep;
}

SignReport sign_preservation(const FlowTrajectory& traj) {
  if (traj.snapshots.empty()) throw InsufficientHistory();
  SignReport rep;
  rep.initial_sign = uniform_sign(require_derived(traj.snapshots.front()));
  if (rep.initial_sign == 0) return rep;  // sign-free start: vacuous pass
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (const auto& d : traj.series) {
    const double margin =
        rep.initial_sign > 0 ? d.min_htilde : -d.max_htilde;
    rep.worst_margin = std::min(rep.worst_margin, margin);
  }
  if (!std::isfinite(rep.worst_margin)) rep.worst_margin = 0.0;
  rep.pass = rep.worst_margin > 0.0 || traj.series.empty();
  return rep;
}

AvoidanceReport avoidance_check(const FlowTrajectory& a, const FlowTrajectory& b) {
  if (a.mode != FlowMode::MCF || b.mode != FlowMode::MCF)
    throw Error("avoidance_check: both trajectories must be MCF runs");
  if (a.snapshots.empty() || b.snapshots.empty()) throw InsufficientHistory();

  const GeometrySnapshot& a0 = a.snapshots.front();
  const GeometrySnapshot& b0 = b.snapshots.front();
  if (polylines_intersect(a0, b0)) throw NotDisjoint();
  AvoidanceReport rep;
  rep.initial_distance = symmetric_distance(a0, b0);
  if (rep.initial_distance <= 0) throw NotDisjoint();

  const double t_lo = std::max(a0.time, b0.time);
  const double t_hi =
      std::min(a.snapshots.back().time, b.snapshots.back().time);
  for (const auto& sa : a.snapshots) {
    if (sa.time < t_lo - 1e-12 || sa.time > t_hi + 1e-12) continue;
    const double t = std::clamp(sa.time, t_lo, t_hi);
    const GeometrySnapshot sb = interpolate_snapshot(b, t);
    rep.times.push_back(t);
    rep.distance.push_back(symmetric_distance(sa, sb));
  }
  if (rep.times.empty()) throw InsufficientHistory();
  for (double d : rep.distance)
    if (d < rep.initial_distance - rep.tolerance) rep.pass = false;
  return rep;
}

double pinching_check(const GeometrySnapshot& geom, const NonCollapseReport& report) {
  const GeometrySnapshot& g = require_derived(geom);
  if (uniform_sign(g) == 0) throw MixedSign();
  if (report.delta_in <= 0) throw Error("pinching_check: delta_in must be positive");
  const Eigen::ArrayXd a = pointwise_A(g);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < g.size(); ++i)
    worst = std::max(worst, a(i) * report.delta_in / std::abs(g.Htilde(i)));
  return worst;
}

// ---------------------------------------------------------------------------
// evolution identity probe
// ---------------------------------------------------------------------------

namespace {

// Parameter-space fields of a closed Lagrangian probe state: centered
// differences in the vertex index u (unit spacing), circumscribed-circle
// curvature (exact on circles at any spacing, second order in general).
struct ProbeState {
  Eigen::Matrix2Xd x, xu, nrm;
  Eigen::ArrayXd g, kappa, H, Tw, Ht;
};

ProbeState probe_fields(const Eigen::Matrix2Xd& x, bool rev, double orient) {
  const Eigen::Index n = x.cols();
  ProbeState s;
  s.x = x;
  s.xu.resize(2, n);
  s.nrm.resize(2, n);
  s.g.resize(n);
  s.kappa.resize(n);
  s.H.resize(n);
  s.Tw.resize(n);
  s.Ht.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index im = (i + n - 1) % n, ip = (i + 1) % n;
    const Eigen::Vector2d xu = 0.5 * (x.col(ip) - x.col(im));
    const double g = xu.squaredNorm();
    if (g <= 0) throw DegenerateGeometry("probe: collapsed parameter cell");
    const Eigen::Vector2d t = xu / std::sqrt(g);
    const Eigen::Vector2d nv = orient * Eigen::Vector2d(t.y(), -t.x());
    const Eigen::Vector2d e1 = x.col(i) - x.col(im), e2 = x.col(ip) - x.col(i),
                          e3 = x.col(ip) - x.col(im);
    const double kappa =
        orient * 2.0 * cross2(e1, e2) / (e1.norm() * e2.norm() * e3.norm());
    s.xu.col(i) = xu;
    s.nrm.col(i) = nv;
    s.g(i) = g;
    s.kappa(i) = kappa;
    double H = kappa;
    if (rev) {
      if (x(0, i) <= 0)
        throw Error("identity probe: revolution profile touches the axis");
      H += nv.x() / x(0, i);
    }
    s.H(i) = H;
    s.Tw(i) = -0.5 * x.col(i).dot(nv);
    s.Ht(i) = s.H(i) + s.Tw(i);
  }
  return s;
}

Eigen::ArrayXd d_u(const Eigen::ArrayXd& f) {
  const Eigen::Index n = f.size();
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i)
    out(i) = 0.5 * (f((i + 1) % n) - f((i + n - 1) % n));
  return out;
}

Eigen::ArrayXd laplace(const ProbeState& s, const Eigen::ArrayXd& f, bool rev) {
  const Eigen::Index n = f.size();
  const Eigen::ArrayXd sq = s.g.sqrt();
  Eigen::ArrayXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Index im = (i + n - 1) % n, ip = (i + 1) % n;
    const double wl = rev ? 0.5 * (s.x(0, im) + s.x(0, i)) : 1.0;
    const double wr = rev ? 0.5 * (s.x(0, i) + s.x(0, ip)) : 1.0;
    const double fl = wl * (f(i) - f(im)) / (0.5 * (sq(im) + sq(i)));
    const double fr = wr * (f(ip) - f(i)) / (0.5 * (sq(i) + sq(ip)));
    out(i) = (fr - fl) / (sq(i) * (rev ? s.x(0, i) : 1.0));
  }
  return out;
}

// raw centered time differences and dt-independent scales, kept so temporal
// convergence can be measured against a finer-dt reference level
struct ProbeLevel {
  IdentityErrors err;
  Eigen::ArrayXd lhs_metric, lhs_detg, lhs_H, lhs_T, lhs_Ht;
  Eigen::Matrix2Xd lhs_normal;
  IdentityErrors scale;  // reused as a per-identity denominator bundle
};

ProbeLevel probe_level(const GeometrySnapshot& center, int n, double dt) {
  const GeometrySnapshot base =
      n == center.size() ? center : resample(center, n);
  const bool rev = base.mode == Mode::Revolution;
  // traversal orientation from the shoelace area, fixed across the window
  double area2 = 0;
  for (Eigen::Index i = 0; i < base.size(); ++i)
    area2 += cross2(base.vertices.col(i),
                    base.vertices.col((i + 1) % base.size()));
  const double orient = area2 >= 0 ? 1.0 : -1.0;

  // Lagrangian window at t - dt .. t + dt, reached by Runge-Kutta substeps
  // of dt/2 so the centered O(dt^2) time difference is the leading temporal
  // truncation; explicit stability ties the substep to the spatial scale
  auto velocity = [&](const Eigen::Matrix2Xd& x) {
    const ProbeState s = probe_fields(x, rev, orient);
    Eigen::Matrix2Xd v(2, x.cols());
    for (Eigen::Index i = 0; i < x.cols(); ++i)
      v.col(i) = -s.Ht(i) * s.nrm.col(i);
    return v;
  };
  auto substep = [&](const Eigen::Matrix2Xd& x, double h) {
    const Eigen::Matrix2Xd k1 = velocity(x);
    const Eigen::Matrix2Xd k2 = velocity(x + 0.5 * h * k1);
    const Eigen::Matrix2Xd k3 = velocity(x + 0.5 * h * k2);
    const Eigen::Matrix2Xd k4 = velocity(x + h * k3);
    return (x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)).eval();
  };
  auto march = [&](double h, int steps) {
    Eigen::Matrix2Xd x = base.vertices;
    for (int k = 0; k < steps; ++k) x = substep(x, h);
    return probe_fields(x, rev, orient);
  };
  const ProbeState s1 = probe_fields(base.vertices, rev, orient);
  const ProbeState sp = march(0.5 * dt, 2);
  const ProbeState sm = march(-0.5 * dt, 2);

  auto ddt = [dt](const Eigen::ArrayXd& m, const Eigen::ArrayXd& p) {
    return ((p - m) / (2.0 * dt)).eval();
  };
  // reference rate so identities with vanishing sides stay well scaled
  const double kmax = s1.kappa.abs().maxCoeff();
  const double kref =
      std::max(s1.Ht.abs().maxCoeff() * kmax, 1e-4 * kmax * kmax);
  auto rel = [&](const Eigen::ArrayXd& lhs, const Eigen::ArrayXd& rhs,
                 double qscale) {
    const double denom =
        std::max({lhs.abs().maxCoeff(), rhs.abs().maxCoeff(), kref * qscale});
    return (lhs - rhs).abs().maxCoeff() / denom;
  };

  ProbeLevel out;
  IdentityErrors& err = out.err;
  const Eigen::ArrayXd r = s1.x.row(0).transpose().array();
  const Eigen::ArrayXd duht = d_u(s1.Ht);
  const Eigen::ArrayXd lap_ht = laplace(s1, s1.Ht, rev);
  Eigen::ArrayXd h2 = s1.kappa.square();
  if (rev) h2 += (s1.nrm.row(0).transpose().array() / r).square();

  out.lhs_metric = ddt(sm.g, sp.g);
  err.metric = rel(out.lhs_metric, (-2.0 * s1.Ht * s1.kappa * s1.g).eval(),
                   s1.g.maxCoeff());
  out.scale.metric = kref * s1.g.maxCoeff();
  {
    auto detg = [&](const ProbeState& s) {
      return rev ? (s.g * s.x.row(0).transpose().array().square()).eval()
                 : s.g;
    };
    const Eigen::ArrayXd dg1 = detg(s1);
    out.lhs_detg = ddt(detg(sm), detg(sp));
    err.det_g = rel(out.lhs_detg, (-2.0 * s1.Ht * s1.H * dg1).eval(),
                    dg1.maxCoeff());
    out.scale.det_g = kref * dg1.maxCoeff();
  }
  {
    // d/dt n = grad Htilde (tangential)
    out.lhs_normal.resize(2, s1.g.size());
    double worst = 0;
    for (Eigen::Index i = 0; i < s1.g.size(); ++i) {
      const Eigen::Vector2d lhs = (sp.nrm.col(i) - sm.nrm.col(i)) / (2.0 * dt);
      out.lhs_normal.col(i) = lhs;
      const Eigen::Vector2d rhs = (duht(i) / s1.g(i)) * s1.xu.col(i);
      worst = std::max(
          worst, (lhs - rhs).norm() /
                     std::max({lhs.norm(), rhs.norm(), kref}));
    }
    err.normal = worst;
    out.scale.normal = kref;
  }
  out.lhs_H = ddt(sm.H, sp.H);
  err.mean_curvature = rel(out.lhs_H, (lap_ht + h2 * s1.Ht).eval(),
                           s1.H.abs().maxCoeff());
  out.scale.mean_curvature = kref * s1.H.abs().maxCoeff();
  {
    // f = -|x|^2/4: grad f along the surface has parameter derivative
    // -<x, x_u>/2, and Hess f(n,n) = -1/2 exactly
    Eigen::ArrayXd duf(s1.g.size());
    for (Eigen::Index i = 0; i < s1.g.size(); ++i)
      duf(i) = -0.5 * s1.x.col(i).dot(s1.xu.col(i));
    out.lhs_T = ddt(sm.Tw, sp.Tw);
    err.weight = rel(out.lhs_T,
                     (0.5 * s1.Ht + duf * duht / s1.g).eval(),
                     std::max(s1.Tw.abs().maxCoeff(), 1e-12));
    out.scale.weight = kref * std::max(s1.Tw.abs().maxCoeff(), 1e-12);
  }
  {
    Eigen::ArrayXd xgrad(s1.g.size());
    for (Eigen::Index i = 0; i < s1.g.size(); ++i)
      xgrad(i) = s1.x.col(i).dot(s1.xu.col(i)) * duht(i) / s1.g(i);
    out.lhs_Ht = ddt(sm.Ht, sp.Ht);
    err.rescaled =
        rel(out.lhs_Ht,
            (lap_ht - 0.5 * xgrad + (h2 + 0.5) * s1.Ht).eval(),
            s1.H.abs().maxCoeff());
    out.scale.rescaled = kref * s1.H.abs().maxCoeff();
  }
  return out;
}

}  // namespace

IdentityCheckReport verify_evolution_identities(const GeometrySnapshot& center,
                                                const std::vector<int>& ns,
                                                const std::vector<double>& dts) {
  if (ns.size() != dts.size() || ns.empty())
    throw Error("verify_evolution_identities: need matching (n, dt) level lists");
  if (!center.closed)
    throw Error("verify_evolution_identities: closed geometries only");

  IdentityCheckReport rep;
  rep.ns = ns;
  rep.dts = dts;
  std::vector<ProbeLevel> levels;
  for (std::size_t k = 0; k < ns.size(); ++k) {
    levels.push_back(probe_level(center, ns[k], dts[k]));
    rep.errors.push_back(levels.back().err);
  }

  auto all_equal = [](auto v) {
    return std::all_of(v.begin(), v.end(), [&](auto x) { return x == v[0]; });
  };
  auto fit_orders = [&](const std::vector<double>& x, double sgn) {
    IdentityErrors ord;
    auto one = [&](auto member) {
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < rep.errors.size(); ++k) {
        lx.push_back(std::log(x[k]));
        ly.push_back(std::log(std::max(rep.errors[k].*member, 1e-16)));
      }
      return sgn * fit_slope(lx, ly).slope;
    };
    ord.metric = one(&IdentityErrors::metric);
    ord.det_g = one(&IdentityErrors::det_g);
    ord.normal = one(&IdentityErrors::normal);
    ord.mean_curvature = one(&IdentityErrors::mean_curvature);
    ord.weight = one(&IdentityErrors::weight);
    ord.rescaled = one(&IdentityErrors::rescaled);
    return ord;
  };
  if (ns.size() >= 3 && all_equal(dts) && !all_equal(ns)) {
    std::vector<double> x(ns.begin(), ns.end());
    rep.spatial_order = fit_orders(x, -1.0);  // error ~ n^-p
    rep.has_spatial_order = true;
  }
  if (ns.size() >= 3 && all_equal(ns) && !all_equal(dts)) {
    // the identity defect at a stable dt is dominated by its dt-independent
    // spatial part, so the temporal truncation is measured directly: each
    // level's centered time difference against the same difference at a much
    // finer dt, which isolates the O(dt^2) stencil error on any window
    const double dt_ref = *std::min_element(dts.begin(), dts.end()) / 4.0;
    const ProbeLevel ref = probe_level(center, ns[0], dt_ref);
    std::vector<IdentityErrors> terr(levels.size());
    for (std::size_t k = 0; k < levels.size(); ++k) {
      const ProbeLevel& L = levels[k];
      auto dist = [&](const Eigen::ArrayXd& a, const Eigen::ArrayXd& b,
                      double scale) {
        return (a - b).abs().maxCoeff() /
               std::max({a.abs().maxCoeff(), b.abs().maxCoeff(), scale});
      };
      terr[k].metric = dist(L.lhs_metric, ref.lhs_metric, ref.scale.metric);
      terr[k].det_g = dist(L.lhs_detg, ref.lhs_detg, ref.scale.det_g);
      terr[k].normal = (L.lhs_normal - ref.lhs_normal).colwise().norm().maxCoeff() /
                       std::max(ref.lhs_normal.colwise().norm().maxCoeff(),
                                ref.scale.normal);
      terr[k].mean_curvature = dist(L.lhs_H, ref.lhs_H, ref.scale.mean_curvature);
      terr[k].weight = dist(L.lhs_T, ref.lhs_T, ref.scale.weight);
      terr[k].rescaled = dist(L.lhs_Ht, ref.lhs_Ht, ref.scale.rescaled);
    }
    auto one = [&](auto member) {
      std::vector<double> lx, ly;
      for (std::size_t k = 0; k < terr.size(); ++k) {
        lx.push_back(std::log(dts[k]));
        ly.push_back(std::log(std::max(terr[k].*member, 1e-16)));
      }
      return fit_slope(lx, ly).slope;
    };
    rep.temporal_order.metric = one(&IdentityErrors::metric);
    rep.temporal_order.det_g = one(&IdentityErrors::det_g);
    rep.temporal_order.normal = one(&IdentityErrors::normal);
    rep.temporal_order.mean_curvature = one(&IdentityErrors::mean_curvature);
    rep.temporal_order.weight = one(&IdentityErrors::weight);
    rep.temporal_order.rescaled = one(&IdentityErrors::rescaled);
    rep.has_temporal_order = true;
  }
  return rep;
}

IdentityCheckReport verify_evolution_identities(const FlowTrajectory& traj, double t,
                                                const std::vector<int>& ns,
                                                const std::vector<double>& dts) {
  const auto& snaps = traj.snapshots;
  if (snaps.empty()) throw InsufficientHistory();
  std::size_t k = 0;
  for (std::size_t i = 1; i < snaps.size(); ++i)
    if (std::abs(snaps[i].time - t) < std::abs(snaps[k].time - t)) k = i;
  // a vertex-count change next to the probe center marks a remesh event
  if ((k > 0 && snaps[k - 1].size() != snaps[k].size()) ||
      (k + 1 < snaps.size() && snaps[k + 1].size() != snaps[k].size()))
    throw ProbeContaminated();
  return verify_evolution_identities(snaps[k], ns, dts);
}

// ---------------------------------------------------------------------------
// singularity detection
// ---------------------------------------------------------------------------

SingularityReport detect_and_classify(const FlowTrajectory& traj) {
  if (traj.termination != Termination::BlowUp)
    throw Error("detect_and_classify: trajectory did not blow up");
  if (traj.snapshots.empty() || traj.series.size() < 20)
    throw InsufficientHistory();

  SingularityReport rep;
  rep.singular_time = singular_time_estimate(traj);
  const double T = rep.singular_time;

  // decay exponent of ell(t) = 1/max|A| against (T - t), on the trailing
  // asymptotic regime of the series
  {
    const double a_first = traj.series.front().max_a;
    const double a_last = traj.series.back().max_a;
    double a_min = std::max(10.0 * a_first, a_last / 100.0);
    std::vector<double> lx, ly;
    for (int pass = 0; pass < 2 && lx.size() < 8; ++pass) {
      lx.clear();
      ly.clear();
      for (const auto& d : traj.series) {
        if (d.max_a < a_min || d.time >= T) continue;
        lx.push_back(std::log(T - d.time));
        ly.push_back(std::log(1.0 / d.max_a));
      }
      a_min = a_first;  // relax on the retry
    }
    const SlopeFit fit = fit_slope(lx, ly);
    rep.decay_exponent = fit.slope;
    rep.decay_exponent_ci = fit.ci;
  }

  const GeometrySnapshot& last = require_derived(traj.snapshots.back());
  const Eigen::ArrayXd a = pointwise_A(last);
  Eigen::Index imax;
  a.maxCoeff(&imax);
  const double ell = 1.0 / a(imax);
  const double ext = diameter(last);
  // a collapse is global only when the whole geometry lives at the blow-up
  // scale AND the curvature is homogeneous; a small curve with tips much
  // sharper than its bulk is still a localized (tip) singularity
  Eigen::ArrayXd sorted = a;
  std::nth_element(sorted.data(), sorted.data() + sorted.size() / 2,
                   sorted.data() + sorted.size());
  const double a_median = sorted(sorted.size() / 2);
  const bool global = ext < 20.0 * ell && a(imax) < 3.0 * a_median;
  const bool rev = last.mode == Mode::Revolution;

  // contiguous patch around the most curved vertex at scale ell
  auto local_patch = [&](double radius) {
    std::vector<Eigen::Index> idx{imax};
    const Eigen::Index n = last.size();
    const Eigen::Vector2d p = last.vertices.col(imax);
    for (int dir : {-1, 1}) {
      for (Eigen::Index k = 1; k < n; ++k) {
        const Eigen::Index j = ((imax + dir * k) % n + n) % n;
        if ((last.vertices.col(j) - p).norm() > radius) break;
        idx.push_back(j);
      }
    }
    return idx;
  };

  std::vector<Eigen::Index> region;
  if (global) {
    region.resize(last.size());
    for (Eigen::Index i = 0; i < last.size(); ++i) region[i] = i;
  } else {
    region = local_patch(8.0 * ell);
  }

  // (y, T) extrapolation: the collapsing region's anchor point over the last
  // snapshots, fitted against sqrt(T - t)
  {
    std::vector<double> sq;
    std::vector<Eigen::Vector2d> pts;
    const std::size_t m = traj.snapshots.size();
    for (std::size_t k = m > 12 ? m - 12 : 0; k < m; ++k) {
      const GeometrySnapshot& s = traj.snapshots[k];
      if (s.time >= T) continue;
      Eigen::Vector2d p;
      if (global) {
        p = s.vertices.rowwise().mean();
      } else {
        const Eigen::ArrayXd ak = pointwise_A(require_derived(s));
        Eigen::Index j;
        ak.maxCoeff(&j);
        p = s.vertices.col(j);
      }
      sq.push_back(std::sqrt(T - s.time));
      pts.push_back(p);
    }
    if (pts.size() >= 3) {
      Eigen::MatrixXd M(pts.size(), 2);
      Eigen::MatrixXd rhs(pts.size(), 2);
      for (std::size_t k = 0; k < pts.size(); ++k) {
        M(k, 0) = 1.0;
        M(k, 1) = sq[k];
        rhs.row(k) = pts[k].transpose();
      }
      rep.singular_point =
          M.colPivHouseholderQr().solve(rhs).row(0).transpose();
    } else if (!pts.empty()) {
      rep.singular_point = pts.back();
    }
    if (rev) rep.singular_point.x() = std::max(rep.singular_point.x(), 0.0);
  }

  // template matching
  Eigen::Vector2d outer_ref = Eigen::Vector2d::Zero();  // fitted outer normal anchor
  bool axis_cylinder = false;
  if (rev && last.vertices(0, imax) < 5.0 * ell) {
    // the profile hugs the rotation axis: the local model is a shrinking
    // cylinder around the axis. The rotational curvature 1/r carries the
    // blow-up while the profile curvature stays subdominant, and the profile
    // is straight to fit tolerance at the blow-up scale ell
    const double anisotropy = std::abs(last.kappa(imax)) * ell;
    const auto idx = local_patch(ell);
    double mean_r = 0, ss = 0;
    for (auto j : idx) mean_r += last.vertices(0, j);
    mean_r /= idx.size();
    for (auto j : idx) {
      const double d = last.vertices(0, j) - mean_r;
      ss += d * d;
    }
    rep.fit_residual = std::sqrt(ss / idx.size()) / mean_r;
    if (anisotropy < 0.3 && rep.fit_residual <= 0.02) {
      rep.tangent_type = TangentType::Cylindrical;
      axis_cylinder = true;
      region = idx;
    }
  } else {
    std::vector<Eigen::Vector2d> pts;
    for (auto j : region) pts.push_back(last.vertices.col(j));
    const CircleFit fit = fit_circle(pts);
    rep.fit_residual = fit.residual;
    if (fit.residual <= 0.02) {
      if (global && rev && fit.center.x() > 3.0 * fit.radius)
        rep.tangent_type = TangentType::Cylindrical;
      else
        rep.tangent_type = TangentType::Round;
      outer_ref = fit.center;
    } else if (!global) {
      rep.tangent_type = TangentType::Cusp;
    }
  }
  if (rep.tangent_type == TangentType::Unresolved && !global)
    rep.tangent_type = TangentType::Cusp;

  if (rep.tangent_type == TangentType::Cylindrical ||
      rep.tangent_type == TangentType::Round) {
    double mean_ht = 0, agree = 0;
    for (auto j : region) {
      mean_ht += last.Htilde(j);
      if (axis_cylinder) {
        agree += last.normal(0, j);  // cylinder outer normal is +r
      } else {
        const Eigen::Vector2d out_n =
            (last.vertices.col(j) - outer_ref).normalized();
        agree += last.normal.col(j).dot(out_n);
      }
    }
    mean_ht /= region.size();
    rep.normal_agreement = agree / region.size();
    if (mean_ht > kSignBand)
      rep.collapse_side = CollapseSide::Inside;
    else if (mean_ht < -kSignBand)
      rep.collapse_side = CollapseSide::Outside;
  }
  return rep;
}

int nestedness_violations(const FlowTrajectory& traj, int stride) {
  if (traj.snapshots.empty()) throw InsufficientHistory();
  if (stride < 1) throw Error("nestedness_violations: stride must be positive");
  const int sign = uniform_sign(require_derived(traj.snapshots.front()));
  if (sign == 0) throw MixedSign();

  std::vector<const GeometrySnapshot*> sel;
  for (std::size_t k = 0; k < traj.snapshots.size(); k += stride)
    sel.push_back(&traj.snapshots[k]);
  if (sel.back() != &traj.snapshots.back())
    sel.push_back(&traj.snapshots.back());

  int violations = 0;
  for (std::size_t e = 0; e < sel.size(); ++e) {
    for (std::size_t l = e + 1; l < sel.size(); ++l) {
      for (Eigen::Index v = 0; v < sel[l]->size(); ++v) {
        const Side side = side_of(*sel[e], sel[l]->vertices.col(v));
        const bool bad =
            sign > 0 ? side == Side::Outside : side == Side::Inside;
        if (bad) ++violations;
      }
    }
  }
  return violations;
}

}  // namespace rmcf
