#include "rmcflab/geometry.hpp"

#include <cmath>

#include "rmcflab/detail/spline.hpp"

namespace rmcf {

namespace {

Eigen::Vector2d mirror_r(const Eigen::Vector2d& p) { return {-p(0), p(1)}; }

// Open axis profiles are handled by reflecting them across the rotation axis
// into a smooth closed curve (the doubled curve).
Eigen::Matrix2Xd doubled_profile(const Eigen::Matrix2Xd& v) {
  const Eigen::Index n = v.cols();
  Eigen::Matrix2Xd out(2, 2 * n - 2);
  out.leftCols(n) = v;
  for (Eigen::Index i = 1; i + 1 < n; ++i) out.col(2 * n - 2 - i) = mirror_r(v.col(i));
  return out;
}

double polyline_diameter(const Eigen::Matrix2Xd& v) {
  const Eigen::Vector2d lo = v.rowwise().minCoeff();
  const Eigen::Vector2d hi = v.rowwise().maxCoeff();
  return (hi - lo).norm();
}

}  // namespace

double diameter(const GeometrySnapshot& geom) { return polyline_diameter(geom.vertices); }

double arclength(const GeometrySnapshot& geom) {
  if (geom.closed) return detail::PeriodicSpline2(geom.vertices).total_arclength();
  return 0.5 * detail::PeriodicSpline2(doubled_profile(geom.vertices)).total_arclength();
}

GeometrySnapshot resample(const GeometrySnapshot& geom, int n_vertices) {
  if (n_vertices < 16) throw Error("resample: n_vertices must be >= 16");
  GeometrySnapshot out = geom;
  out.has_derived = false;
  out.tangent.resize(2, 0);
  out.normal.resize(2, 0);
  if (geom.closed) {
    detail::PeriodicSpline2 spline(geom.vertices);
    if (spline.total_arclength() < 1e-10) throw DegenerateGeometry();
    out.vertices = spline.resample(n_vertices);
  } else {
    detail::PeriodicSpline2 spline(doubled_profile(geom.vertices));
    if (spline.total_arclength() < 1e-10) throw DegenerateGeometry();
    const Eigen::Matrix2Xd full = spline.resample(2 * (n_vertices - 1));
    out.vertices = full.leftCols(n_vertices);
    out.vertices(0, 0) = 0.0;
    out.vertices(0, n_vertices - 1) = 0.0;
  }
  return out;
}

GeometrySnapshot differential_quantities(GeometrySnapshot geom) {
  const Eigen::Index n = geom.size();
  if (n < (geom.closed ? 16 : 9)) throw Error("differential_quantities: too few vertices");
  const double diam = diameter(geom);
  if (diam < 1e-10) throw DegenerateGeometry();

  if (geom.mode == Mode::Revolution) {
    const Eigen::Index lo = geom.closed ? 0 : 1;
    const Eigen::Index hi = geom.closed ? n : n - 1;
    for (Eigen::Index i = lo; i < hi; ++i)
      if (geom.vertices(0, i) <= 0.0) throw AxisCollision();
    if (!geom.closed) {
      if (std::abs(geom.vertices(0, 0)) > 1e-7 * diam ||
          std::abs(geom.vertices(0, n - 1)) > 1e-7 * diam)
        throw Error("open profile endpoints must lie on the axis");
      geom.vertices(0, 0) = 0.0;
      geom.vertices(0, n - 1) = 0.0;
    }
  }

  // neighbor access; open profiles use ghost points reflected across the axis
  auto at = [&](Eigen::Index i) -> Eigen::Vector2d {
    if (geom.closed) return geom.vertices.col(((i % n) + n) % n);
    if (i < 0) return mirror_r(geom.vertices.col(-i));
    if (i >= n) return mirror_r(geom.vertices.col(2 * n - 2 - i));
    return geom.vertices.col(i);
  };

  Eigen::ArrayXd chord(geom.closed ? n : n - 1);
  for (Eigen::Index i = 0; i < chord.size(); ++i)
    chord(i) = (at(i + 1) - at(i)).norm();
  if (chord.minCoeff() < 1e-12 * diam) throw DegenerateGeometry();

  // estimate the uniform arclength step: chords understate arcs by
  // kappa^2 c^2 / 24, so correct with a first-pass chord-normalized curvature
  // (which is exact on circles)
  double h_sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d xm = at(i - 1), x0 = at(i), xp = at(i + 1);
    const double cbar = 0.5 * ((x0 - xm).norm() + (xp - x0).norm());
    Eigen::Vector2d t = (xp - xm).normalized();
    const Eigen::Vector2d nrm(t(1), -t(0));
    const double k0 = (xp - 2.0 * x0 + xm).dot(nrm) / (cbar * cbar);
    h_sum += cbar * (1.0 + k0 * k0 * cbar * cbar / 24.0);
  }
  const double h = h_sum / n;


  // orientation: counterclockwise storage means the outward normal is the
  // clockwise rotation of the tangent (signed-area test; turning-number sign
  // gives the same answer for immersed curves)
  double rot = 1.0;
  if (geom.closed) {
    rot = signed_area(geom) >= 0.0 ? 1.0 : -1.0;
  } else {
    // convention: traversal from the +z axis endpoint toward the -z endpoint
    rot = geom.vertices(1, 0) >= geom.vertices(1, n - 1) ? -1.0 : 1.0;
  }

  geom.tangent.resize(2, n);
  geom.normal.resize(2, n);
  geom.kappa.resize(n);
  geom.H.resize(n);
  geom.Htilde.resize(n);

  // fourth-order centered stencils on the (nominally uniform) arclength grid
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d xm2 = at(i - 2), xm = at(i - 1), x0 = at(i);
    const Eigen::Vector2d xp = at(i + 1), xp2 = at(i + 2);
    Eigen::Vector2d t = xm2 - 8.0 * xm + 8.0 * xp - xp2;
    const double tn = t.norm();
    if (tn < 1e-300) throw DegenerateGeometry();
    t /= tn;
    const Eigen::Vector2d nrm = rot * Eigen::Vector2d(t(1), -t(0));
    const Eigen::Vector2d xss =
        (-xm2 + 16.0 * xm - 30.0 * x0 + 16.0 * xp - xp2) / (12.0 * h * h);
    const double k = -xss.dot(nrm);
    geom.tangent.col(i) = t;
    geom.normal.col(i) = nrm;
    geom.kappa(i) = k;
    double Hval = k;
    if (geom.mode == Mode::Revolution) {
      const double r = x0(0);
      const bool axis_end = !geom.closed && (i == 0 || i == n - 1);
      Hval = axis_end ? 2.0 * k : k + nrm(0) / r;
    }
    geom.H(i) = Hval;
    geom.Htilde(i) = Hval - 0.5 * x0.dot(nrm);
  }

  // arclength elements: chords with the same curvature correction
  geom.edge_ds.resize(chord.size());
  for (Eigen::Index i = 0; i < chord.size(); ++i) {
    const double km = 0.5 * (geom.kappa(i) + geom.kappa((i + 1) % n));
    geom.edge_ds(i) = chord(i) * (1.0 + km * km * chord(i) * chord(i) / 24.0);
  }
  geom.length = geom.edge_ds.sum();
  geom.spacing = geom.length / geom.edge_ds.size();
  geom.has_derived = true;
  return geom;
}

double gaussian_area(const GeometrySnapshot& geom) {
  const GeometrySnapshot g = geom.has_derived ? geom : differential_quantities(geom);
  const Eigen::Index n = g.size();
  auto f = [&](Eigen::Index i) {
    const Eigen::Vector2d x = g.vertices.col(i);
    const double w = std::exp(-x.squaredNorm() / 4.0);
    return g.mode == Mode::Curve ? w : 2.0 * M_PI * x(0) * w;
  };
  double sum = 0;
  if (g.closed) {
    for (Eigen::Index i = 0; i < n; ++i)
      sum += f(i) * 0.5 * (g.edge_ds((i - 1 + n) % n) + g.edge_ds(i));
  } else {
    for (Eigen::Index i = 0; i < n; ++i) {
      const double wl = i > 0 ? 0.5 * g.edge_ds(i - 1) : 0.0;
      const double wr = i < n - 1 ? 0.5 * g.edge_ds(i) : 0.0;
      sum += f(i) * (wl + wr);
    }
  }
  return sum;
}

double signed_area(const GeometrySnapshot& geom) {
  const Eigen::Index n = geom.size();
  double a = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d p = geom.vertices.col(i), q = geom.vertices.col((i + 1) % n);
    a += p(0) * q(1) - q(0) * p(1);
  }
  return 0.5 * a;
}

double total_turning(const GeometrySnapshot& geom) {
  const Eigen::Index n = geom.size();
  double total = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d e0 =
        geom.vertices.col((i + 1) % n) - geom.vertices.col(i);
    const Eigen::Vector2d e1 =
        geom.vertices.col((i + 2) % n) - geom.vertices.col((i + 1) % n);
    total += std::atan2(e0(0) * e1(1) - e0(1) * e1(0), e0.dot(e1));
  }
  return total / (2.0 * M_PI);
}

int turning_number(const GeometrySnapshot& geom) {
  return static_cast<int>(std::lround(total_turning(geom)));
}

double distance_to(const GeometrySnapshot& geom, const Eigen::Vector2d& p) {
  const Eigen::Index n = geom.size();
  const Eigen::Index nseg = geom.closed ? n : n - 1;
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < nseg; ++i) {
    const Eigen::Vector2d a = geom.vertices.col(i), b = geom.vertices.col((i + 1) % n);
    const Eigen::Vector2d ab = b - a;
    const double t = std::clamp(ab.dot(p - a) / std::max(ab.squaredNorm(), 1e-300), 0.0, 1.0);
    best = std::min(best, (a + t * ab - p).norm());
  }
  return best;
}

Side side_of(const GeometrySnapshot& geom, const Eigen::Vector2d& point) {
  if (geom.immersed) throw UnsupportedForImmersed();
  if (!geom.closed) throw Error("side_of requires a closed geometry");
  const double diam = diameter(geom);
  if (distance_to(geom, point) < 1e-9 * diam) return Side::OnBoundary;
  // winding number by signed angle accumulation
  const Eigen::Index n = geom.size();
  double w = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::Vector2d a = geom.vertices.col(i) - point;
    const Eigen::Vector2d b = geom.vertices.col((i + 1) % n) - point;
    w += std::atan2(a(0) * b(1) - a(1) * b(0), a.dot(b));
  }
  return std::abs(w) > M_PI ? Side::Inside : Side::Outside;
}

bool is_self_intersecting(const GeometrySnapshot& geom) {
  const Eigen::Index n = geom.size();
  const Eigen::Index nseg = geom.closed ? n : n - 1;
  auto seg = [&](Eigen::Index i, Eigen::Vector2d& a, Eigen::Vector2d& b) {
    a = geom.vertices.col(i);
    b = geom.vertices.col((i + 1) % n);
  };
  auto cross = [](const Eigen::Vector2d& u, const Eigen::Vector2d& v) {
    return u(0) * v(1) - u(1) * v(0);
  };
  for (Eigen::Index i = 0; i < nseg; ++i) {
    for (Eigen::Index j = i + 2; j < nseg; ++j) {
      if (geom.closed && i == 0 && j == nseg - 1) continue;  // adjacent around the seam
      Eigen::Vector2d a, b, c, d;
      seg(i, a, b);
      seg(j, c, d);
      const double d1 = cross(b - a, c - a), d2 = cross(b - a, d - a);
      const double d3 = cross(d - c, a - c), d4 = cross(d - c, b - c);
      if (((d1 > 0) != (d2 > 0)) && ((d3 > 0) != (d4 > 0))) return true;
    }
  }
  return false;
}

}  // namespace rmcf
