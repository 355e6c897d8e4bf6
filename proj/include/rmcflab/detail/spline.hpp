#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "rmcflab/detail/tridiag.hpp"

namespace rmcf::detail {

// C2 periodic cubic spline through a closed sequence of planar points,
// parametrized by cumulative chord length.
class PeriodicSpline2 {
 public:
  explicit PeriodicSpline2(const Eigen::Matrix2Xd& pts) : pts_(pts) {
    const Eigen::Index n = pts.cols();
    knots_.resize(n + 1);
    knots_(0) = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index j = (i + 1) % n;
      knots_(i + 1) = knots_(i) + (pts.col(j) - pts.col(i)).norm();
    }
    second_.resize(2, n);
    for (int c = 0; c < 2; ++c) second_.row(c) = solve_moments(pts.row(c).transpose());
    build_arclength_table();
  }

  double period() const { return knots_(knots_.size() - 1); }
  double total_arclength() const { return arc_(arc_.size() - 1); }

  Eigen::Vector2d eval(double t) const {
    const auto [i, a, b, h] = locate(t);
    Eigen::Vector2d out;
    for (int c = 0; c < 2; ++c) {
      const double ya = pts_(c, i), yb = pts_(c, (i + 1) % pts_.cols());
      const double ma = second_(c, i), mb = second_(c, (i + 1) % pts_.cols());
      out(c) = a * ya + b * yb +
               ((a * a * a - a) * ma + (b * b * b - b) * mb) * h * h / 6.0;
    }
    return out;
  }

  Eigen::Vector2d deriv(double t) const {
    const auto [i, a, b, h] = locate(t);
    Eigen::Vector2d out;
    for (int c = 0; c < 2; ++c) {
      const double ya = pts_(c, i), yb = pts_(c, (i + 1) % pts_.cols());
      const double ma = second_(c, i), mb = second_(c, (i + 1) % pts_.cols());
      out(c) = (yb - ya) / h +
               ((3 * b * b - 1) * mb - (3 * a * a - 1) * ma) * h / 6.0;
    }
    return out;
  }

  // Parameter value at which arclength from t=0 equals s (s in [0, L]).
  double param_at_arclength(double s) const {
    const double L = total_arclength();
    s = std::clamp(s, 0.0, L);
    // locate segment in the cumulative table
    Eigen::Index lo = 0, hi = arc_.size() - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      (arc_(mid) <= s ? lo : hi) = mid;
    }
    double ta = knots_(lo), tb = knots_(lo + 1);
    double target = s - arc_(lo);
    // Newton with bisection safeguard on g(t) = arc(ta..t) - target
    double t = ta + (tb - ta) * target / std::max(arc_(lo + 1) - arc_(lo), 1e-300);
    double blo = ta, bhi = tb;
    for (int it = 0; it < 60; ++it) {
      const double g = segment_arc(ta, t) - target;
      if (std::abs(g) < 1e-14 * std::max(1.0, L)) break;
      (g > 0 ? bhi : blo) = t;
      const double dg = deriv(std::min(t, tb * (1 - 1e-16))).norm();
      double tn = t - g / std::max(dg, 1e-300);
      if (!(tn > blo && tn < bhi)) tn = 0.5 * (blo + bhi);
      t = tn;
    }
    return t;
  }

  Eigen::Vector2d eval_at_arclength(double s) const { return eval(param_at_arclength(s)); }

  // n points uniformly spaced in arclength, point 0 at vertex 0.
  Eigen::Matrix2Xd resample(int n) const {
    const double L = total_arclength();
    Eigen::Matrix2Xd out(2, n);
    for (int k = 0; k < n; ++k) out.col(k) = eval_at_arclength(L * k / n);
    return out;
  }

 private:
  Eigen::Matrix2Xd pts_;
  Eigen::VectorXd knots_;      // size n+1, cumulative chord parameter
  Eigen::Matrix2Xd second_;    // spline second derivatives at knots
  Eigen::VectorXd arc_;        // size n+1, cumulative true arclength at knots

  Eigen::VectorXd solve_moments(const Eigen::VectorXd& y) const {
    const Eigen::Index n = y.size();
    Eigen::VectorXd diag(n), lower(n), upper(n), rhs(n);
    auto h = [&](Eigen::Index i) {  // h_i = knot spacing of segment starting at i (mod n)
      const Eigen::Index k = ((i % n) + n) % n;
      return knots_(k + 1) - knots_(k);
    };
    auto yv = [&](Eigen::Index i) { return y(((i % n) + n) % n); };
    for (Eigen::Index i = 0; i < n; ++i) {
      const double hm = h(i - 1), hp = h(i);
      lower(i) = hm / 6.0;
      diag(i) = (hm + hp) / 3.0;
      upper(i) = hp / 6.0;
      rhs(i) = (yv(i + 1) - yv(i)) / hp - (yv(i) - yv(i - 1)) / hm;
    }
    return solve_cyclic_tridiagonal(diag, lower, upper, lower(0), upper(n - 1), rhs);
  }

  struct Loc { Eigen::Index i; double a, b, h; };
  Loc locate(double t) const {
    const double T = period();
    t = std::fmod(t, T);
    if (t < 0) t += T;
    Eigen::Index lo = 0, hi = knots_.size() - 1;
    while (hi - lo > 1) {
      const Eigen::Index mid = (lo + hi) / 2;
      (knots_(mid) <= t ? lo : hi) = mid;
    }
    const double h = knots_(lo + 1) - knots_(lo);
    const double b = (t - knots_(lo)) / h;
    return {lo, 1.0 - b, b, h};
  }

  double segment_arc(double ta, double tb) const {
    // 5-point Gauss-Legendre
    static const double xs[5] = {-0.9061798459386640, -0.5384693101056831, 0.0,
                                 0.5384693101056831, 0.9061798459386640};
    static const double ws[5] = {0.2369268850561891, 0.4786286704993665,
                                 0.5688888888888889, 0.4786286704993665,
                                 0.2369268850561891};
    const double c = 0.5 * (ta + tb), r = 0.5 * (tb - ta);
    double sum = 0;
    for (int k = 0; k < 5; ++k) sum += ws[k] * deriv(c + r * xs[k]).norm();
    return sum * r;
  }

  void build_arclength_table() {
    const Eigen::Index n = pts_.cols();
    arc_.resize(n + 1);
    arc_(0) = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
      // composite 2-panel Gauss per segment for a little extra accuracy
      const double ta = knots_(i), tb = knots_(i + 1), tm = 0.5 * (ta + tb);
      arc_(i + 1) = arc_(i) + segment_arc(ta, tm) + segment_arc(tm, tb);
    }
  }
};

}  // namespace rmcf::detail
