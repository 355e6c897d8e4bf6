#pragma once

#include <Eigen/Dense>

namespace rmcf::detail {

// Thomas algorithm for a tridiagonal system. diag/lower/upper are the three
// bands; lower[i] couples row i to i-1, upper[i] couples row i to i+1.
inline Eigen::VectorXd solve_tridiagonal(Eigen::VectorXd diag,
                                         const Eigen::VectorXd& lower,
                                         const Eigen::VectorXd& upper,
                                         Eigen::VectorXd rhs) {
  const Eigen::Index n = diag.size();
  for (Eigen::Index i = 1; i < n; ++i) {
    const double m = lower(i) / diag(i - 1);
    diag(i) -= m * upper(i - 1);
    rhs(i) -= m * rhs(i - 1);
  }
  Eigen::VectorXd x(n);
  x(n - 1) = rhs(n - 1) / diag(n - 1);
  for (Eigen::Index i = n - 2; i >= 0; --i)
    x(i) = (rhs(i) - upper(i) * x(i + 1)) / diag(i);
  return x;
}

// Cyclic tridiagonal solve via Sherman-Morrison. corner_lo is the (0, n-1)
// entry, corner_up the (n-1, 0) entry.
inline Eigen::VectorXd solve_cyclic_tridiagonal(const Eigen::VectorXd& diag,
                                                const Eigen::VectorXd& lower,
                                                const Eigen::VectorXd& upper,
                                                double corner_lo,
                                                double corner_up,
                                                const Eigen::VectorXd& rhs) {
  const Eigen::Index n = diag.size();
  const double gamma = -diag(0);
  Eigen::VectorXd d = diag;
  d(0) -= gamma;
  d(n - 1) -= corner_lo * corner_up / gamma;
  Eigen::VectorXd u = Eigen::VectorXd::Zero(n);
  u(0) = gamma;
  u(n - 1) = corner_up;
  const Eigen::VectorXd y = solve_tridiagonal(d, lower, upper, rhs);
  const Eigen::VectorXd z = solve_tridiagonal(d, lower, upper, u);
  const double frac =
      (y(0) + corner_lo * y(n - 1) / gamma) / (1.0 + z(0) + corner_lo * z(n - 1) / gamma);
  return y - frac * z;
}

}  // namespace rmcf::detail
