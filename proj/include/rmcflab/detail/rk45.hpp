#pragma once

#include <Eigen/Dense>
#include <functional>
#include <vector>

namespace rmcf::detail {

using State3 = Eigen::Vector3d;
using Rhs3 = std::function<State3(double, const State3&)>;
using EventFn = std::function<double(double, const State3&)>;

struct TracePoint {
  double s;
  State3 y;
  State3 dy;
};

struct OdeResult {
  std::vector<TracePoint> trace;
  bool event_hit = false;
  double s_event = 0.0;
  State3 y_event = State3::Zero();
};

// One Dormand-Prince 5(4) step; returns 5th order solution and error estimate.
inline State3 dp54_step(const Rhs3& f, double s, const State3& y, double h, double* err) {
  const State3 k1 = f(s, y);
  const State3 k2 = f(s + h / 5, y + h * (k1 / 5));
  const State3 k3 = f(s + 3 * h / 10, y + h * (3.0 / 40 * k1 + 9.0 / 40 * k2));
  const State3 k4 = f(s + 4 * h / 5, y + h * (44.0 / 45 * k1 - 56.0 / 15 * k2 + 32.0 / 9 * k3));
  const State3 k5 = f(s + 8 * h / 9,
                      y + h * (19372.0 / 6561 * k1 - 25360.0 / 2187 * k2 +
                               64448.0 / 6561 * k3 - 212.0 / 729 * k4));
  const State3 k6 = f(s + h, y + h * (9017.0 / 3168 * k1 - 355.0 / 33 * k2 +
                                      46732.0 / 5247 * k3 + 49.0 / 176 * k4 -
                                      5103.0 / 18656 * k5));
  const State3 y5 = y + h * (35.0 / 384 * k1 + 500.0 / 1113 * k3 + 125.0 / 192 * k4 -
                             2187.0 / 6784 * k5 + 11.0 / 84 * k6);
  const State3 k7 = f(s + h, y5);
  const State3 y4 = y + h * (5179.0 / 57600 * k1 + 7571.0 / 16695 * k3 + 393.0 / 640 * k4 -
                             92097.0 / 339200 * k5 + 187.0 / 2100 * k6 + 1.0 / 40 * k7);
  if (err) *err = (y5 - y4).norm();
  return y5;
}

// Adaptive integration from s0 to s_max. Stops early when the event function
// crosses zero in the requested direction (-1 decreasing, +1 increasing,
// 0 either); the crossing is refined by bisection on the step fraction.
inline OdeResult integrate_dp54(const Rhs3& f, State3 y0, double s0, double s_max,
                                double tol, double h_max,
                                const EventFn& event = nullptr, int event_dir = 0,
                                double event_arm_after = 0.0) {
  OdeResult res;
  double s = s0, h = std::min(h_max, (s_max - s0) / 16);
  State3 y = y0;
  res.trace.push_back({s, y, f(s, y)});
  double ev_prev = event ? event(s, y) : 0.0;
  while (s < s_max) {
    h = std::min(h, s_max - s);
    double err = 0;
    State3 ynew = dp54_step(f, s, y, h, &err);
    const double scale = tol * (1.0 + y.norm());
    if (err > scale && h > 1e-14) {
      h *= std::max(0.2, 0.9 * std::pow(scale / err, 0.2));
      continue;
    }
    const double s_new = s + h;
    if (event && s_new - s0 > event_arm_after) {
      const double ev_new = event(s_new, ynew);
      const bool crossed = (ev_prev < 0 && ev_new >= 0 && event_dir >= 0) ||
                           (ev_prev > 0 && ev_new <= 0 && event_dir <= 0);
      if (crossed) {
        double lo = 0.0, hi = 1.0;
        State3 yhit = ynew;
        for (int it = 0; it < 80; ++it) {
          const double mid = 0.5 * (lo + hi);
          const State3 ymid = dp54_step(f, s, y, mid * h, nullptr);
          const double em = event(s + mid * h, ymid);
          if ((em >= 0) == (ev_new >= 0)) {
            hi = mid;
            yhit = ymid;
          } else {
            lo = mid;
          }
        }
        res.event_hit = true;
        res.s_event = s + 0.5 * (lo + hi) * h;
        res.y_event = yhit;
        res.trace.push_back({res.s_event, yhit, f(res.s_event, yhit)});
        return res;
      }
      ev_prev = ev_new;
    }
    s = s_new;
    y = ynew;
    res.trace.push_back({s, y, f(s, y)});
    if (err > 1e-300) h = std::min(h_max, h * std::min(5.0, 0.9 * std::pow(scale / err, 0.2)));
  }
  return res;
}

// Cubic Hermite interpolation of a stored trace at arbitrary s.
inline State3 sample_trace(const std::vector<TracePoint>& trace, double s) {
  std::size_t lo = 0, hi = trace.size() - 1;
  while (hi - lo > 1) {
    const std::size_t mid = (lo + hi) / 2;
    (trace[mid].s <= s ? lo : hi) = mid;
  }
  const auto& a = trace[lo];
  const auto& b = trace[hi];
  const double h = b.s - a.s;
  if (h <= 0) return a.y;
  const double u = (s - a.s) / h;
  const double h00 = (1 + 2 * u) * (1 - u) * (1 - u);
  const double h10 = u * (1 - u) * (1 - u);
  const double h01 = u * u * (3 - 2 * u);
  const double h11 = u * u * (u - 1);
  return h00 * a.y + h10 * h * a.dy + h01 * b.y + h11 * h * b.dy;
}

}  // namespace rmcf::detail
