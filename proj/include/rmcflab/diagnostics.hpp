#pragma once

#include <limits>
#include <vector>

#include "rmcflab/flow.hpp"
#include "rmcflab/geometry.hpp"

namespace rmcf {

// Largest delta > 0 such that a tangent ball of radius delta/|Htilde| fits on
// the collapsing side at every point (delta_in), and the analogue on the
// opposite side (delta_out, +infinity when vacuous).
struct NonCollapseReport {
  double delta_in = 0.0;
  double delta_out = std::numeric_limits<double>::infinity();
  double min_ztilde = 0.0;  // over the constraining pairs, at delta = delta_in
  Eigen::Index argmin_i = -1, argmin_j = -1;
};

struct SignReport {
  int initial_sign = 0;  // +1 rescaled-mean-convex, -1 concave, 0 neither
  bool pass = true;
  double worst_margin = 0.0;  // min over time of sign * (extremal Htilde)
};

struct AvoidanceReport {
  double initial_distance = 0.0;
  std::vector<double> times;
  std::vector<double> distance;
  bool pass = true;
  double tolerance = 1e-3;
};

enum class TangentType { Cylindrical, Round, Cusp, Unresolved };
enum class CollapseSide { Inside, Outside, NotApplicable };

struct SingularityReport {
  double singular_time = 0.0;
  Eigen::Vector2d singular_point = Eigen::Vector2d::Zero();
  double decay_exponent = 0.0;
  double decay_exponent_ci = 0.0;  // two-sigma half width of the fitted slope
  TangentType tangent_type = TangentType::Unresolved;
  CollapseSide collapse_side = CollapseSide::NotApplicable;
  double fit_residual = std::numeric_limits<double>::infinity();
  // secondary signal: mean alignment of surface normals with the fitted
  // cylinder's outer normal (positive = agreement = inside collapse)
  double normal_agreement = 0.0;
};

// Relative defects of the evolution identities, one entry per identity:
//   metric            d/dt g_uu        = -2 Htilde h_uu
//   det_g             d/dt det g       = -2 Htilde H det g
//   normal            d/dt n           = grad Htilde
//   mean_curvature    d/dt H           = Lap Htilde + |h|^2 Htilde
//   weight            d/dt T           = Htilde/2 + <grad f, grad Htilde>
//   rescaled          d/dt Htilde      = L Htilde
// with f = -|x|^2/4 and T = <grad f, n> = Htilde - H.
struct IdentityErrors {
  double metric = 0, det_g = 0, normal = 0;
  double mean_curvature = 0, weight = 0, rescaled = 0;
  double max() const;
};

struct IdentityCheckReport {
  std::vector<int> ns;
  std::vector<double> dts;
  std::vector<IdentityErrors> errors;  // one per refinement level
  IdentityErrors spatial_order{}, temporal_order{};
  bool has_spatial_order = false;   // needs >= 3 levels with dt fixed
  bool has_temporal_order = false;  // needs >= 3 levels with n fixed
};

// Z(x_i, x_j) = (Htilde(i)/2) |X_j - X_i|^2 + delta <X_j - X_i, n_i>.
double ztilde(const GeometrySnapshot& geom, double delta, Eigen::Index i,
              Eigen::Index j);

// Brute-force O(N^2) scan; MixedSign unless Htilde has a uniform sign.
// For convex planar curves delta_out is reported as +infinity directly.
NonCollapseReport noncollapse_delta(const GeometrySnapshot& geom);

// Pass iff the sign of Htilde at the initial slice persists at every
// recorded step. A sign-free (stationary) start passes vacuously.
SignReport sign_preservation(const FlowTrajectory& traj);

// Minimal polyline distance between two disjoint MCF runs at common times;
// pass iff it never drops below the initial distance minus the tolerance.
AvoidanceReport avoidance_check(const FlowTrajectory& a, const FlowTrajectory& b);

// max over vertices of |A| / (|Htilde| / delta_in); curvature pinching holds
// when the returned ratio is <= 1 (circles saturate the bound exactly).
double pinching_check(const GeometrySnapshot& geom, const NonCollapseReport& report);

// Verifies the evolution identities on a short Lagrangian probe window
// centered at the given state: one explicit step backward and forward with
// the probe's own parameter-space discretization, left sides by centered
// time differences, right sides by discrete spatial operators at the center.
// Levels are (n, dt) pairs; convergence orders are fitted when >= 3 levels
// vary exactly one of the two. Closed geometries only.
IdentityCheckReport verify_evolution_identities(const GeometrySnapshot& center,
                                                const std::vector<int>& ns,
                                                const std::vector<double>& dts);

// Same, probing the stored snapshot nearest to time t. ProbeContaminated if
// a redistribution event (vertex-count change) touches the bracketing window.
IdentityCheckReport verify_evolution_identities(const FlowTrajectory& traj, double t,
                                                const std::vector<int>& ns,
                                                const std::vector<double>& dts);

// Locates and classifies the singularity of a trajectory that terminated
// with blow-up: extrapolates (y, T), fits the collapsing scale to
// c (T - t)^alpha, and matches the rescaled local shape against the
// cylindrical / round / cusp templates (circle fit residual <= 2%).
SingularityReport detect_and_classify(const FlowTrajectory& traj);

// Number of (earlier, later, vertex) nestedness violations: for a convex
// start every later snapshot must lie weakly inside every earlier one,
// reversed for a concave start. Snapshots are visited with the given stride.
int nestedness_violations(const FlowTrajectory& traj, int stride = 1);

}  // namespace rmcf
