// Acceptance gate: one pass/fail line per criterion, pinned tolerances.
// Exit code 0 iff every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>

#include "rmcflab/diagnostics.hpp"
#include "rmcflab/harness.hpp"
#include "rmcflab/shrinkers.hpp"
#include "rmcflab/spectral.hpp"

using namespace rmcf;

namespace {

int failures = 0;

void report(int criterion, const char* title, bool pass, const std::string& detail) {
  std::printf("[%2d] %-28s %s  %s\n", criterion, title, pass ? "PASS" : "FAIL",
              detail.c_str());
  if (!pass) ++failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

GeometrySnapshot circle(double r, int n) {
  GeometrySnapshot g;
  g.vertices.resize(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    g.vertices.col(k) = Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
  }
  return differential_quantities(std::move(g));
}

FlowTrajectory flow_from(GeometrySnapshot initial, FlowMode mode, double t_max) {
  FlowConfig cfg;
  cfg.mode = mode;
  initial.time = mode == FlowMode::MCF ? -1.0 : 0.0;
  cfg.initial = std::move(initial);
  cfg.t_max = mode == FlowMode::MCF ? 0.0 : t_max;
  return run(cfg);
}

// construct -> eigens -> perturb -> classify, as the experiment harness does
GeometrySnapshot perturbed_initial(const GeometrySnapshot& shrinker, int sign,
                                   int flow_vertices) {
  const EigenPair pair = first_eigenpair(assemble_L(shrinker));
  const double s = epsilon_search(shrinker, pair.phi, sign);
  GeometrySnapshot g = perturb({shrinker, pair.phi, s});
  if (flow_vertices > 0 && flow_vertices != g.size())
    g = differential_quantities(resample(g, flow_vertices));
  return g;
}

FlowTrajectory thin_trajectory(const FlowTrajectory& traj, int cap) {
  FlowTrajectory out;
  out.mode = traj.mode;
  out.termination = traj.termination;
  out.final_time = traj.final_time;
  out.series = traj.series;
  for (const auto& s : traj.snapshots)
    out.snapshots.push_back(
        s.size() > cap ? differential_quantities(resample(s, cap)) : s);
  return out;
}

std::string tangent_name(TangentType t) {
  switch (t) {
    case TangentType::Cylindrical: return "cylindrical";
    case TangentType::Round: return "round";
    case TangentType::Cusp: return "cusp";
    default: return "unresolved";
  }
}

std::string side_name(CollapseSide s) {
  switch (s) {
    case CollapseSide::Inside: return "inside";
    case CollapseSide::Outside: return "outside";
    default: return "n/a";
  }
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

int main() {
  // ---- shared constructions and runs ------------------------------------

  const auto t_c1 = std::chrono::steady_clock::now();
  const GeometrySnapshot circle_shrinker = round_shrinker(1, 2048);
  // the sphere profile is measured at n = 1024: at 2048 the residual is pure
  // coordinate roundoff amplified by 1/h^2 (~2.5e-10 floor), not discretization
  const GeometrySnapshot sphere_shrinker = round_shrinker(2, 1024);
  const double res_circle = shrinker_residual(circle_shrinker);
  const double res_sphere = shrinker_residual(sphere_shrinker);

  ShrinkerSpec al_spec;
  al_spec.kind = ShrinkerKind::AbreschLanger;
  const auto t_al = std::chrono::steady_clock::now();
  const ShootingResult al = shoot_abresch_langer(al_spec);
  const double al_secs = seconds_since(t_al);

  ShrinkerSpec torus_spec;
  torus_spec.kind = ShrinkerKind::AngenentTorus;
  const auto t_torus = std::chrono::steady_clock::now();
  const ShootingResult torus = shoot_angenent_torus(torus_spec);
  const double torus_secs = seconds_since(t_torus);
  (void)t_c1;

  report(1, "shrinker construction",
         res_circle < 1e-10 && res_sphere < 1e-10 && al.residual <= 1e-6 &&
             torus.residual <= 1e-6 && al_secs <= 30.0 && torus_secs <= 30.0,
         "circle " + fmt(res_circle) + " (n 2048), sphere " + fmt(res_sphere) +
             " (n 1024), AL(2,3) " +
             fmt(al.residual) + " in " + fmt(al_secs) + "s, torus " +
             fmt(torus.residual) + " in " + fmt(torus_secs) + "s");

  // ---- criterion 2: circle collapse anchor ------------------------------

  const FlowTrajectory c128 = flow_from(circle(1.0, 128), FlowMode::RMCF, 10.0);
  const FlowTrajectory c256 = flow_from(circle(1.0, 256), FlowMode::RMCF, 10.0);
  const FlowTrajectory c512 = flow_from(circle(1.0, 512), FlowMode::RMCF, 10.0);
  {
    const double t128 = singular_time_estimate(c128);
    const double t256 = singular_time_estimate(c256);
    const double t512 = singular_time_estimate(c512);
    const double t_star = t512 + (t512 - t256) / 3.0;  // Richardson, order 2
    const double order = std::log2(std::abs((t128 - t256) / (t256 - t512)));
    const double tau256 = singular_time_estimate(rmcf_to_mcf(c256));
    const double tau512 = singular_time_estimate(rmcf_to_mcf(c512));
    const double tau_star = tau512 + (tau512 - tau256) / 3.0;
    report(2, "circle collapse anchor",
           std::abs(t_star - std::log(2.0)) <= 1e-3 &&
               std::abs(tau_star + 0.5) <= 1e-3,
           "t* = " + fmt(t_star) + " (ln 2 = " + fmt(std::log(2.0)) +
               ", observed order " + fmt(order) + "), transported tau* = " +
               fmt(tau_star));
  }

  // ---- torus runs (shared by criteria 3, 4, 5, 6, 9) --------------------

  const GeometrySnapshot torus_in_initial =
      perturbed_initial(torus.geometry, -1, 512);
  const GeometrySnapshot torus_out_initial =
      perturbed_initial(torus.geometry, 1, 512);
  const FlowTrajectory torus_in = flow_from(torus_in_initial, FlowMode::RMCF, 10.0);
  const FlowTrajectory torus_out = flow_from(torus_out_initial, FlowMode::RMCF, 10.0);

  {
    double worst_in = 1e300, worst_out = -1e300;
    for (const auto& d : torus_in.series) worst_in = std::min(worst_in, d.min_htilde);
    for (const auto& d : torus_out.series)
      worst_out = std::max(worst_out, d.max_htilde);
    report(3, "sign preservation",
           worst_in > 0 && worst_out < 0,
           "torus-inward min Htilde " + fmt(worst_in) + ", torus-outward max Htilde " +
               fmt(worst_out) + " over every stored slice");
  }

  const FlowTrajectory expand = flow_from(circle(1.6, 256), FlowMode::RMCF, 3.0);
  report(4, "finite-time singularity",
         torus_in.termination == Termination::BlowUp && torus_in.final_time <= 10.0 &&
             torus_out.termination == Termination::BlowUp &&
             torus_out.final_time <= 10.0 &&
             expand.termination == Termination::ReachedTMax,
         "torus-inward t = " + fmt(torus_in.final_time) + ", torus-outward t = " +
             fmt(torus_out.final_time) + ", circle-expand reached t_max = 3");

  {
    const FlowTrajectory scan = thin_trajectory(torus_in, 384);
    double d0 = 0, worst = 1e300;
    for (std::size_t k = 0; k < scan.snapshots.size(); ++k) {
      const double d = noncollapse_delta(scan.snapshots[k]).delta_in;
      if (k == 0)
        d0 = d;
      else
        worst = std::min(worst, d / d0);
    }
    double worst_circle = 0;
    for (const auto& s : c512.snapshots) {
      if (s.time > 0.5) continue;  // resolved regime of the closed form
      const double d = noncollapse_delta(s).delta_in;
      worst_circle =
          std::max(worst_circle, std::abs(d / (std::exp(s.time) / 2.0) - 1.0));
    }
    report(5, "non-collapsing",
           worst >= 1.0 - 1e-3 && worst_circle <= 1e-2,
           "torus-inward delta_in(t)/delta_in(0) >= " + fmt(worst) +
               ", circle vs (2-r0^2)e^t/2 within " + fmt(worst_circle));
  }

  {
    const SingularityReport in = detect_and_classify(torus_in);
    const SingularityReport out = detect_and_classify(torus_out);
    const SingularityReport in_mcf = detect_and_classify(rmcf_to_mcf(torus_in));
    const SingularityReport out_mcf = detect_and_classify(rmcf_to_mcf(torus_out));
    const bool classified =
        in.tangent_type == TangentType::Cylindrical &&
        in.collapse_side == CollapseSide::Inside &&
        out.tangent_type == TangentType::Cylindrical &&
        out.collapse_side == CollapseSide::Outside;
    const bool quality = in.fit_residual <= 0.02 && out.fit_residual <= 0.02 &&
                         std::abs(in.decay_exponent - 0.5) <= 0.05 &&
                         std::abs(out.decay_exponent - 0.5) <= 0.05;
    const bool transported = in_mcf.tangent_type == in.tangent_type &&
                             in_mcf.collapse_side == in.collapse_side &&
                             out_mcf.tangent_type == out.tangent_type &&
                             out_mcf.collapse_side == out.collapse_side;
    report(6, "bifurcation of collapse",
           classified && quality && transported,
           "inward (" + tangent_name(in.tangent_type) + ", " +
               side_name(in.collapse_side) + ", fit " + fmt(in.fit_residual) +
               ", alpha " + fmt(in.decay_exponent) + "); outward (" +
               tangent_name(out.tangent_type) + ", " + side_name(out.collapse_side) +
               ", fit " + fmt(out.fit_residual) + ", alpha " +
               fmt(out.decay_exponent) + "); MCF transport identical: " +
               (transported ? "yes" : "no"));
  }

  {
    // smooth probe window of the torus-inward run, plus the analytic circles;
    // the window comes from a short high-resolution rerun so the probe levels
    // stay below the source resolution (a 512-knot spline has nothing left to
    // converge to at n = 768)
    FlowConfig hi;
    hi.mode = FlowMode::RMCF;
    hi.initial = perturbed_initial(torus.geometry, -1, 1024);
    hi.initial.time = 0.0;
    hi.t_max = 0.12;
    const FlowTrajectory torus_hi = run(hi);
    auto window = interpolate_snapshot(torus_hi, 0.05);
    const auto spatial =
        verify_evolution_identities(window, {128, 256, 512}, {5e-5, 5e-5, 5e-5});
    const auto temporal = verify_evolution_identities(
        window, {192, 192, 192}, {6e-4, 3e-4, 1.5e-4});
    auto min_of = [](const IdentityErrors& o) {
      return std::min({o.metric, o.det_g, o.normal, o.mean_curvature, o.weight,
                       o.rescaled});
    };
    const double s_min = spatial.has_spatial_order ? min_of(spatial.spatial_order) : 0;
    const double t_min =
        temporal.has_temporal_order ? min_of(temporal.temporal_order) : 0;
    const double exact1 =
        verify_evolution_identities(circle(1.0, 128), {128}, {5e-5}).errors[0].max();
    // coarser grid for the larger circle: the centered time difference sits on
    // a roundoff floor ~ eps R / (h^2 dt), so matching h (not n) keeps it low
    const double exact2 =
        verify_evolution_identities(circle(1.6, 96), {96}, {5e-5}).errors[0].max();
    report(7, "evolution identities",
           s_min >= 1.8 && t_min >= 0.9 && exact1 <= 1e-8 && exact2 <= 1e-8,
           "torus window orders: spatial >= " + fmt(s_min) + ", temporal >= " +
               fmt(t_min) + "; circle closure " + fmt(exact1) + " / " + fmt(exact2));
  }

  {
    const FlowTrajectory inner = flow_from(circle(1.0, 1024), FlowMode::MCF, 0.0);
    const FlowTrajectory outer = flow_from(circle(2.0, 1024), FlowMode::MCF, 0.0);
    const AvoidanceReport rep = avoidance_check(inner, outer);
    double worst_sep = 1e300, worst_dev = 0;
    int compared = 0;
    for (std::size_t k = 0; k < rep.times.size(); ++k) {
      worst_sep = std::min(worst_sep, rep.distance[k] - rep.initial_distance);
      const double s = rep.times[k] + 1.0;
      const double a2 = 1.0 - 2.0 * s;
      if (a2 < 0.25) continue;  // inner circle still resolved
      const double expect = std::sqrt(4.0 - 2.0 * s) - std::sqrt(a2);
      worst_dev = std::max(worst_dev, std::abs(rep.distance[k] - expect));
      ++compared;
    }
    report(8, "avoidance",
           rep.pass && worst_sep >= -1e-3 && worst_dev <= 1e-4 && compared >= 10,
           "separation drop " + fmt(-std::min(worst_sep, 0.0)) +
               ", closed-form deviation " + fmt(worst_dev) + " over " +
               std::to_string(compared) + " slices");
  }

  {
    const int viol_in = nestedness_violations(thin_trajectory(torus_in, 384), 5);
    const int viol_out = nestedness_violations(thin_trajectory(torus_out, 384), 5);
    report(9, "nestedness", viol_in == 0 && viol_out == 0,
           "torus-inward " + std::to_string(viol_in) + ", torus-outward " +
               std::to_string(viol_out) + " violations");
  }

  {
    const GeometrySnapshot al_out_initial = perturbed_initial(al.geometry, 1, 768);
    const FlowTrajectory al_out = flow_from(al_out_initial, FlowMode::RMCF, 3.0);
    const FlowTrajectory al_scan = thin_trajectory(al_out, 384);
    bool monotone = al_out.termination == Termination::ReachedTMax;
    double first = 0, last = 0, prev = 1e300;
    for (std::size_t k = 0; k < al_scan.snapshots.size(); ++k) {
      const double r = isoperimetric_ratio(al_scan.snapshots[k]);
      if (k == 0) first = r;
      monotone = monotone && r <= prev + 1e-5;
      prev = r;
      last = r;
    }
    const bool outward_ok = monotone && last < first - 1e-4;

    const GeometrySnapshot al_in_initial = perturbed_initial(al.geometry, -1, 768);
    const FlowTrajectory al_in = flow_from(al_in_initial, FlowMode::RMCF, 10.0);
    bool inward_ok = al_in.termination == Termination::BlowUp;
    std::string inward_detail = "no blow-up";
    if (inward_ok) {
      const SingularityReport s = detect_and_classify(al_in);
      inward_ok = s.tangent_type == TangentType::Cusp ||
                  s.tangent_type == TangentType::Round;
      inward_detail = tangent_name(s.tangent_type) + " at t = " + fmt(al_in.final_time);
    }
    report(10, "Abresch-Langer dynamic", outward_ok && inward_ok,
           "outward ratio " + fmt(first) + " -> " + fmt(last) +
               (monotone ? " monotone" : " NOT monotone") + "; inward " +
               inward_detail);
  }

  std::printf("%s\n", failures == 0 ? "ACCEPTANCE: all criteria pass"
                                    : "ACCEPTANCE: FAILURES PRESENT");
  return failures == 0 ? 0 : 1;
}
