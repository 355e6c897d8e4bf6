#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "rmcflab/diagnostics.hpp"
#include "rmcflab/harness.hpp"
#include "rmcflab/io.hpp"
#include "rmcflab/spectral.hpp"

using namespace rmcf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_make_shrinker(const std::string& kind, int dimension, int p, int q,
                      int n, double tolerance, const std::string& out) {
  ShrinkerSpec spec;
  spec.dimension = dimension;
  spec.p = p;
  spec.q = q;
  spec.n_vertices = n;
  spec.tolerance = tolerance;

  GeometrySnapshot geom;
  nlohmann::json sidecar;
  if (kind == "round") {
    geom = round_shrinker(dimension, n);
    sidecar["residual"] = shrinker_residual(geom);
  } else if (kind == "abresch_langer" || kind == "angenent_torus") {
    spec.kind = kind == "abresch_langer" ? ShrinkerKind::AbreschLanger
                                         : ShrinkerKind::AngenentTorus;
    const ShootingResult r = spec.kind == ShrinkerKind::AbreschLanger
                                 ? shoot_abresch_langer(spec)
                                 : shoot_angenent_torus(spec);
    geom = r.geometry;
    sidecar = {{"shooting_parameter", r.shooting_parameter},
               {"closure_error", r.closure_error},
               {"residual", r.residual},
               {"tolerance", tolerance}};
  } else {
    throw Error("unknown shrinker kind \"" + kind + "\"");
  }
  write_geometry(geom, out);
  std::ofstream side(out + ".provenance.json");
  side << sidecar.dump(2) << "\n";
  std::printf("%s: n = %ld, residual = %s\n", out.c_str(), (long)geom.size(),
              format_g17(sidecar["residual"].get<double>()).c_str());
  return 0;
}

int cmd_eigens(const std::string& in, const std::string& out) {
  const GeometrySnapshot geom = read_geometry(in);
  const EigenPair pair = first_eigenpair(assemble_L(geom));
  nlohmann::json j;
  j["mu1"] = pair.mu;
  j["phi"] = std::vector<double>(pair.phi.data(), pair.phi.data() + pair.phi.size());
  std::ofstream os(out);
  os << j.dump() << "\n";
  std::printf("mu1 = %s\n", format_g17(pair.mu).c_str());
  return 0;
}

int cmd_flow(const std::string& config_path, std::string in, std::string out) {
  const ConfigMap m = parse_config(slurp(config_path));
  if (in.empty()) in = m.get("io.input", "");
  if (out.empty()) out = m.get("io.output_prefix", "flow");
  if (in.empty()) throw Error("flow: no input geometry (io.input or --in)");

  FlowConfig f;
  const std::string mode = m.get("flow.mode", "rmcf");
  if (mode == "rmcf")
    f.mode = FlowMode::RMCF;
  else if (mode == "mcf")
    f.mode = FlowMode::MCF;
  else
    throw Error("flow: unknown mode \"" + mode + "\"");
  f.initial = read_geometry(in);
  f.initial.time = f.mode == FlowMode::MCF ? -1.0 : 0.0;
  f.t_max = m.get_num("flow.t_max", f.mode == FlowMode::MCF ? 0.0 : 10.0);
  f.cfl = m.get_num("flow.cfl", f.cfl);
  f.a_max = m.get_num("flow.a_max", f.a_max);
  f.output_every = m.get_num("flow.output_every", f.output_every);
  f.max_vertices = m.get_int("flow.max_vertices", f.max_vertices);

  const FlowTrajectory traj = run(f);
  write_trajectory_jsonl(traj, out + ".jsonl");
  write_series_csv(traj, out + ".csv");
  std::printf("%s at t = %s, %zu snapshots -> %s.jsonl, %s.csv\n",
              traj.termination == Termination::BlowUp ? "blow_up" : "finished",
              format_g17(traj.final_time).c_str(), traj.snapshots.size(),
              out.c_str(), out.c_str());
  return 0;
}

int cmd_diagnose(const std::string& traj_path, const std::string& csv_path,
                 const std::string& mode, double a_max, const std::string& out,
                 const std::string& series_out, int scan_vertices) {
  const FlowTrajectory traj = read_trajectory(
      traj_path, csv_path, mode == "mcf" ? FlowMode::MCF : FlowMode::RMCF, a_max);

  nlohmann::json j;
  bool pass = true;
  const SignReport sign = sign_preservation(traj);
  pass = pass && sign.pass;
  j["sign"] = {{"initial_sign", sign.initial_sign},
               {"pass", sign.pass},
               {"worst_margin", sign.worst_margin}};

  std::ostringstream csv;
  csv << "time,delta_in,delta_out,min_Htilde,max_Htilde\n";
  for (const auto& s : traj.snapshots) {
    const GeometrySnapshot g =
        s.size() > scan_vertices
            ? differential_quantities(resample(s, scan_vertices))
            : s;
    double din = std::numeric_limits<double>::quiet_NaN(), dout = din;
    try {
      const NonCollapseReport nc = noncollapse_delta(g);
      din = nc.delta_in;
      dout = nc.delta_out;
    } catch (const MixedSign&) {
    }
    csv << format_g17(g.time) << ',' << format_g17(din) << ','
        << format_g17(dout) << ',' << format_g17(g.Htilde.minCoeff()) << ','
        << format_g17(g.Htilde.maxCoeff()) << '\n';
  }
  if (!series_out.empty()) {
    std::ofstream os(series_out);
    os << csv.str();
  }

  if (traj.termination == Termination::BlowUp) {
    const SingularityReport s = detect_and_classify(traj);
    pass = pass && s.tangent_type != TangentType::Unresolved;
    const char* tangent = s.tangent_type == TangentType::Cylindrical ? "cylindrical"
                          : s.tangent_type == TangentType::Round     ? "round"
                          : s.tangent_type == TangentType::Cusp      ? "cusp"
                                                                     : "unresolved";
    const char* side = s.collapse_side == CollapseSide::Inside    ? "inside"
                       : s.collapse_side == CollapseSide::Outside ? "outside"
                                                                  : "n/a";
    j["singularity"] = {{"singular_time", s.singular_time},
                        {"singular_point", {s.singular_point.x(), s.singular_point.y()}},
                        {"decay_exponent", s.decay_exponent},
                        {"decay_exponent_ci", s.decay_exponent_ci},
                        {"tangent_type", tangent},
                        {"collapse_side", side},
                        {"fit_residual", s.fit_residual},
                        {"normal_agreement", s.normal_agreement}};
    std::printf("singularity: %s, %s, T = %s\n", tangent, side,
                format_g17(s.singular_time).c_str());
  }
  j["pass"] = pass;
  std::ofstream os(out);
  os << j.dump(2) << "\n";
  std::printf("sign: %s -> %s\n", sign.pass ? "preserved" : "violated", out.c_str());
  return pass ? 0 : 1;
}

int cmd_verify_identities(const std::string& in, const std::string& traj_path,
                          double t, std::vector<int> ns, std::vector<double> dts,
                          const std::string& out, double min_spatial,
                          double min_temporal) {
  if (ns.size() != dts.size() || ns.empty())
    throw Error("verify-identities: --ns and --dts must have equal nonzero length");
  IdentityCheckReport rep;
  if (!traj_path.empty()) {
    const FlowTrajectory traj = read_trajectory(traj_path);
    rep = verify_evolution_identities(traj, t, ns, dts);
  } else if (!in.empty()) {
    rep = verify_evolution_identities(read_geometry(in), ns, dts);
  } else {
    throw Error("verify-identities: need --in or --traj");
  }

  std::ostringstream csv;
  csv << "n,dt,metric,det_g,normal,mean_curvature,weight,rescaled\n";
  for (std::size_t k = 0; k < rep.errors.size(); ++k) {
    const IdentityErrors& e = rep.errors[k];
    csv << rep.ns[k] << ',' << format_g17(rep.dts[k]) << ','
        << format_g17(e.metric) << ',' << format_g17(e.det_g) << ','
        << format_g17(e.normal) << ',' << format_g17(e.mean_curvature) << ','
        << format_g17(e.weight) << ',' << format_g17(e.rescaled) << '\n';
  }
  auto order_row = [&](const char* label, const IdentityErrors& o) {
    csv << label << ",," << format_g17(o.metric) << ',' << format_g17(o.det_g)
        << ',' << format_g17(o.normal) << ',' << format_g17(o.mean_curvature)
        << ',' << format_g17(o.weight) << ',' << format_g17(o.rescaled) << '\n';
  };
  if (rep.has_spatial_order) order_row("spatial_order", rep.spatial_order);
  if (rep.has_temporal_order) order_row("temporal_order", rep.temporal_order);
  std::ofstream os(out);
  os << csv.str();
  std::printf("%s\n", csv.str().c_str());

  bool pass = true;
  auto gate = [&](const IdentityErrors& o, double lo) {
    pass = pass && o.metric >= lo && o.det_g >= lo && o.normal >= lo &&
           o.mean_curvature >= lo && o.weight >= lo && o.rescaled >= lo;
  };
  if (min_spatial > 0 && rep.has_spatial_order) gate(rep.spatial_order, min_spatial);
  if (min_spatial > 0 && !rep.has_spatial_order) pass = false;
  if (min_temporal > 0 && rep.has_temporal_order) gate(rep.temporal_order, min_temporal);
  if (min_temporal > 0 && !rep.has_temporal_order) pass = false;
  return pass ? 0 : 1;
}

int cmd_run(const std::string& name, const std::string& config_path) {
  ExperimentConfig cfg;
  if (!config_path.empty())
    cfg = config_from_text(slurp(config_path));
  else if (!name.empty())
    cfg = canned_experiment(name);
  else
    throw Error("run: need an experiment name or --config");
  const RunManifest m = run_experiment(cfg);
  for (const auto& c : m.checks)
    std::printf("%-24s %s  %s\n", c.name.c_str(), c.pass ? "PASS" : "FAIL",
                c.detail.c_str());
  std::printf("%s: %s (artifacts under %s)\n", m.experiment.c_str(),
              m.all_pass() ? "PASS" : "FAIL", cfg.out_dir.c_str());
  return m.all_pass() ? 0 : 1;
}

int cmd_registry(const std::string& action, const std::string& path) {
  const RegistryReport rep = regression_registry(action, path);
  for (const auto& e : rep.entries)
    std::printf("%-32s %s  %s\n", e.name.c_str(), e.pass ? "PASS" : "FAIL",
                e.detail.c_str());
  return rep.pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rmcflab: closed self-shrinkers, rescaled mean curvature flow, "
               "and singularity diagnostics"};
  app.require_subcommand(1);

  // make-shrinker
  std::string ms_kind = "round", ms_out = "shrinker.json";
  int ms_dim = 1, ms_p = 2, ms_q = 3, ms_n = 2048;
  double ms_tol = 1e-12;
  auto* ms = app.add_subcommand("make-shrinker", "construct a self-shrinker");
  ms->add_option("--kind", ms_kind, "round | abresch_langer | angenent_torus");
  ms->add_option("--dimension", ms_dim, "1 = circle, 2 = sphere profile (round)");
  ms->add_option("--p", ms_p, "rotation index (abresch_langer)");
  ms->add_option("--q", ms_q, "petal count (abresch_langer)");
  ms->add_option("--n", ms_n, "vertex count");
  ms->add_option("--tolerance", ms_tol, "shooting tolerance");
  ms->add_option("--out", ms_out, "output geometry JSON");

  // eigens
  std::string eg_in, eg_out = "eigen.json";
  auto* eg = app.add_subcommand("eigens", "first eigenpair of the linearized operator");
  eg->add_option("--in", eg_in, "shrinker geometry JSON")->required();
  eg->add_option("--out", eg_out, "output JSON (mu1, phi)");

  // flow
  std::string fl_cfg, fl_in, fl_out;
  auto* fl = app.add_subcommand("flow", "evolve a geometry under (R)MCF");
  fl->add_option("--config", fl_cfg, "config file with a [flow] section")->required();
  fl->add_option("--in", fl_in, "input geometry JSON (overrides io.input)");
  fl->add_option("--out", fl_out, "output prefix (overrides io.output_prefix)");

  // diagnose
  std::string dg_traj, dg_csv, dg_mode = "rmcf", dg_out = "diagnostics.json",
              dg_series = "diagnostics.csv";
  double dg_amax = 1e3;
  int dg_scan = 384;
  auto* dg = app.add_subcommand("diagnose", "diagnostics report for a trajectory");
  dg->add_option("--traj", dg_traj, "trajectory JSONL")->required();
  dg->add_option("--csv", dg_csv, "step series CSV from the same run");
  dg->add_option("--mode", dg_mode, "rmcf | mcf");
  dg->add_option("--a-max", dg_amax, "curvature threshold used by the run");
  dg->add_option("--out", dg_out, "report JSON");
  dg->add_option("--series", dg_series, "time series CSV");
  dg->add_option("--scan-vertices", dg_scan, "thin snapshots for O(N^2) scans");

  // verify-identities
  std::string vi_in, vi_traj, vi_out = "identities.csv";
  double vi_t = 0.0, vi_min_s = 0.0, vi_min_t = 0.0;
  std::vector<int> vi_ns;
  std::vector<double> vi_dts;
  auto* vi = app.add_subcommand("verify-identities",
                                "evolution identity error/order table");
  vi->add_option("--in", vi_in, "geometry JSON");
  vi->add_option("--traj", vi_traj, "trajectory JSONL (probe a stored snapshot)");
  vi->add_option("--t", vi_t, "probe time within the trajectory");
  vi->add_option("--ns", vi_ns, "vertex counts, one per level")->required();
  vi->add_option("--dts", vi_dts, "probe time steps, one per level")->required();
  vi->add_option("--out", vi_out, "output CSV");
  vi->add_option("--min-spatial", vi_min_s, "fail unless spatial order >= this");
  vi->add_option("--min-temporal", vi_min_t, "fail unless temporal order >= this");

  // run
  std::string rn_name, rn_cfg;
  auto* rn = app.add_subcommand("run", "run a canned or configured experiment");
  rn->add_option("name", rn_name,
                 "circle-collapse | circle-expand | torus-inward | torus-outward"
                 " | abresch-langer-inward | abresch-langer-outward | avoidance-demo");
  rn->add_option("--config", rn_cfg, "experiment config file");

  // registry
  std::string rg_action, rg_path = "data/registry.json";
  auto* rg = app.add_subcommand("registry", "derived-constant regression registry");
  rg->add_option("action", rg_action, "freeze | check")->required();
  rg->add_option("--path", rg_path, "registry file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (ms->parsed())
      return cmd_make_shrinker(ms_kind, ms_dim, ms_p, ms_q, ms_n, ms_tol, ms_out);
    if (eg->parsed()) return cmd_eigens(eg_in, eg_out);
    if (fl->parsed()) return cmd_flow(fl_cfg, fl_in, fl_out);
    if (dg->parsed())
      return cmd_diagnose(dg_traj, dg_csv, dg_mode, dg_amax, dg_out, dg_series,
                          dg_scan);
    if (vi->parsed())
      return cmd_verify_identities(vi_in, vi_traj, vi_t, vi_ns, vi_dts, vi_out,
                                   vi_min_s, vi_min_t);
    if (rn->parsed()) return cmd_run(rn_name, rn_cfg);
    if (rg->parsed()) return cmd_registry(rg_action, rg_path);
  } catch (const Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 2;
}
