#include "rmcflab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "rmcflab/io.hpp"
#include "rmcflab/spectral.hpp"

namespace rmcf {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("harness: cannot write " + path);
  out << text;
  if (!out) throw Error("harness: short write to " + path);
}

std::string kind_name(ShrinkerKind k) {
  switch (k) {
    case ShrinkerKind::Round: return "round";
    case ShrinkerKind::AbreschLanger: return "abresch_langer";
    case ShrinkerKind::AngenentTorus: return "angenent_torus";
  }
  return "round";
}

ShrinkerKind kind_of(const std::string& name) {
  if (name == "round") return ShrinkerKind::Round;
  if (name == "abresch_langer") return ShrinkerKind::AbreschLanger;
  if (name == "angenent_torus") return ShrinkerKind::AngenentTorus;
  throw Error("harness: unknown shrinker kind \"" + name + "\"");
}

std::string tangent_name(TangentType t) {
  switch (t) {
    case TangentType::Cylindrical: return "cylindrical";
    case TangentType::Round: return "round";
    case TangentType::Cusp: return "cusp";
    case TangentType::Unresolved: return "unresolved";
  }
  return "unresolved";
}

std::string side_name(CollapseSide s) {
  switch (s) {
    case CollapseSide::Inside: return "inside";
    case CollapseSide::Outside: return "outside";
    case CollapseSide::NotApplicable: return "n/a";
  }
  return "n/a";
}

GeometrySnapshot thin(const GeometrySnapshot& g, int cap) {
  if (g.size() <= cap) return g;
  return differential_quantities(resample(g, cap));
}

FlowTrajectory thin_trajectory(const FlowTrajectory& traj, int cap) {
  FlowTrajectory out;
  out.mode = traj.mode;
  out.termination = traj.termination;
  out.final_time = traj.final_time;
  out.series = traj.series;
  for (const auto& s : traj.snapshots) out.snapshots.push_back(thin(s, cap));
  return out;
}

FlowConfig flow_config_of(const ExperimentConfig& c, GeometrySnapshot initial) {
  FlowConfig f;
  f.mode = c.mode;
  initial.time = c.mode == FlowMode::MCF ? -1.0 : 0.0;
  f.initial = std::move(initial);
  f.t_max = c.mode == FlowMode::MCF ? std::min(c.t_max, 0.0) : c.t_max;
  f.cfl = c.cfl;
  f.a_max = c.a_max;
  f.output_every = c.output_every;
  f.max_vertices = c.max_vertices;
  return f;
}

}  // namespace

std::string ConfigMap::get(const std::string& key, const std::string& fallback) const {
  const auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigMap::get_num(const std::string& key, double fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (trim(it->second.substr(used)).empty()) return v;
  } catch (const std::exception&) {
  }
  throw Error("harness: config value " + key + " = \"" + it->second +
              "\" is not a number");
}

int ConfigMap::get_int(const std::string& key, int fallback) const {
  const double v = get_num(key, fallback);
  if (v != std::floor(v)) throw Error("harness: config value " + key + " must be an integer");
  return static_cast<int>(v);
}

bool ConfigMap::get_bool(const std::string& key, bool fallback) const {
  const auto it = values.find(key);
  if (it == values.end()) return fallback;
  if (it->second == "true" || it->second == "1" || it->second == "yes") return true;
  if (it->second == "false" || it->second == "0" || it->second == "no") return false;
  throw Error("harness: config value " + key + " must be a boolean");
}

ConfigMap parse_config(const std::string& text) {
  ConfigMap map;
  std::istringstream lines(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#' || t[0] == ';') continue;
    if (t.front() == '[') {
      if (t.back() != ']' || t.size() < 3)
        throw Error("harness: bad section header at line " + std::to_string(lineno));
      section = trim(t.substr(1, t.size() - 2));
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw Error("harness: expected key = value at line " + std::to_string(lineno));
    const std::string key = trim(t.substr(0, eq));
    if (key.empty() || section.empty())
      throw Error("harness: key outside a section at line " + std::to_string(lineno));
    map.values[section + "." + key] = trim(t.substr(eq + 1));
  }
  return map;
}

std::string config_to_text(const ExperimentConfig& c) {
  std::ostringstream out;
  out << "[experiment]\nname = " << c.name << "\n\n";
  out << "[shrinker]\nkind = " << kind_name(c.shrinker.kind)
      << "\ndimension = " << c.shrinker.dimension << "\np = " << c.shrinker.p
      << "\nq = " << c.shrinker.q << "\nn_vertices = " << c.shrinker.n_vertices
      << "\ntolerance = " << format_g17(c.shrinker.tolerance)
      << "\nflow_vertices = " << c.flow_vertices << "\n\n";
  out << "[perturbation]\nsource = " << c.perturb_source << "\nfile = "
      << c.perturb_file << "\namplitude = " << format_g17(c.amplitude)
      << "\nsign = " << c.perturb_sign << "\n\n";
  out << "[flow]\nmode = " << (c.mode == FlowMode::RMCF ? "rmcf" : "mcf")
      << "\nt_max = " << format_g17(c.t_max) << "\ncfl = " << format_g17(c.cfl)
      << "\na_max = " << format_g17(c.a_max)
      << "\noutput_every = " << format_g17(c.output_every)
      << "\nmax_vertices = " << c.max_vertices << "\n\n";
  out << "[diagnostics]\nenabled = " << (c.diagnostics ? "true" : "false")
      << "\nnestedness_stride = " << c.nestedness_stride
      << "\nscan_vertices = " << c.scan_vertices << "\n\n";
  out << "[avoidance]\nr1 = " << format_g17(c.avoidance_r1)
      << "\nr2 = " << format_g17(c.avoidance_r2) << "\nn = " << c.avoidance_n
      << "\n\n";
  out << "[expect]\ntermination = " << c.expect_termination
      << "\ntangent = " << c.expect_tangent << "\nside = " << c.expect_side
      << "\nsingular_time = " << format_g17(c.expect_singular_time)
      << "\nsingular_time_tol = " << format_g17(c.singular_time_tol)
      << "\nrichardson = " << (c.richardson ? "true" : "false")
      << "\ncheck_sign = " << (c.check_sign ? "true" : "false")
      << "\ncheck_noncollapse = " << (c.check_noncollapse ? "true" : "false")
      << "\ncheck_nestedness = " << (c.check_nestedness ? "true" : "false")
      << "\ncheck_isoperimetric = " << (c.check_isoperimetric ? "true" : "false")
      << "\n\n";
  out << "[output]\ndirectory = " << c.out_dir << "\nseed = " << c.seed << "\n";
  return out.str();
}

ExperimentConfig config_from_text(const std::string& text) {
  const ConfigMap m = parse_config(text);
  ExperimentConfig c;
  c.name = m.get("experiment.name", c.name);
  c.shrinker.kind = kind_of(m.get("shrinker.kind", kind_name(c.shrinker.kind)));
  c.shrinker.dimension = m.get_int("shrinker.dimension", c.shrinker.dimension);
  c.shrinker.p = m.get_int("shrinker.p", c.shrinker.p);
  c.shrinker.q = m.get_int("shrinker.q", c.shrinker.q);
  c.shrinker.n_vertices = m.get_int("shrinker.n_vertices", c.shrinker.n_vertices);
  c.shrinker.tolerance = m.get_num("shrinker.tolerance", c.shrinker.tolerance);
  c.flow_vertices = m.get_int("shrinker.flow_vertices", c.flow_vertices);
  c.perturb_source = m.get("perturbation.source", c.perturb_source);
  c.perturb_file = m.get("perturbation.file", c.perturb_file);
  c.amplitude = m.get_num("perturbation.amplitude", c.amplitude);
  c.perturb_sign = m.get_int("perturbation.sign", c.perturb_sign);
  const std::string mode = m.get("flow.mode", "rmcf");
  if (mode == "rmcf")
    c.mode = FlowMode::RMCF;
  else if (mode == "mcf")
    c.mode = FlowMode::MCF;
  else
    throw Error("harness: unknown flow mode \"" + mode + "\"");
  c.t_max = m.get_num("flow.t_max", c.t_max);
  c.cfl = m.get_num("flow.cfl", c.cfl);
  c.a_max = m.get_num("flow.a_max", c.a_max);
  c.output_every = m.get_num("flow.output_every", c.output_every);
  c.max_vertices = m.get_int("flow.max_vertices", c.max_vertices);
  c.diagnostics = m.get_bool("diagnostics.enabled", c.diagnostics);
  c.nestedness_stride = m.get_int("diagnostics.nestedness_stride", c.nestedness_stride);
  c.scan_vertices = m.get_int("diagnostics.scan_vertices", c.scan_vertices);
  c.avoidance_r1 = m.get_num("avoidance.r1", c.avoidance_r1);
  c.avoidance_r2 = m.get_num("avoidance.r2", c.avoidance_r2);
  c.avoidance_n = m.get_int("avoidance.n", c.avoidance_n);
  c.expect_termination = m.get("expect.termination", c.expect_termination);
  c.expect_tangent = m.get("expect.tangent", c.expect_tangent);
  c.expect_side = m.get("expect.side", c.expect_side);
  c.expect_singular_time = m.get_num("expect.singular_time", c.expect_singular_time);
  c.singular_time_tol = m.get_num("expect.singular_time_tol", c.singular_time_tol);
  c.richardson = m.get_bool("expect.richardson", c.richardson);
  c.check_sign = m.get_bool("expect.check_sign", c.check_sign);
  c.check_noncollapse = m.get_bool("expect.check_noncollapse", c.check_noncollapse);
  c.check_nestedness = m.get_bool("expect.check_nestedness", c.check_nestedness);
  c.check_isoperimetric = m.get_bool("expect.check_isoperimetric", c.check_isoperimetric);
  c.out_dir = m.get("output.directory", c.out_dir);
  c.seed = static_cast<unsigned>(m.get_int("output.seed", static_cast<int>(c.seed)));
  return c;
}

ExperimentConfig canned_experiment(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.out_dir = "out/" + name;
  if (name == "circle-collapse") {
    c.shrinker.kind = ShrinkerKind::Round;
    c.shrinker.n_vertices = 512;
    c.perturb_source = "constant";
    c.amplitude = 1.0 - std::sqrt(2.0);  // radius 1
    c.expect_termination = "blow_up";
    c.expect_tangent = "round";
    c.expect_side = "inside";
    c.expect_singular_time = std::log(2.0);
    c.singular_time_tol = 1e-3;
    c.richardson = true;
    c.check_noncollapse = true;
    c.check_nestedness = true;
  } else if (name == "circle-expand") {
    c.shrinker.kind = ShrinkerKind::Round;
    c.shrinker.n_vertices = 256;
    c.perturb_source = "constant";
    c.amplitude = 1.6 - std::sqrt(2.0);  // radius 1.6
    c.t_max = 3.0;
    c.expect_termination = "t_max";
    c.check_nestedness = true;
  } else if (name == "torus-inward" || name == "torus-outward") {
    c.shrinker.kind = ShrinkerKind::AngenentTorus;
    c.shrinker.n_vertices = 2048;
    c.flow_vertices = 512;
    c.perturb_sign = name == "torus-inward" ? -1 : 1;
    c.expect_termination = "blow_up";
    c.expect_tangent = "cylindrical";
    c.expect_side = name == "torus-inward" ? "inside" : "outside";
    c.check_noncollapse = name == "torus-inward";
    c.check_nestedness = true;
  } else if (name == "abresch-langer-inward") {
    c.shrinker.kind = ShrinkerKind::AbreschLanger;
    c.shrinker.n_vertices = 2048;
    c.flow_vertices = 768;
    c.perturb_sign = -1;
    c.expect_termination = "blow_up";
    c.expect_tangent = "cusp_or_round";
  } else if (name == "abresch-langer-outward") {
    c.shrinker.kind = ShrinkerKind::AbreschLanger;
    c.shrinker.n_vertices = 2048;
    c.flow_vertices = 768;
    c.perturb_sign = 1;
    c.t_max = 3.0;
    c.expect_termination = "t_max";
    c.check_isoperimetric = true;
  } else if (name == "avoidance-demo") {
    c.mode = FlowMode::MCF;
    c.perturb_source = "none";
    c.check_sign = false;
  } else {
    throw Error("harness: unknown canned experiment \"" + name + "\"");
  }
  return c;
}

std::string config_hash(const ExperimentConfig& config) {
  const std::string text = config_to_text(config);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

bool RunManifest::all_pass() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const CheckResult& c) { return c.pass; });
}

void write_manifest(const RunManifest& m, const std::string& path) {
  json j;
  j["experiment"] = m.experiment;
  j["config_hash"] = m.hash;
  j["tool_version"] = m.tool_version;
  j["config"] = m.config_text;
  j["artifacts"] = m.artifacts;
  j["checks"] = json::array();
  for (const auto& c : m.checks)
    j["checks"].push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  j["pass"] = m.all_pass();
  const std::string tmp = path + ".tmp";
  spit(tmp, j.dump(2) + "\n");
  std::filesystem::rename(tmp, path);
}

void emit_svg(const std::vector<GeometrySnapshot>& snapshots,
              const std::string& path, const SvgOptions& options) {
  std::vector<const GeometrySnapshot*> sel;
  const int stride = std::max(1, options.stride);
  for (std::size_t i = 0; i < snapshots.size(); i += stride)
    sel.push_back(&snapshots[i]);
  if (sel.empty()) throw EmptyInput();

  double xlo = 1e300, xhi = -1e300, ylo = 1e300, yhi = -1e300;
  for (const auto* g : sel) {
    xlo = std::min(xlo, g->vertices.row(0).minCoeff());
    xhi = std::max(xhi, g->vertices.row(0).maxCoeff());
    ylo = std::min(ylo, g->vertices.row(1).minCoeff());
    yhi = std::max(yhi, g->vertices.row(1).maxCoeff());
  }
  if (options.overlay_fit && options.fit_radius > 0) {
    xlo = std::min(xlo, options.fit_center.x() - options.fit_radius);
    xhi = std::max(xhi, options.fit_center.x() + options.fit_radius);
    ylo = std::min(ylo, options.fit_center.y() - options.fit_radius);
    yhi = std::max(yhi, options.fit_center.y() + options.fit_radius);
  }
  const double mx = 0.1 * std::max(xhi - xlo, 1e-9);
  const double my = 0.1 * std::max(yhi - ylo, 1e-9);
  char buf[128];
  std::ostringstream out;
  std::snprintf(buf, sizeof(buf), "%.6g %.6g %.6g %.6g", xlo - mx, -(yhi + my),
                (xhi - xlo) + 2 * mx, (yhi - ylo) + 2 * my);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"" << buf
      << "\" width=\"640\" height=\"640\" preserveAspectRatio=\"xMidYMid meet\">\n"
      << "<g fill=\"none\" stroke=\"#335\" stroke-width=\"0.5%\">\n";
  for (const auto* g : sel) {
    out << "<path d=\"";
    for (Eigen::Index i = 0; i < g->size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%c%.6g %.6g", i == 0 ? 'M' : 'L',
                    g->vertices(0, i), -g->vertices(1, i));
      out << buf;
    }
    out << (g->closed ? "Z" : "") << "\"/>\n";
  }
  out << "</g>\n";
  if (options.overlay_fit && options.fit_radius > 0) {
    char cbuf[224];
    std::snprintf(cbuf, sizeof(cbuf),
                  "<circle cx=\"%.6g\" cy=\"%.6g\" r=\"%.6g\" fill=\"none\" "
                  "stroke=\"#a33\" stroke-width=\"0.5%%\" stroke-dasharray=\"2%% 1%%\"/>\n",
                  options.fit_center.x(), -options.fit_center.y(), options.fit_radius);
    out << cbuf;
  }
  out << "</svg>\n";
  spit(path, out.str());
}

double isoperimetric_ratio(const GeometrySnapshot& geom) {
  const int p = std::abs(turning_number(geom));
  if (p == 0) throw Error("isoperimetric_ratio: zero turning number");
  const double L = arclength(geom);
  const double A = std::abs(signed_area(geom));
  if (A <= 0) throw DegenerateGeometry("isoperimetric_ratio: vanishing area");
  return L * L / (4.0 * M_PI * p * A);
}

namespace {

RunManifest avoidance_demo(const ExperimentConfig& c) {
  RunManifest m;
  auto make = [&](double r) {
    GeometrySnapshot g;
    g.vertices.resize(2, c.avoidance_n);
    for (int k = 0; k < c.avoidance_n; ++k) {
      const double a = 2 * M_PI * k / c.avoidance_n;
      g.vertices.col(k) = r * Eigen::Vector2d(std::cos(a), std::sin(a));
    }
    FlowConfig f = flow_config_of(c, differential_quantities(std::move(g)));
    return run(f);
  };
  auto inner = make(c.avoidance_r1);
  auto outer = make(c.avoidance_r2);

  const std::string dir = c.out_dir;
  write_trajectory_jsonl(inner, dir + "/inner.jsonl");
  write_series_csv(inner, dir + "/inner.csv");
  write_trajectory_jsonl(outer, dir + "/outer.jsonl");
  write_series_csv(outer, dir + "/outer.csv");
  m.artifacts = {dir + "/inner.jsonl", dir + "/inner.csv", dir + "/outer.jsonl",
                 dir + "/outer.csv"};

  auto rep = avoidance_check(inner, outer);
  m.checks.push_back({"separation_monotone", rep.pass,
                      "initial distance " + format_g17(rep.initial_distance)});

  // closed form sqrt(r2^2 - 2 s) - sqrt(r1^2 - 2 s), compared on slices where
  // the inner circle is still resolved (r1(s)^2 >= 0.25)
  const double r1 = c.avoidance_r1, r2 = c.avoidance_r2;
  double worst = 0;
  int compared = 0;
  for (std::size_t k = 0; k < rep.times.size(); ++k) {
    const double s = rep.times[k] + 1.0;
    const double a2 = r1 * r1 - 2.0 * s;
    if (a2 < 0.25) continue;
    const double expect = std::sqrt(r2 * r2 - 2.0 * s) - std::sqrt(a2);
    worst = std::max(worst, std::abs(rep.distance[k] - expect));
    ++compared;
  }
  m.checks.push_back({"closed_form_distance", worst <= 1e-4 && compared >= 10,
                      "max deviation " + format_g17(worst) + " over " +
                          std::to_string(compared) + " slices"});

  std::vector<GeometrySnapshot> both = inner.snapshots;
  both.insert(both.end(), outer.snapshots.begin(), outer.snapshots.end());
  emit_svg(both, dir + "/snapshots.svg", {.stride = 5});
  m.artifacts.push_back(dir + "/snapshots.svg");

  json jr;
  jr["initial_distance"] = rep.initial_distance;
  jr["pass"] = rep.pass;
  jr["times"] = rep.times;
  jr["distance"] = rep.distance;
  spit(dir + "/diagnostics.json", jr.dump(2) + "\n");
  m.artifacts.push_back(dir + "/diagnostics.json");
  return m;
}

}  // namespace

RunManifest run_experiment(const ExperimentConfig& c) {
  std::filesystem::create_directories(c.out_dir);
  RunManifest m;
  m.experiment = c.name;
  m.hash = config_hash(c);
  m.config_text = config_to_text(c);
  spit(c.out_dir + "/config.txt", m.config_text);

  if (c.name == "avoidance-demo") {
    RunManifest demo = avoidance_demo(c);
    m.artifacts = demo.artifacts;
    m.checks = demo.checks;
    m.artifacts.push_back(c.out_dir + "/config.txt");
    write_manifest(m, c.out_dir + "/manifest.json");
    m.artifacts.push_back(c.out_dir + "/manifest.json");
    return m;
  }

  // construct
  GeometrySnapshot shrinker;
  json provenance;
  switch (c.shrinker.kind) {
    case ShrinkerKind::Round:
      shrinker = round_shrinker(c.shrinker.dimension, c.shrinker.n_vertices);
      provenance["residual"] = shrinker_residual(shrinker);
      break;
    case ShrinkerKind::AbreschLanger: {
      const ShootingResult r = shoot_abresch_langer(c.shrinker);
      shrinker = r.geometry;
      provenance = {{"shooting_parameter", r.shooting_parameter},
                    {"closure_error", r.closure_error},
                    {"residual", r.residual},
                    {"tolerance", c.shrinker.tolerance}};
      break;
    }
    case ShrinkerKind::AngenentTorus: {
      const ShootingResult r = shoot_angenent_torus(c.shrinker);
      shrinker = r.geometry;
      provenance = {{"shooting_parameter", r.shooting_parameter},
                    {"closure_error", r.closure_error},
                    {"residual", r.residual},
                    {"tolerance", c.shrinker.tolerance}};
      break;
    }
  }
  write_geometry(shrinker, c.out_dir + "/shrinker.json");
  spit(c.out_dir + "/shrinker_provenance.json", provenance.dump(2) + "\n");
  m.artifacts.push_back(c.out_dir + "/shrinker.json");
  m.artifacts.push_back(c.out_dir + "/shrinker_provenance.json");

  // eigens + perturbation profile
  Eigen::ArrayXd f = Eigen::ArrayXd::Ones(shrinker.size());
  if (c.perturb_source == "eigenfunction") {
    const LinearizedOperator L = assemble_L(shrinker);
    const EigenPair pair = first_eigenpair(L);
    f = pair.phi;

    // self-adjointness spot check, the only randomized step
    std::mt19937 rng(c.seed);
    std::normal_distribution<double> gauss;
    double worst = 0;
    for (int trial = 0; trial < 3; ++trial) {
      Eigen::ArrayXd u(L.size()), v(L.size());
      for (Eigen::Index i = 0; i < L.size(); ++i) u(i) = gauss(rng);
      for (Eigen::Index i = 0; i < L.size(); ++i) v(i) = gauss(rng);
      const double a = L.inner(L.apply(u), v), b = L.inner(u, L.apply(v));
      worst = std::max(worst,
                       std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-12}));
    }
    m.checks.push_back({"self_adjointness", worst < 1e-10,
                        "max asymmetry " + format_g17(worst)});

    json je;
    je["mu1"] = pair.mu;
    je["phi"] = std::vector<double>(pair.phi.data(), pair.phi.data() + pair.phi.size());
    spit(c.out_dir + "/eigen.json", je.dump() + "\n");
    m.artifacts.push_back(c.out_dir + "/eigen.json");
  } else if (c.perturb_source == "file") {
    std::ifstream in(c.perturb_file);
    if (!in) throw Error("harness: cannot open perturbation file " + c.perturb_file);
    std::vector<double> vals;
    double v;
    while (in >> v) vals.push_back(v);
    if (static_cast<Eigen::Index>(vals.size()) != shrinker.size())
      throw Error("harness: perturbation file length does not match the shrinker");
    f = Eigen::Map<Eigen::ArrayXd>(vals.data(), vals.size());
  } else if (c.perturb_source != "constant") {
    throw Error("harness: unknown perturbation source \"" + c.perturb_source + "\"");
  }

  // perturb + generic gate
  double s = c.amplitude;
  if (s == 0.0) s = epsilon_search(shrinker, f, c.perturb_sign);
  GeometrySnapshot initial = perturb({shrinker, f, s});
  const Classification cls = classify_perturbation(initial);
  if (cls.cls == PerturbationClass::Neither)
    throw AbortNotGeneric("perturbation amplitude " + format_g17(s) +
                          " does not classify as convex or concave");
  m.checks.push_back(
      {"generic_perturbation", true,
       std::string(cls.cls == PerturbationClass::RescaledMeanConvex ? "convex"
                                                                    : "concave") +
           ", amplitude " + format_g17(s) + ", margin " + format_g17(cls.margin)});

  if (c.flow_vertices > 0 && c.flow_vertices != initial.size())
    initial = differential_quantities(resample(initial, c.flow_vertices));
  write_geometry(initial, c.out_dir + "/initial.json");
  m.artifacts.push_back(c.out_dir + "/initial.json");

  // flow
  FlowTrajectory traj = run(flow_config_of(c, initial));
  write_trajectory_jsonl(traj, c.out_dir + "/trajectory.jsonl");
  write_series_csv(traj, c.out_dir + "/series.csv");
  m.artifacts.push_back(c.out_dir + "/trajectory.jsonl");
  m.artifacts.push_back(c.out_dir + "/series.csv");

  if (!c.expect_termination.empty()) {
    const bool blew = traj.termination == Termination::BlowUp;
    const bool want_blow = c.expect_termination == "blow_up";
    const bool ok = want_blow ? blew : traj.termination == Termination::ReachedTMax;
    m.checks.push_back({"termination", ok,
                        std::string(blew ? "blow_up" : "t_max reached") +
                            " at t = " + format_g17(traj.final_time) +
                            (traj.note.empty() ? "" : " (" + traj.note + ")")});
  }

  json jd;
  if (c.diagnostics) {
    const FlowTrajectory scan = thin_trajectory(traj, c.scan_vertices);

    if (c.check_sign) {
      const SignReport sr = sign_preservation(traj);
      m.checks.push_back({"sign_preservation", sr.pass,
                          "initial sign " + std::to_string(sr.initial_sign) +
                              ", worst margin " + format_g17(sr.worst_margin)});
      jd["sign"] = {{"initial_sign", sr.initial_sign},
                    {"pass", sr.pass},
                    {"worst_margin", sr.worst_margin}};
    }

    if (c.check_noncollapse) {
      double d0 = 0, worst_ratio = 1e300;
      std::vector<double> ds;
      for (const auto& g : scan.snapshots) {
        const double d = noncollapse_delta(g).delta_in;
        ds.push_back(d);
        if (ds.size() == 1)
          d0 = d;
        else if (std::isfinite(d0) && d0 > 0)
          worst_ratio = std::min(worst_ratio, d / d0);
      }
      const bool ok = ds.size() < 2 || worst_ratio >= 1.0 - 1e-3;
      m.checks.push_back({"noncollapse_monotone", ok,
                          "delta_in(0) = " + format_g17(d0) + ", worst ratio " +
                              format_g17(ds.size() < 2 ? 1.0 : worst_ratio)});
      jd["delta_in"] = ds;
    }

    if (c.check_nestedness) {
      const int viol = nestedness_violations(scan, c.nestedness_stride);
      m.checks.push_back({"nestedness", viol == 0,
                          std::to_string(viol) + " violations at stride " +
                              std::to_string(c.nestedness_stride)});
      jd["nestedness_violations"] = viol;
    }

    if (c.check_isoperimetric) {
      std::vector<double> ratios;
      for (const auto& g : scan.snapshots) ratios.push_back(isoperimetric_ratio(g));
      bool monotone = true;
      for (std::size_t k = 1; k < ratios.size(); ++k)
        monotone = monotone && ratios[k] <= ratios[k - 1] + 1e-5;
      const bool ok = monotone && ratios.size() >= 2 &&
                      ratios.back() < ratios.front() - 1e-4;
      m.checks.push_back({"isoperimetric_trend", ok,
                          "ratio " + format_g17(ratios.front()) + " -> " +
                              format_g17(ratios.back())});
      jd["isoperimetric_ratio"] = ratios;
    }

    SvgOptions svg;
    svg.stride = std::max<int>(1, static_cast<int>(traj.snapshots.size()) / 24);
    if (traj.termination == Termination::BlowUp) {
      const SingularityReport sing = detect_and_classify(traj);
      jd["singularity"] = {{"singular_time", sing.singular_time},
                          {"singular_point", {sing.singular_point.x(), sing.singular_point.y()}},
                          {"decay_exponent", sing.decay_exponent},
                          {"decay_exponent_ci", sing.decay_exponent_ci},
                          {"tangent_type", tangent_name(sing.tangent_type)},
                          {"collapse_side", side_name(sing.collapse_side)},
                          {"fit_residual", sing.fit_residual},
                          {"normal_agreement", sing.normal_agreement}};
      if (!c.expect_tangent.empty()) {
        const std::string got = tangent_name(sing.tangent_type);
        const bool ok = c.expect_tangent == "cusp_or_round"
                            ? (got == "cusp" || got == "round")
                            : got == c.expect_tangent;
        m.checks.push_back({"tangent_type", ok, got});
      }
      if (!c.expect_side.empty())
        m.checks.push_back({"collapse_side",
                            side_name(sing.collapse_side) == c.expect_side,
                            side_name(sing.collapse_side)});
      if (c.expect_tangent == "cylindrical") {
        m.checks.push_back({"fit_residual", sing.fit_residual <= 0.02,
                            format_g17(sing.fit_residual)});
        m.checks.push_back(
            {"decay_exponent", std::abs(sing.decay_exponent - 0.5) <= 0.05,
             format_g17(sing.decay_exponent) + " +- " +
                 format_g17(sing.decay_exponent_ci)});
      }

      if (c.singular_time_tol > 0) {
        double t_star = sing.singular_time;
        std::string how = "direct";
        if (c.richardson) {
          const int n = initial.size() > 0 ? static_cast<int>(initial.size()) : 512;
          auto at = [&](int nn) {
            FlowConfig f = flow_config_of(
                c, differential_quantities(resample(initial, nn)));
            return singular_time_estimate(run(f));
          };
          const double t2 = at(n / 2), t1 = at(n);
          t_star = t1 + (t1 - t2) / 3.0;
          how = "richardson n = " + std::to_string(n / 2) + ", " + std::to_string(n);
        }
        m.checks.push_back(
            {"singular_time",
             std::abs(t_star - c.expect_singular_time) <= c.singular_time_tol,
             format_g17(t_star) + " vs " + format_g17(c.expect_singular_time) +
                 " (" + how + ")"});
      }

      svg.overlay_fit = sing.fit_residual < 0.5 && sing.tangent_type != TangentType::Cusp;
      if (svg.overlay_fit) {
        svg.fit_center = sing.singular_point;
        svg.fit_radius = std::max(1e-3, 2.0 * sing.fit_residual);
      }
    }
    spit(c.out_dir + "/diagnostics.json", jd.dump(2) + "\n");
    m.artifacts.push_back(c.out_dir + "/diagnostics.json");

    emit_svg(scan.snapshots, c.out_dir + "/snapshots.svg", svg);
    m.artifacts.push_back(c.out_dir + "/snapshots.svg");
  }

  m.artifacts.push_back(c.out_dir + "/config.txt");
  write_manifest(m, c.out_dir + "/manifest.json");
  m.artifacts.push_back(c.out_dir + "/manifest.json");
  return m;
}

RegistryReport regression_registry(const std::string& action, const std::string& path) {
  struct Entry {
    std::string name;
    double value, tolerance;
    std::string provenance;
  };
  auto compute = []() {
    std::vector<Entry> out;
    ShrinkerSpec torus;
    torus.kind = ShrinkerKind::AngenentTorus;
    const ShootingResult tr = shoot_angenent_torus(torus);
    out.push_back({"torus.r_out", tr.geometry.vertices.row(0).maxCoeff(), 1e-6,
                   "profile max r, shooting at n = 2048"});
    out.push_back({"torus.r_in", tr.geometry.vertices.row(0).minCoeff(), 1e-6,
                   "profile min r, shooting at n = 2048"});
    out.push_back({"torus.residual", tr.residual, 1e-6,
                   "max |Htilde| of the assembled profile"});
    out.push_back({"torus.mu1", first_eigenpair(assemble_L(tr.geometry)).mu, 1e-4,
                   "first eigenvalue of L at n = 2048"});

    ShrinkerSpec al;
    al.kind = ShrinkerKind::AbreschLanger;
    const ShootingResult ar = shoot_abresch_langer(al);
    const Eigen::ArrayXd radii = ar.geometry.vertices.colwise().norm().array();
    out.push_back({"abresch_langer_2_3.r_min", radii.minCoeff(), 1e-6,
                   "petal inner radius, shooting at n = 2048"});
    out.push_back({"abresch_langer_2_3.r_max", radii.maxCoeff(), 1e-6,
                   "petal outer radius, shooting at n = 2048"});
    out.push_back({"abresch_langer_2_3.residual", ar.residual, 1e-6,
                   "max |Htilde| of the assembled curve"});
    out.push_back({"abresch_langer_2_3.mu1",
                   first_eigenpair(assemble_L(ar.geometry)).mu, 1e-4,
                   "first eigenvalue of L at n = 2048"});

    const GeometrySnapshot circle = round_shrinker(1, 2048);
    out.push_back({"circle.mu1", first_eigenpair(assemble_L(circle)).mu, 1e-6,
                   "first eigenvalue of L on S^1(sqrt 2) at n = 2048 (exact: 1)"});
    return out;
  };

  RegistryReport rep;
  if (action == "freeze") {
    json j = json::array();
    for (const auto& e : compute()) {
      j.push_back({{"name", e.name},
                   {"value", e.value},
                   {"tolerance", e.tolerance},
                   {"provenance", e.provenance},
                   {"tool_version", kToolVersion}});
      rep.entries.push_back({e.name, true, format_g17(e.value)});
    }
    std::filesystem::create_directories(
        std::filesystem::path(path).parent_path().string().empty()
            ? "."
            : std::filesystem::path(path).parent_path().string());
    const std::string tmp = path + ".tmp";
    spit(tmp, j.dump(2) + "\n");
    std::filesystem::rename(tmp, path);
    return rep;
  }
  if (action != "check")
    throw Error("regression_registry: action must be freeze or check");

  std::ifstream in(path);
  if (!in) throw Error("regression_registry: cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error(std::string("regression_registry: malformed registry: ") + e.what());
  }
  std::map<std::string, Entry> fresh;
  for (const auto& e : compute()) fresh[e.name] = e;
  for (const auto& item : j) {
    const std::string name = item.at("name").get<std::string>();
    const double want = item.at("value").get<double>();
    const double tol = item.at("tolerance").get<double>();
    const auto it = fresh.find(name);
    if (it == fresh.end()) {
      rep.entries.push_back({name, false, "no longer computed"});
      rep.pass = false;
      continue;
    }
    const double got = it->second.value;
    const bool ok = std::abs(got - want) <= tol;
    rep.entries.push_back({name, ok,
                           format_g17(got) + " vs frozen " + format_g17(want) +
                               " (tol " + format_g17(tol) + ")"});
    rep.pass = rep.pass && ok;
  }
  if (!rep.pass) {
    std::string detail;
    for (const auto& e : rep.entries)
      if (!e.pass) detail += e.name + ": " + e.detail + "; ";
    throw RegressionFailure("registry mismatch: " + detail);
  }
  return rep;
}

}  // namespace rmcf
