#pragma once

#include <map>
#include <string>
#include <vector>

#include "rmcflab/diagnostics.hpp"
#include "rmcflab/flow.hpp"
#include "rmcflab/shrinkers.hpp"

namespace rmcf {

inline constexpr const char* kToolVersion = "rmcflab 0.1.0";

// Sectioned plain-text configuration. Grammar: a line is blank, a comment
// (starts with '#' or ';'), a section header "[name]", or "key = value";
// values keep inner whitespace, keys are looked up as "section.key".
struct ConfigMap {
  std::map<std::string, std::string> values;

  bool has(const std::string& key) const { return values.count(key) > 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_num(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
};

ConfigMap parse_config(const std::string& text);

// Full experiment description. Every field has a default and every field is
// printed back by config_to_text, so a manifest reproduces the run exactly.
struct ExperimentConfig {
  std::string name = "custom";

  // [shrinker] kind: round | abresch_langer | angenent_torus
  ShrinkerSpec shrinker;
  int flow_vertices = 0;  // resample the initial datum before flowing (0 = keep)

  // [perturbation] source: eigenfunction | constant | file
  std::string perturb_source = "eigenfunction";
  std::string perturb_file;
  double amplitude = 0.0;  // 0 = largest admissible amplitude of the given sign
  int perturb_sign = -1;

  // [flow]
  FlowMode mode = FlowMode::RMCF;
  double t_max = 10.0;
  double cfl = 0.4;
  double a_max = 1e3;
  double output_every = 0.01;
  int max_vertices = 32768;

  // [diagnostics]
  bool diagnostics = true;
  int nestedness_stride = 5;
  int scan_vertices = 384;  // diagnostics scans run on thinned snapshots

  // [avoidance] (avoidance-demo only)
  double avoidance_r1 = 1.0, avoidance_r2 = 2.0;
  int avoidance_n = 1024;

  // [expect] pass/fail gates evaluated into the manifest
  std::string expect_termination;     // "blow_up" | "t_max" | ""
  std::string expect_tangent;         // "cylindrical" | "cusp_or_round" | ""
  std::string expect_side;            // "inside" | "outside" | ""
  double expect_singular_time = 0.0;  // checked only when singular_time_tol > 0
  double singular_time_tol = 0.0;
  bool richardson = false;  // extrapolate t* over {n/4, n/2, n}
  bool check_sign = true;
  bool check_noncollapse = false;
  bool check_nestedness = false;
  bool check_isoperimetric = false;

  // [output]
  std::string out_dir = "out";
  unsigned seed = 1;  // self-adjointness probe vectors only
};

// Built-in experiments: circle-collapse, circle-expand, torus-inward,
// torus-outward, abresch-langer-inward, abresch-langer-outward,
// avoidance-demo. Error on unknown names.
ExperimentConfig canned_experiment(const std::string& name);

ExperimentConfig config_from_text(const std::string& text);
std::string config_to_text(const ExperimentConfig& config);

// FNV-1a of the canonical config text, as fixed-width hex.
std::string config_hash(const ExperimentConfig& config);

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct RunManifest {
  std::string experiment;
  std::string hash;
  std::string tool_version = kToolVersion;
  std::string config_text;
  std::vector<std::string> artifacts;
  std::vector<CheckResult> checks;

  bool all_pass() const;
};

// construct -> eigens -> perturb -> classify -> flow -> diagnose; writes all
// artifacts plus manifest.json (atomically) under config.out_dir.
// AbortNotGeneric when the perturbation classifies as neither convex nor
// concave.
RunManifest run_experiment(const ExperimentConfig& config);

void write_manifest(const RunManifest& manifest, const std::string& path);

struct SvgOptions {
  int stride = 1;
  bool overlay_fit = false;  // draw the fitted collapse circle
  Eigen::Vector2d fit_center = Eigen::Vector2d::Zero();
  double fit_radius = 0.0;
};

// Deterministic SVG: viewbox = joint bounding box + 10% margin, one path per
// included snapshot. EmptyInput when nothing is selected.
void emit_svg(const std::vector<GeometrySnapshot>& snapshots,
              const std::string& path, const SvgOptions& options = {});

struct RegistryReport {
  bool pass = true;
  std::vector<CheckResult> entries;
};

// action "freeze" recomputes the derived constants (torus radii, petal radii,
// first eigenvalues, shooting residuals) at the registered resolutions and
// writes them with provenance metadata; "check" recomputes and compares,
// RegressionFailure beyond the registered tolerances.
RegistryReport regression_registry(const std::string& action,
                                   const std::string& path);

// L^2 / (4 pi p A) for a closed curve of turning number p (1 at the round
// p-covered circle).
double isoperimetric_ratio(const GeometrySnapshot& geom);

}  // namespace rmcf
