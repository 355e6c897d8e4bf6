#include "rmcflab/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rmcf {

namespace {

using nlohmann::json;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io: cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("io: cannot write " + path);
  out << text;
  if (!out) throw Error("io: short write to " + path);
}

Eigen::ArrayXd max_a_series(const FlowTrajectory& traj) {
  Eigen::ArrayXd a(traj.series.size());
  for (std::size_t i = 0; i < traj.series.size(); ++i) a(i) = traj.series[i].max_a;
  return a;
}

}  // namespace

std::string format_g17(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

std::string geometry_to_json(const GeometrySnapshot& geom) {
  std::ostringstream out;
  out << "{\"ambient_dim\":" << geom.ambient_dim() << ",\"mode\":\""
      << (geom.mode == Mode::Curve ? "curve" : "revolution") << "\",\"immersed\":"
      << (geom.immersed ? "true" : "false") << ",\"closed\":"
      << (geom.closed ? "true" : "false") << ",\"time\":" << format_g17(geom.time)
      << ",\"vertices\":[";
  for (Eigen::Index i = 0; i < geom.size(); ++i) {
    if (i) out << ',';
    out << '[' << format_g17(geom.vertices(0, i)) << ','
        << format_g17(geom.vertices(1, i)) << ']';
  }
  out << "]}";
  return out.str();
}

GeometrySnapshot geometry_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(std::string("io: malformed geometry JSON: ") + e.what());
  }
  GeometrySnapshot g;
  try {
    const std::string mode = j.at("mode").get<std::string>();
    if (mode == "curve")
      g.mode = Mode::Curve;
    else if (mode == "revolution")
      g.mode = Mode::Revolution;
    else
      throw Error("io: unknown mode \"" + mode + "\"");
    const int dim = j.at("ambient_dim").get<int>();
    if (dim != g.ambient_dim())
      throw Error("io: ambient_dim inconsistent with mode");
    g.immersed = j.at("immersed").get<bool>();
    g.closed = j.value("closed", true);
    g.time = j.at("time").get<double>();
    const auto& verts = j.at("vertices");
    if (!verts.is_array() || verts.empty())
      throw Error("io: vertices must be a nonempty array");
    g.vertices.resize(2, static_cast<Eigen::Index>(verts.size()));
    for (std::size_t i = 0; i < verts.size(); ++i) {
      if (!verts[i].is_array() || verts[i].size() != 2)
        throw Error("io: each vertex must be a pair");
      g.vertices(0, static_cast<Eigen::Index>(i)) = verts[i][0].get<double>();
      g.vertices(1, static_cast<Eigen::Index>(i)) = verts[i][1].get<double>();
    }
  } catch (const json::exception& e) {
    throw Error(std::string("io: geometry JSON missing fields: ") + e.what());
  }
  return differential_quantities(std::move(g));
}

void write_geometry(const GeometrySnapshot& geom, const std::string& path) {
  spit(path, geometry_to_json(geom) + "\n");
}

GeometrySnapshot read_geometry(const std::string& path) {
  return geometry_from_json(slurp(path));
}

void write_trajectory_jsonl(const FlowTrajectory& traj, const std::string& path) {
  std::ostringstream out;
  for (const auto& s : traj.snapshots) out << geometry_to_json(s) << '\n';
  spit(path, out.str());
}

void write_series_csv(const FlowTrajectory& traj, const std::string& path) {
  std::ostringstream out;
  out << "time,dt,max_abs_A,min_Htilde,max_Htilde,gaussian_area\n";
  for (const auto& d : traj.series)
    out << format_g17(d.time) << ',' << format_g17(d.dt) << ','
        << format_g17(d.max_a) << ',' << format_g17(d.min_htilde) << ','
        << format_g17(d.max_htilde) << ',' << format_g17(d.gaussian_area) << '\n';
  spit(path, out.str());
}

FlowTrajectory read_trajectory(const std::string& jsonl_path,
                               const std::string& csv_path, FlowMode mode,
                               double a_max) {
  FlowTrajectory traj;
  traj.mode = mode;
  std::istringstream lines(slurp(jsonl_path));
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    traj.snapshots.push_back(geometry_from_json(line));
  }
  if (traj.snapshots.empty()) throw EmptyInput();

  if (!csv_path.empty()) {
    std::istringstream rows(slurp(csv_path));
    std::string row;
    if (!std::getline(rows, row)) throw Error("io: empty series CSV");
    while (std::getline(rows, row)) {
      if (row.empty()) continue;
      StepDiag d;
      if (std::sscanf(row.c_str(), "%lf,%lf,%lf,%lf,%lf,%lf", &d.time, &d.dt,
                      &d.max_a, &d.min_htilde, &d.max_htilde,
                      &d.gaussian_area) != 6)
        throw Error("io: malformed series CSV row: " + row);
      traj.series.push_back(d);
    }
  } else {
    for (const auto& s : traj.snapshots)
      traj.series.push_back({s.time, 0.0, max_abs_A(s), s.Htilde.minCoeff(),
                             s.Htilde.maxCoeff(), gaussian_area(s)});
  }
  traj.final_time = traj.snapshots.back().time;
  traj.termination = !traj.series.empty() && max_a_series(traj).tail(1)(0) >= a_max
                         ? Termination::BlowUp
                         : Termination::ReachedTMax;
  return traj;
}

}  // namespace rmcf
