#pragma once

#include <string>

#include "rmcflab/flow.hpp"
#include "rmcflab/geometry.hpp"

namespace rmcf {

// Doubles in all artifacts are printed with %.17g: 17 significant digits,
// enough for exact binary round trips and byte-identical reruns.
std::string format_g17(double value);

// {"ambient_dim", "mode": "curve"|"revolution", "immersed", "closed", "time",
//  "vertices": [[a,b],...]} on one line, keys in that order.
std::string geometry_to_json(const GeometrySnapshot& geom);

// Accepts the fields above; "closed" defaults to true. Derived quantities are
// recomputed, so only the intrinsic fields travel. Error on malformed input.
GeometrySnapshot geometry_from_json(const std::string& text);

void write_geometry(const GeometrySnapshot& geom, const std::string& path);
GeometrySnapshot read_geometry(const std::string& path);

// One geometry JSON object per line, in snapshot order.
void write_trajectory_jsonl(const FlowTrajectory& traj, const std::string& path);

// time,dt,max_abs_A,min_Htilde,max_Htilde,gaussian_area with a header row.
void write_series_csv(const FlowTrajectory& traj, const std::string& path);

// Reassembles a trajectory from the two artifacts. When csv_path is empty the
// step series is rebuilt from the snapshots themselves (dt = 0). Termination
// is BlowUp iff the last recorded max|A| reached a_max.
FlowTrajectory read_trajectory(const std::string& jsonl_path,
                               const std::string& csv_path = "",
                               FlowMode mode = FlowMode::RMCF,
                               double a_max = 1e3);

}  // namespace rmcf
