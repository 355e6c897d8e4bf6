#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <string>

#include "rmcflab/io.hpp"
#include "rmcflab/shrinkers.hpp"

using namespace rmcf;

namespace {

GeometrySnapshot circle(double r, int n) {
  GeometrySnapshot g;
  g.vertices.resize(2, n);
  for (int k = 0; k < n; ++k) {
    const double a = 2 * M_PI * k / n;
    g.vertices.col(k) = Eigen::Vector2d(r * std::cos(a), r * std::sin(a));
  }
  return differential_quantities(std::move(g));
}

struct TempFile {
  std::string path;
  explicit TempFile(const std::string& name) : path("/tmp/rmcflab_io_" + name) {}
  ~TempFile() { std::remove(path.c_str()); }
};

}  // namespace

TEST_CASE("geometry JSON round trips bit-exactly") {
  auto g = round_shrinker(2, 97);  // irrational coordinates, revolution mode
  g.time = 0.125;
  const std::string text = geometry_to_json(g);
  auto back = geometry_from_json(text);
  CHECK(back.mode == g.mode);
  CHECK(back.closed == g.closed);
  CHECK(back.immersed == g.immersed);
  CHECK(back.time == g.time);
  REQUIRE(back.size() == g.size());
  CHECK((back.vertices - g.vertices).cwiseAbs().maxCoeff() == 0.0);
  // serialization is a pure function of the snapshot
  CHECK(geometry_to_json(back) == text);
}

TEST_CASE("geometry JSON rejects malformed input") {
  CHECK_THROWS_AS(geometry_from_json("not json"), Error);
  CHECK_THROWS_AS(geometry_from_json("{\"mode\":\"curve\"}"), Error);
  CHECK_THROWS_AS(
      geometry_from_json(
          "{\"ambient_dim\":3,\"mode\":\"curve\",\"immersed\":false,"
          "\"time\":0,\"vertices\":[[1,0],[0,1],[-1,0],[0,-1]]}"),
      Error);
  CHECK_THROWS_AS(
      geometry_from_json("{\"ambient_dim\":2,\"mode\":\"curve\","
                         "\"immersed\":false,\"time\":0,\"vertices\":[]}"),
      Error);
}

TEST_CASE("geometry files round trip") {
  TempFile f("geom.json");
  auto g = circle(1.3, 64);
  write_geometry(g, f.path);
  auto back = read_geometry(f.path);
  CHECK((back.vertices - g.vertices).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(read_geometry("/tmp/rmcflab_io_missing.json"), Error);
}

TEST_CASE("trajectory artifacts round trip") {
  FlowConfig cfg;
  cfg.initial = circle(1.0, 128);
  auto traj = run(cfg);
  REQUIRE(traj.termination == Termination::BlowUp);

  TempFile jl("traj.jsonl"), cs("series.csv");
  write_trajectory_jsonl(traj, jl.path);
  write_series_csv(traj, cs.path);

  auto back = read_trajectory(jl.path, cs.path);
  CHECK(back.termination == Termination::BlowUp);
  REQUIRE(back.snapshots.size() == traj.snapshots.size());
  REQUIRE(back.series.size() == traj.series.size());
  for (std::size_t i = 0; i < traj.snapshots.size(); ++i) {
    CHECK(back.snapshots[i].time == traj.snapshots[i].time);
    CHECK((back.snapshots[i].vertices - traj.snapshots[i].vertices)
              .cwiseAbs()
              .maxCoeff() == 0.0);
  }
  CHECK(back.series.back().max_a == traj.series.back().max_a);
  CHECK(back.final_time == traj.final_time);

  // without the CSV the series is rebuilt from snapshots; a run that never
  // reached the curvature threshold reads back as ReachedTMax
  FlowConfig mild;
  mild.initial = circle(1.6, 64);
  mild.t_max = 0.5;
  auto grow = run(mild);
  TempFile jl2("traj2.jsonl");
  write_trajectory_jsonl(grow, jl2.path);
  auto back2 = read_trajectory(jl2.path);
  CHECK(back2.termination == Termination::ReachedTMax);
  CHECK(back2.series.size() == back2.snapshots.size());

  TempFile empty("empty.jsonl");
  write_trajectory_jsonl(FlowTrajectory{}, empty.path);
  CHECK_THROWS_AS(read_trajectory(empty.path), EmptyInput);
}
