#pragma once

#include <Eigen/Dense>

#include "rmcflab/errors.hpp"

namespace rmcf {

enum class Mode { Curve, Revolution };
enum class Side { Inside, Outside, OnBoundary };

// A discretized hypersurface: a closed planar curve, a closed profile curve of
// a surface of revolution (torus type), or an open profile with both endpoints
// on the rotation axis (sphere type).
//
// Vertices are uniformly spaced in arclength after construction/resampling.
// Derived fields are filled by differential_quantities() and must be treated
// as stale after any mutation of vertices.
struct GeometrySnapshot {
  Mode mode = Mode::Curve;
  bool immersed = false;
  bool closed = true;      // false only for revolution profiles with axis endpoints
  double time = 0.0;
  Eigen::Matrix2Xd vertices;   // columns: (x1,x2) for curves, (r,z) for profiles

  // derived
  Eigen::Matrix2Xd tangent;            // unit tangent per vertex
  Eigen::Matrix2Xd normal;             // unit outward normal per vertex
  Eigen::ArrayXd kappa;                // profile/curve curvature per vertex
  Eigen::ArrayXd H;                    // mean curvature (sum of principal curvatures)
  Eigen::ArrayXd Htilde;               // H - <x,n>/2
  Eigen::ArrayXd edge_ds;              // arclength element (chord) per edge i -> i+1
  double spacing = 0.0;                // nominal uniform arclength step
  double length = 0.0;                 // total arclength (chordal)
  bool has_derived = false;

  int ambient_dim() const { return mode == Mode::Curve ? 2 : 3; }
  Eigen::Index size() const { return vertices.cols(); }
};

// Uniform-arclength resampling through a periodic cubic spline (open axis
// profiles are mirrored across the axis first). Total arclength is preserved
// to the spline's quadrature accuracy.
GeometrySnapshot resample(const GeometrySnapshot& geom, int n_vertices);

// Fills tangent, normal, curvature, H, Htilde and arclength elements.
// Normals point into the unbounded complementary component; the convention is
// fixed so a round circle/sphere has H > 0.
GeometrySnapshot differential_quantities(GeometrySnapshot geom);

// Gaussian area F = \int e^{-|x|^2/4} (with the 2*pi*r factor for surfaces of
// revolution), by the trapezoid rule on the uniform arclength grid.
double gaussian_area(const GeometrySnapshot& geom);

// Classification of a point against a closed embedded geometry (winding
// number; on-boundary band is 1e-9 * diameter).
Side side_of(const GeometrySnapshot& geom, const Eigen::Vector2d& point);

// Shoelace signed area (positive for counterclockwise traversal).
double signed_area(const GeometrySnapshot& geom);

// Exact discrete total curvature \oint kappa ds via exterior angles,
// in units of full turns (i.e. the turning number for closed curves).
double total_turning(const GeometrySnapshot& geom);
int turning_number(const GeometrySnapshot& geom);

double diameter(const GeometrySnapshot& geom);

// O(N^2) polyline self-intersection test (closed curves).
bool is_self_intersecting(const GeometrySnapshot& geom);

// Spline-quadrature perimeter (more accurate than summed chords).
double arclength(const GeometrySnapshot& geom);

// Distance from a point to the polyline.
double distance_to(const GeometrySnapshot& geom, const Eigen::Vector2d& point);

}  // namespace rmcf
