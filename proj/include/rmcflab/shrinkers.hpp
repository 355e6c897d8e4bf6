#pragma once

#include "rmcflab/geometry.hpp"

namespace rmcf {

enum class ShrinkerKind { Round, AbreschLanger, AngenentTorus };

struct ShrinkerSpec {
  ShrinkerKind kind = ShrinkerKind::Round;
  int dimension = 1;        // round: 1 = circle, 2 = sphere profile
  int p = 2, q = 3;         // abresch_langer: rotation index p, q petals
  int n_vertices = 2048;
  double tolerance = 1e-12;          // shooting tolerance
  double initial_guess = 0.0;        // optional shooting start (0 = default)
};

struct ShootingResult {
  GeometrySnapshot geometry;
  double shooting_parameter = 0.0;   // starting radius of the shot
  double closure_error = 0.0;
  double residual = 0.0;             // max |Htilde| of the assembled geometry
};

// S^1(sqrt 2) as a planar curve (n=1) or S^2(2) as an open revolution profile
// (n=2), exact to rounding.
GeometrySnapshot round_shrinker(int n, int n_vertices);

// Closed immersed planar self-shrinker with rotation index p and q petals.
// Admissible window: p, q coprime with p/q in (1/2, 1/sqrt 2).
ShootingResult shoot_abresch_langer(const ShrinkerSpec& spec);

// Embedded rotationally symmetric torus self-shrinker (closed profile,
// symmetric under z -> -z).
ShootingResult shoot_angenent_torus(const ShrinkerSpec& spec);

// max over vertices of |Htilde|.
double shrinker_residual(const GeometrySnapshot& geom);

}  // namespace rmcf
