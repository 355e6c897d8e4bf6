#pragma once

#include "rmcflab/geometry.hpp"

namespace rmcf {

// Finite-volume discretization of the linearized operator
//   L u = Delta u - <x, grad u>/2 + (1/2 + |A|^2) u
// on a shrinker, written in divergence form (1/w)(w u')' + c u with Gaussian
// weight w = e^{-|x|^2/4} (times r when restricted to rotationally symmetric
// functions on a surface of revolution). Self-adjoint in the weighted inner
// product with the cell measures.
struct LinearizedOperator {
  Eigen::VectorXd diag, lower, upper;  // bands; lower(i) couples i to i-1
  double corner_lo = 0.0, corner_up = 0.0;  // wrap couplings when closed
  Eigen::ArrayXd measure;              // Gaussian cell measures (inner product)
  bool closed = true;
  double h = 0.0;                      // arclength step of the grid

  Eigen::Index size() const { return diag.size(); }
  Eigen::ArrayXd apply(const Eigen::ArrayXd& u) const;
  double inner(const Eigen::ArrayXd& u, const Eigen::ArrayXd& v) const;
};

struct EigenPair {
  double mu = 0.0;           // largest eigenvalue
  Eigen::ArrayXd phi;        // positive eigenfunction, max-norm 1
};

struct PerturbationSpec {
  GeometrySnapshot shrinker;
  Eigen::ArrayXd f;          // positive per-vertex profile
  double s = 0.0;            // signed amplitude (s < 0 inward, s > 0 outward)
};

enum class PerturbationClass { RescaledMeanConvex, RescaledMeanConcave, Neither };

struct Classification {
  PerturbationClass cls = PerturbationClass::Neither;
  double margin = 0.0;       // min |Htilde| for uniform sign, else 0
};

// Requires shrinker_residual(geom) <= 1e-5 (NotAShrinker otherwise).
LinearizedOperator assemble_L(const GeometrySnapshot& shrinker);

// Largest eigenvalue and positive eigenfunction by shifted inverse power
// iteration; EigenSolveFailure on non-convergence within 1e4 iterations.
EigenPair first_eigenpair(const LinearizedOperator& L);

// Normal graph x + s f(x) n(x), re-equidistributed and with derived fields
// recomputed. PerturbationTooLarge if an embedded input self-intersects.
GeometrySnapshot perturb(const PerturbationSpec& spec);

Classification classify_perturbation(const GeometrySnapshot& geom);

// Largest amplitude of the given sign, found by halving down from
// 0.1 * min f / max f, whose perturbation classifies with margin >= 1e-3.
double epsilon_search(const GeometrySnapshot& shrinker, const Eigen::ArrayXd& f,
                      int sign);

}  // namespace rmcf
