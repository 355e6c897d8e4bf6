#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "rmcflab/shrinkers.hpp"
#include "rmcflab/spectral.hpp"

using namespace rmcf;

namespace {

GeometrySnapshot torus(int n) {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AngenentTorus;
  s.n_vertices = n;
  return shoot_angenent_torus(s).geometry;
}

}  // namespace

TEST_CASE("L on the round circle: constants are fixed with eigenvalue 1") {
  auto g = round_shrinker(1, 512);
  auto L = assemble_L(g);
  const Eigen::ArrayXd ones = Eigen::ArrayXd::Ones(512);
  CHECK((L.apply(ones) - 1.0).abs().maxCoeff() < 1e-8);

  auto pair = first_eigenpair(L);
  CHECK(pair.mu == doctest::Approx(1.0).epsilon(1e-10));
  CHECK((pair.phi - 1.0).abs().maxCoeff() < 1e-8);
}

TEST_CASE("L on the sphere profile: constants are fixed with eigenvalue 1") {
  auto g = round_shrinker(2, 513);
  auto L = assemble_L(g);
  auto pair = first_eigenpair(L);
  CHECK(pair.mu == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(pair.phi.minCoeff() > 0.999);
}

TEST_CASE("discrete L is self-adjoint in the weighted inner product") {
  std::mt19937 rng(12345);
  std::normal_distribution<double> gauss;
  for (const auto& g : {round_shrinker(1, 256), round_shrinker(2, 257), torus(512)}) {
    auto L = assemble_L(g);
    const Eigen::Index n = L.size();
    for (int trial = 0; trial < 4; ++trial) {
      Eigen::ArrayXd u(n), v(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        u(i) = gauss(rng);
        v(i) = gauss(rng);
      }
      const double asym = std::abs(L.inner(L.apply(u), v) - L.inner(u, L.apply(v)));
      CHECK(asym < 1e-8 * u.matrix().norm() * v.matrix().norm());
    }
  }
}

TEST_CASE("LH = H identity converges at second order") {
  auto lh_err = [](const GeometrySnapshot& g) {
    auto L = assemble_L(g);
    return (L.apply(g.H) - g.H).abs().maxCoeff();
  };
  // near-exact on the circle (constant H)
  CHECK(lh_err(round_shrinker(1, 512)) < 1e-7);

  // least-squares slope of log error vs log N
  auto fit_slope = [&](const std::vector<int>& ns, auto&& make) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int n : ns) {
      const double x = std::log(n), y = std::log(lh_err(make(n)));
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double m = ns.size();
    return -(m * sxy - sx * sy) / (m * sxx - sx * sx);
  };

  CHECK(fit_slope({512, 768, 1024}, [](int n) { return torus(n); }) > 1.8);
  CHECK(fit_slope({384, 768, 1536}, [](int n) {
          ShrinkerSpec al;
          al.kind = ShrinkerKind::AbreschLanger;
          al.p = 2;
          al.q = 3;
          al.n_vertices = n;
          return shoot_abresch_langer(al).geometry;
        }) > 1.8);
}

TEST_CASE("angenent torus ground state") {
  auto L = assemble_L(torus(1024));
  auto pair = first_eigenpair(L);
  CHECK(pair.mu > 1.0);
  // frozen from an independent eigen-solve of the same reduced operator
  CHECK(pair.mu == doctest::Approx(3.7398).epsilon(2e-3));
  CHECK(pair.phi.minCoeff() > 0.0);
  CHECK(pair.phi.maxCoeff() == doctest::Approx(1.0));
  // eigen-residual in the max norm
  CHECK((L.apply(pair.phi) - pair.mu * pair.phi).abs().maxCoeff() < 1e-8);
}

TEST_CASE("perturbing the circle by a constant moves the radius") {
  PerturbationSpec spec;
  spec.shrinker = round_shrinker(1, 512);
  spec.f = Eigen::ArrayXd::Ones(512);

  spec.s = -0.1;
  auto in = perturb(spec);
  CHECK(in.vertices.colwise().norm().maxCoeff() ==
        doctest::Approx(std::sqrt(2.0) - 0.1).epsilon(1e-8));
  auto cin = classify_perturbation(in);
  CHECK(cin.cls == PerturbationClass::RescaledMeanConvex);
  CHECK(cin.margin == doctest::Approx(1.0 / 1.31421 - 1.31421 / 2).epsilon(1e-4));

  spec.s = 0.1;
  auto out = perturb(spec);
  auto cout_ = classify_perturbation(out);
  CHECK(cout_.cls == PerturbationClass::RescaledMeanConcave);
  CHECK(cout_.margin == doctest::Approx(1.51421 / 2 - 1.0 / 1.51421).epsilon(1e-4));

  spec.s = 0.0;
  auto same = perturb(spec);
  CHECK((same.vertices - spec.shrinker.vertices).cwiseAbs().maxCoeff() < 1e-9);

  auto neither = classify_perturbation(spec.shrinker);
  CHECK(neither.cls == PerturbationClass::Neither);
}

TEST_CASE("oversized perturbations are rejected") {
  PerturbationSpec spec;
  spec.shrinker = torus(512);
  spec.f = Eigen::ArrayXd::Ones(512);
  spec.s = -1.5;
  CHECK_THROWS_AS(perturb(spec), Error);
}

TEST_CASE("epsilon_search returns classified amplitudes of both signs") {
  auto g = torus(512);
  auto pair = first_eigenpair(assemble_L(g));

  const double s_in = epsilon_search(g, pair.phi, -1);
  CHECK(s_in < 0);
  PerturbationSpec spec{g, pair.phi, s_in};
  auto cin = classify_perturbation(perturb(spec));
  CHECK(cin.cls == PerturbationClass::RescaledMeanConvex);
  CHECK(cin.margin >= 1e-3);

  const double s_out = epsilon_search(g, pair.phi, +1);
  CHECK(s_out > 0);
  spec.s = s_out;
  auto cout_ = classify_perturbation(perturb(spec));
  CHECK(cout_.cls == PerturbationClass::RescaledMeanConcave);
  CHECK(cout_.margin >= 1e-3);
}
