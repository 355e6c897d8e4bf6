#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rmcflab/shrinkers.hpp"

using namespace rmcf;

TEST_CASE("round circle shrinker") {
  auto g = round_shrinker(1, 2048);
  CHECK(g.vertices.colwise().norm().maxCoeff() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-14));
  // chord-normalized differences make the circle an exact discrete shrinker,
  // so the residual is pure roundoff (which grows like eps/h^2)
  CHECK(shrinker_residual(g) < 1e-10);
  CHECK(turning_number(g) == 1);
}

TEST_CASE("round sphere shrinker") {
  auto g = round_shrinker(2, 2049);
  CHECK(g.mode == Mode::Revolution);
  CHECK(!g.closed);
  for (int k = 0; k < 2049; k += 97)
    CHECK(g.vertices.col(k).norm() == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(shrinker_residual(g) < 1e-5);
}

TEST_CASE("abresch-langer window is enforced") {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AbreschLanger;
  s.p = 3;
  s.q = 4;  // 3/4 > 1/sqrt 2
  CHECK_THROWS_AS(shoot_abresch_langer(s), NoSolutionInWindow);
  s.p = 1;
  s.q = 2;  // boundary of the window
  CHECK_THROWS_AS(shoot_abresch_langer(s), NoSolutionInWindow);
  s.p = 2;
  s.q = 4;  // not coprime
  CHECK_THROWS_AS(shoot_abresch_langer(s), Error);
}

TEST_CASE("abresch-langer (1,1) is the round circle") {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AbreschLanger;
  s.p = 1;
  s.q = 1;
  s.n_vertices = 512;
  auto res = shoot_abresch_langer(s);
  CHECK(res.shooting_parameter == doctest::Approx(std::sqrt(2.0)));
  CHECK(res.geometry.vertices.colwise().norm().maxCoeff() ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
}

TEST_CASE("abresch-langer (2,3) curve") {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AbreschLanger;
  s.p = 2;
  s.q = 3;
  s.n_vertices = 3072;
  auto res = shoot_abresch_langer(s);
  // outer radius from an independent shooting run, frozen
  CHECK(res.shooting_parameter == doctest::Approx(2.7345192018514184).epsilon(1e-8));
  const auto radii = res.geometry.vertices.colwise().norm();
  CHECK(radii.minCoeff() == doctest::Approx(0.4429040169618785).epsilon(1e-6));
  CHECK(radii.maxCoeff() == doctest::Approx(2.7345192018514184).epsilon(1e-8));
  CHECK(res.closure_error < 1e-7);
  CHECK(res.residual < 1e-6);
  CHECK(res.geometry.immersed);
  CHECK(turning_number(res.geometry) == 2);
  CHECK(is_self_intersecting(res.geometry));
}

TEST_CASE("abresch-langer (3,5) curve") {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AbreschLanger;
  s.p = 3;
  s.q = 5;
  s.n_vertices = 4096;
  auto res = shoot_abresch_langer(s);
  CHECK(res.shooting_parameter == doctest::Approx(3.8700).epsilon(1e-3));
  CHECK(res.closure_error < 1e-6);
  CHECK(res.residual < 1e-3);
  CHECK(turning_number(res.geometry) == 3);
}

TEST_CASE("angenent torus") {
  ShrinkerSpec s;
  s.kind = ShrinkerKind::AngenentTorus;
  s.n_vertices = 2048;
  auto res = shoot_angenent_torus(s);
  // equatorial radii from an independent shooting run, frozen
  CHECK(res.shooting_parameter == doctest::Approx(3.314708266556572).epsilon(1e-10));
  const auto& v = res.geometry.vertices;
  CHECK(v.row(0).minCoeff() == doctest::Approx(0.43712396709778206).epsilon(1e-6));
  CHECK(res.closure_error < 1e-10);
  CHECK(res.residual < 5e-7);
  CHECK(res.geometry.mode == Mode::Revolution);
  CHECK(res.geometry.closed);
  CHECK(!res.geometry.immersed);
  CHECK(!is_self_intersecting(res.geometry));
  CHECK(signed_area(res.geometry) > 0);
  // profile is symmetric under z -> -z
  const int n = static_cast<int>(res.geometry.size());
  for (int k = 1; k < n / 2; k += 31) {
    CHECK(v(0, k) == doctest::Approx(v(0, n - k)).epsilon(1e-9));
    CHECK(v(1, k) == doctest::Approx(-v(1, n - k)).epsilon(1e-9));
  }
}

TEST_CASE("residual drops by >= 3x when the resolution doubles") {
  ShrinkerSpec a;
  a.kind = ShrinkerKind::AbreschLanger;
  a.p = 2;
  a.q = 3;
  a.n_vertices = 512;
  const double al_coarse = shoot_abresch_langer(a).residual;
  a.n_vertices = 1024;
  const double al_fine = shoot_abresch_langer(a).residual;
  CHECK(al_coarse / al_fine > 3.0);

  ShrinkerSpec t;
  t.kind = ShrinkerKind::AngenentTorus;
  t.n_vertices = 256;
  const double to_coarse = shoot_angenent_torus(t).residual;
  t.n_vertices = 512;
  const double to_fine = shoot_angenent_torus(t).residual;
  CHECK(to_coarse / to_fine > 3.0);
}
