#include "doctest.h"

#include "llab/landau.hpp"
#include "llab/macro.hpp"

#include <cmath>

using namespace llab;

TEST_SUITE("macro_micro") {

TEST_CASE("Neumann Poisson on a cosine is the discrete eigenvector") {
  SlabGrid xg(1.0, 1.0, 4, 16);
  Eigen::VectorXd rhs(xg.size());
  for (std::int64_t i = 0; i < xg.size(); ++i) rhs[i] = std::cos(kPi * xg.x(i)[2]);
  PoissonSolution s = poisson_solve(xg, {rhs}, PoissonBC::neumann_zero);
  double h3 = xg.h3();
  double lam = (2.0 - 2.0 * std::cos(kPi * h3)) / (h3 * h3);
  CHECK(s.residual < 1e-10);
  CHECK((s.potential[0] - rhs / lam).cwiseAbs().maxCoeff() < 1e-10);
  // and close to the continuum solution cos / pi^2
  CHECK(std::abs(lam - kPi * kPi) / (kPi * kPi) < 0.01);
}

TEST_CASE("Neumann solvability is enforced") {
  SlabGrid xg(1.0, 1.0, 2, 4);
  Eigen::VectorXd rhs = Eigen::VectorXd::Ones(xg.size());
  CHECK_THROWS_AS(poisson_solve(xg, {rhs}, PoissonBC::neumann_zero), Error);
  CHECK_NOTHROW(poisson_solve(xg, {rhs}, PoissonBC::mean_zero));
}

TEST_CASE("tangential potential vanishes normally on the walls") {
  SlabGrid xg(1.0, 1.0, 4, 8);
  std::vector<Eigen::VectorXd> rhs(3, Eigen::VectorXd(xg.size()));
  for (std::int64_t i = 0; i < xg.size(); ++i) {
    Vec3d x = xg.x(i);
    rhs[0][i] = std::cos(kPi * x[2]);
    rhs[1][i] = std::sin(2 * kPi * x[0]) * std::cos(kPi * x[2]);
    rhs[2][i] = std::sin(kPi * x[2]);
  }
  PoissonSolution s = poisson_solve(xg, rhs, PoissonBC::tangential);
  REQUIRE(s.potential.size() == 3);
  CHECK(s.residual < 1e-10);
}

TEST_CASE("projection onto the collision invariants") {
  SlabGrid xg(1.0, 1.0, 2, 2);
  VGrid vg(24, 8.0);
  PhaseGrid g(xg, vg);
  Eigen::VectorXd f(g.size());
  for (std::int64_t vi = 0; vi < vg.size(); ++vi)
    for (std::int64_t xi = 0; xi < xg.size(); ++xi) {
      Vec3d v = vg.v(vi), x = xg.x(xi);
      f[vi * xg.size() + xi] = (1.0 + x[2]) * chi(0, v) - 0.5 * chi(2, v) + x[0] * chi(4, v);
    }
  MacroFields m = project_P(g, f);
  CHECK(m.d.cwiseAbs().maxCoeff() < 1e-7);
  for (std::int64_t xi = 0; xi < xg.size(); ++xi) {
    CHECK(m.a[xi] == doctest::Approx(1.0 + xg.x(xi)[2]).epsilon(1e-7));
    CHECK(m.b[1][xi] == doctest::Approx(-0.5).epsilon(1e-7));
    CHECK(m.c[xi] == doctest::Approx(xg.x(xi)[0]).scale(1.0).epsilon(1e-7));
  }
}

TEST_CASE("time derivative is exact on quadratics") {
  std::vector<double> t{0.0, 0.1, 0.3, 0.35, 0.6};
  std::vector<Eigen::VectorXd> s;
  for (double x : t) s.push_back(Eigen::VectorXd::Constant(2, 1.0 + 2.0 * x - 3.0 * x * x));
  auto d = time_derivative(t, s);
  for (std::size_t i = 0; i < t.size(); ++i) CHECK(d[i][0] == doctest::Approx(2.0 - 6.0 * t[i]));
}

}  // TEST_SUITE
