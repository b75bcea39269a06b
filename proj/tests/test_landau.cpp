#include "doctest.h"

#include "llab/landau.hpp"
#include "llab/macro.hpp"

#include <cmath>

using namespace llab;

TEST_SUITE("landau_coefficients") {

TEST_CASE("Maxwellian normalization and square root") {
  Vec3d v(0.7, -0.2, 1.1);
  CHECK(sqrt_maxwellian(v) * sqrt_maxwellian(v) == doctest::Approx(maxwellian(v)).epsilon(1e-15));
  VGrid g(33, 8.0);
  double s = 0.0;
  for (std::int64_t i = 0; i < g.size(); ++i) s += maxwellian(g.v(i)) * g.cell();
  CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("phi kernel is singular at zero and annihilates z") {
  CHECK_THROWS_AS(phi_kernel(Vec3d::Zero()), Error);
  Vec3d z(1.0, 2.0, -0.5);
  CHECK((phi_kernel(z) * z).norm() < 1e-15);
}

TEST_CASE("closed-form sigma_mu against the spherical quadrature") {
  SphereRule rule;
  for (Vec3d v : {Vec3d(0.0, 0.0, 0.0), Vec3d(0.5, -0.3, 0.2), Vec3d(1.5, 0.4, -2.0)}) {
    auto q = convolve_sphere([](const Vec3d& u) { return maxwellian(u); }, v, rule);
    CHECK((q.first - sigma_mu(v)).norm() < 1e-6 * sigma_mu(v).norm());
  }
}

TEST_CASE("sigma_mu eigenpairs") {
  Vec3d v(0.6, 0.8, 0.0);
  RadialPair e = sigma_mu_eigen(v.norm());
  Mat3d s = sigma_mu(v);
  CHECK((s * v - e.parallel * v).norm() < 1e-13);
  Vec3d t(-0.8, 0.6, 0.0);
  CHECK((s * t - e.perp * t).norm() < 1e-13);
}

TEST_CASE("sigma_mu divergence matches differences") {
  Vec3d v(0.4, -0.9, 0.3);
  double h = 1e-5;
  Vec3d fd = Vec3d::Zero();
  for (int i = 0; i < 3; ++i) {
    Vec3d e = Vec3d::Zero();
    e[i] = h;
    fd += (sigma_mu(v + e).row(i) - sigma_mu(v - e).row(i)).transpose() / (2 * h);
  }
  CHECK((sigma_mu_div(v) - fd).norm() < 1e-8);
}

TEST_CASE("exact Gaussian moments") {
  CHECK(gaussian_moment(0, 0, 0) == 1.0);
  CHECK(gaussian_moment(2, 0, 0) == 1.0);
  CHECK(gaussian_moment(4, 0, 0) == 3.0);
  CHECK(gaussian_moment(2, 2, 2) == 1.0);
  CHECK(gaussian_moment(0, 6, 0) == 15.0);
  CHECK(gaussian_moment(1, 2, 0) == 0.0);
}

TEST_CASE("collision invariants are orthonormal under the Gaussian oracle") {
  for (int a = 0; a < 5; ++a)
    for (int b = 0; b < 5; ++b)
      CHECK((chi_poly(a) * chi_poly(b)).expectation() == doctest::Approx(a == b ? 1.0 : 0.0));
  for (int j = 0; j < 3; ++j) {
    CHECK((burnett_A_poly(j) * burnett_A_poly(j)).expectation() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK((burnett_A_poly(j) * chi_poly(0)).expectation() == doctest::Approx(0.0));
  }
}

TEST_CASE("L of the collision invariants vanishes under refinement") {
  auto residual = [](int n, int k) {
    VGrid vg(n, 8.0);
    VConvolver conv(vg);
    Eigen::VectorXd f(vg.size());
    for (std::int64_t i = 0; i < vg.size(); ++i) f[i] = chi(k, vg.v(i));
    return std::sqrt(apply_L(conv, f).squaredNorm() * vg.cell());
  };
  for (int k : {0, 1, 4}) {
    double coarse = residual(16, k), fine = residual(32, k);
    CHECK(fine < coarse / 2.5);
    CHECK(fine < 0.2);
  }
}

TEST_CASE("K-bar assembly agrees with -L at g = 0") {
  VGrid vg(12, 6.0);
  VConvolver conv(vg);
  CollisionCoefficients cc(vg, BackgroundG{});
  Eigen::VectorXd f(vg.size()), zero = Eigen::VectorXd::Zero(vg.size());
  for (std::int64_t i = 0; i < vg.size(); ++i) {
    Vec3d v = vg.v(i);
    f[i] = (1.0 + v[0] - 0.3 * v[1] * v[2]) * sqrt_maxwellian(v);
  }
  Eigen::VectorXd L = apply_L(conv, f);
  CHECK((apply_full(conv, zero, f) + L).norm() < 1e-10 * L.norm());
  Eigen::MatrixXd M = kbar_matrix(cc, conv);
  Eigen::VectorXd expect = apply_K(conv, f);
  for (std::int64_t i = 0; i < vg.size(); ++i) expect[i] += cc.kbar_0_coef(i) * f[i];
  CHECK((M * f - expect).norm() < 1e-10 * expect.norm());
}

TEST_CASE("zeroth-order K-bar coefficient") {
  VGrid vg(5, 2.0);
  CollisionCoefficients cc(vg, BackgroundG{});
  for (std::int64_t i = 0; i < vg.size(); ++i) {
    Vec3d v = vg.v(i);
    CHECK(cc.kbar_0_coef(i) ==
          doctest::Approx(0.5 * sigma_mu_vec_div(v) - 0.25 * v.dot(sigma_mu(v) * v)).epsilon(1e-14));
  }
}

}  // TEST_SUITE
