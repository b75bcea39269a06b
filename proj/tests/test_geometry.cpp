#include "doctest.h"

#include "llab/domain.hpp"
#include "llab/quadrature.hpp"
#include "llab/regularization.hpp"

#include <cmath>

using namespace llab;

TEST_SUITE("domain_geometry") {

TEST_CASE("slab normals point out of both walls") {
  DomainSpec d = make_slab(1.0, 1.0, 0.25);
  CHECK(outward_normal(d, Vec3d(0.3, 0.2, 0.0)).isApprox(Vec3d(0, 0, -1)));
  CHECK(outward_normal(d, Vec3d(0.3, 0.2, 1.0)).isApprox(Vec3d(0, 0, 1)));
}

TEST_CASE("slab normal coordinates near the lower wall") {
  DomainSpec d = make_slab(1.0, 1.0, 0.25);
  auto nc = normal_coordinates(d, Vec3d(0.4, 0.1, 0.1), Vec3d(0.5, 0.0, 2.0));
  CHECK(nc.in_bd);
  CHECK(std::abs(nc.x_perp) == doctest::Approx(0.1));
  // moving up is moving away from the bottom wall
  CHECK(nc.v_perp == doctest::Approx(-2.0));
  auto mid = normal_coordinates(d, Vec3d(0.4, 0.1, 0.5), Vec3d(0.5, 0.0, 2.0));
  CHECK_FALSE(mid.in_bd);
}

TEST_CASE("classification on the wall") {
  DomainSpec d = make_slab(1.0, 1.0);
  CHECK(classify(d, Vec3d(0.1, 0.1, 0.0), Vec3d(0, 0, -1)).kind == BoundaryKind::outgoing);
  CHECK(classify(d, Vec3d(0.1, 0.1, 0.0), Vec3d(0, 0, 1)).kind == BoundaryKind::incoming);
  CHECK(classify(d, Vec3d(0.1, 0.1, 0.0), Vec3d(1, 0, 0)).kind == BoundaryKind::grazing);
  CHECK(classify(d, Vec3d(0.1, 0.1, 0.5), Vec3d(1, 0, 0)).kind == BoundaryKind::interior);
}

TEST_CASE("specular reflection is an involution and keeps |v|") {
  Vec3d n = Vec3d(1, 2, 2) / 3.0;
  Vec3d v(0.3, -1.2, 0.7);
  Vec3d r = reflect(v, n);
  CHECK(r.norm() == doctest::Approx(v.norm()).epsilon(1e-15));
  CHECK((reflect(r, n) - v).norm() < 1e-15);
  CHECK(r.dot(n) == doctest::Approx(-v.dot(n)));
}

TEST_CASE("ball closest point and symmetry") {
  DomainSpec b = make_ball(1.0);
  Vec3d p = closest_boundary_point(b, Vec3d(0.3, 0.4, 0.0));
  CHECK((p - Vec3d(0.6, 0.8, 0.0)).norm() < 1e-8);
  auto pts = sample_boundary(b, 200, 7);
  CHECK(rotational_symmetry_residual(b, Vec3d::Zero(), Vec3d(0, 0, 1), pts) < 1e-8);
  CHECK(validate_delta0(b, 200, 3) == 0);
}

TEST_CASE("graph patches reproduce the boundary") {
  CHECK(patch_graph_residual(make_ellipsoid(1.0, 0.8, 0.6), 50, 11) < 1e-8);
  CHECK(patch_graph_residual(make_ball(1.3), 50, 11) < 1e-8);
}

}  // TEST_SUITE

TEST_SUITE("regularization") {

TEST_CASE("smooth step ends and midpoint") {
  CHECK(smooth_step(-0.1) == 0.0);
  CHECK(smooth_step(0.0) == 0.0);
  CHECK(smooth_step(1.0) == 1.0);
  CHECK(smooth_step(0.5) == doctest::Approx(0.5).epsilon(1e-15));
  double h = 1e-6;
  for (double t : {0.2, 0.5, 0.8})
    CHECK(smooth_step_deriv(t) ==
          doctest::Approx((smooth_step(t + h) - smooth_step(t - h)) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("cutoff lambda support") {
  CutoffFamily fam(0.2);
  double e4 = fam.eps4();
  CHECK(fam.lambda(0.0) == 0.0);
  CHECK(fam.lambda(0.99 * e4) == 0.0);
  CHECK(fam.lambda(2.0 * e4) == 1.0);
  CHECK(fam.lambda(-3.0 * e4) == 1.0);
  CHECK(fam.lambda(1.5 * e4) == doctest::Approx(fam.lambda(-1.5 * e4)));
  CHECK_THROWS_AS(CutoffFamily(0.5), Error);
}

TEST_CASE("regularized drift is v away from the walls") {
  CutoffFamily fam(0.2);
  DomainSpec d = make_slab(1.0, 1.0);
  Vec3d v(0.4, -0.3, 1.1);
  CHECK(regularized_drift(fam, d, Vec3d(0.2, 0.2, 0.5), v) == v);
  // on the wall eta = 0 so W = beta = lambda(v_perp) v
  Vec3d w = regularized_drift(fam, d, Vec3d(0.2, 0.2, 1e-9), Vec3d(0.4, 0.0, 0.0));
  CHECK(w.norm() < 1e-12);
}

TEST_CASE("Gauss-Legendre integrates degree 2n-1 exactly") {
  Rule1d r = gauss_legendre(6, 0.0, 2.0);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * std::pow(r.x[i], 11);
  CHECK(s == doctest::Approx(std::pow(2.0, 12) / 12.0).epsilon(1e-13));
}

TEST_CASE("bump kernel moments are (1, 0, 1)") {
  BumpKernel k(16);
  auto m = k.moments();
  CHECK(m[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(m[1]) < 1e-15);
  CHECK(m[2] == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("Q_eps is exact on quadratics") {
  CutoffFamily fam(0.2);
  BumpKernel ker(8);
  Mat3d M;
  M << 1.0, 0.3, -0.2, 0.3, 2.0, 0.5, -0.2, 0.5, -0.7;
  Vec3d b(0.4, -1.0, 2.0);
  auto f = [&](const Vec3d& v) { return v.dot(M * v) + b.dot(v) + 3.0; };
  Mat3d S;
  S << 1.2, 0, 0, 0.1, 0.9, 0, -0.3, 0.2, 0.7;
  QepsOptions opt;
  opt.S = S;
  Vec3d v(0.3, -0.8, 1.5);
  // 2 tr(S^T M S): the Laplacian in coordinates standardized by S
  double lap = 2.0 * (S.transpose() * M * S).trace();
  CHECK(q_eps(fam, ker, f, v, opt) == doctest::Approx(lap).epsilon(1e-12));
  CHECK(q_eps_adjoint(fam, ker, f, v, opt) == doctest::Approx(lap).epsilon(1e-12));
}

TEST_CASE("Q_eps refuses to leave a closed box") {
  CutoffFamily fam(0.2);
  BumpKernel ker(4);
  QepsOptions opt;
  opt.vmax = 1.0;
  opt.extrapolate = false;
  auto f = [](const Vec3d& v) { return v.squaredNorm(); };
  CHECK_THROWS_AS(q_eps(fam, ker, f, Vec3d(0.99, 0, 0), opt), Error);
}

}  // TEST_SUITE
