#include "doctest.h"

#include "llab/flatten.hpp"

#include <cmath>

using namespace llab;

TEST_SUITE("boundary_flatten") {

TEST_CASE("flat patch gives the identity") {
  FlattenFrame f = frame_at(flat_patch(), Vec3d(0.2, -0.3, -0.1));
  CHECK((f.A_inv - Mat3d::Identity()).norm() == 0.0);
  CHECK(f.det_A_inv == 1.0);
  CHECK((f.B(Vec3d(1, 2, 3))).norm() == 0.0);
}

TEST_CASE("tilted plane matrices") {
  const double a = 0.4;
  FlattenFrame f = frame_at(tilted_patch(a), Vec3d(0.1, 0.2, -0.3));
  Mat3d Ainv;
  Ainv << 1, 0, -a, 0, 1, 0, a, 0, 1;
  CHECK((f.A_inv - Ainv).norm() < 1e-15);
  CHECK(f.det_A_inv == doctest::Approx(1 + a * a).epsilon(1e-15));
  Mat3d C = Mat3d::Identity();
  C(0, 0) = C(2, 2) = 1 + a * a;
  CHECK((f.C - C).norm() < 1e-15);
  CHECK((f.A * f.A_inv - Mat3d::Identity()).norm() < 1e-15);
}

TEST_CASE("closed forms on a curved patch") {
  BoundaryPatch p = saddle_patch();
  for (double y3 : {0.0, -0.05, -0.2}) {
    FlattenFrame f = frame_at(p, Vec3d(0.3, -0.4, y3));
    CHECK(f.det_A_inv == doctest::Approx(det_closed_form(f.jet, y3)).epsilon(1e-13));
    CHECK((f.A - A_closed_form(f.jet, y3)).norm() < 1e-12);
    CHECK((f.C - C_closed_form(f.jet, y3)).norm() < 1e-12);
  }
}

TEST_CASE("degenerate or out-of-chart points") {
  CHECK_THROWS_AS(frame_at(paraboloid_patch(), Vec3d(5.0, 0.0, 0.0)), Error);
  // 1 - y3 rho11 = 0 at y3 = 2 for the paraboloid (rho11 = 1/2)
  CHECK_THROWS_AS(frame_at(paraboloid_patch(), Vec3d(0.0, 0.0, 2.0)), Error);
}

TEST_CASE("specular commutation and round trip") {
  for (const auto& p : {flat_patch(), tilted_patch(0.4), paraboloid_patch(), saddle_patch()}) {
    CHECK(specular_commutation_check(p, 500, 3) < 1e-12);
    CHECK(round_trip_residual(p, 200, 4) < 1e-10);
  }
}

TEST_CASE("mirror extension of a specular field") {
  HalfGrid g;
  g.n = 3;
  g.m = 4;
  g.h = 0.1;
  g.h3 = 0.05;
  g.w = VGrid(5, 2.0);
  auto G = [](double r) { return std::exp(-r * r); };
  auto H = [](double y3) { return 1.0 + y3 + y3 * y3; };
  auto f = [&](const Vec3d& y, const Vec3d& w) { return G(w.norm()) * H(y[2]); };
  ExtendedField e = mirror_extend(g, f);
  for (int k = g.m; k < 2 * g.m; ++k)
    for (std::int64_t wi = 0; wi < g.w.size(); ++wi) {
      double expect = G(g.w.v(wi).norm()) * H(-e.y3(k));
      CHECK(e.values[e.index(1, 2, k, wi)] == doctest::Approx(expect).epsilon(1e-14));
    }
  auto phi = [](const Vec3d& y, const Vec3d& w) { return 1.0 + y[0] + w[2] * w[2]; };
  CHECK(std::abs(extension_boundary_term(e, phi)) < 1e-14);
}

TEST_CASE("non-specular data are rejected") {
  HalfGrid g;
  g.w = VGrid(4, 2.0);
  auto f = [](const Vec3d&, const Vec3d& w) { return w[2]; };
  CHECK_THROWS_AS(mirror_extend(g, f), Error);
}

TEST_CASE("interface continuity on the tilted plane") {
  MatrixField sigma = [](const Vec3d&, const Vec3d& v) { return Mat3d(Mat3d::Identity() + 0.1 * v * v.transpose()); };
  VectorField a = [](const Vec3d&, const Vec3d& v) { return Vec3d(-v); };
  ContinuityReport r = interface_continuity_certificate(tilted_patch(0.4), sigma, a, 50, 9);
  CHECK(r.a_residual < 1e-12);
  CHECK(r.c13_c23 < 1e-12);
  CHECK(r.aa_jump_extrapolated < 1e-6);
}

TEST_CASE("transport identity converges at second order") {
  auto f = [](const Vec3d& x, const Vec3d& v) { return std::sin(x[0] + 0.5 * x[2]) * std::exp(-0.2 * v.squaredNorm()) + x[1] * v[2]; };
  TransportInvarianceReport r = transport_invariance(paraboloid_patch(), f, 20, 5);
  CHECK(r.order > 1.8);
  CHECK(r.residual_plus.back() > 100 * r.residual.back());
}

}  // TEST_SUITE
