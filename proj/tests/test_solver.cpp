#include "doctest.h"

#include "llab/characteristics.hpp"
#include "llab/diffusion.hpp"
#include "llab/landau.hpp"
#include "llab/solver.hpp"

#include <cmath>
#include <random>

using namespace llab;

namespace {

struct Small {
  SlabGrid xg{1.0, 1.0, 3, 4};
  VGrid vg;
  PhaseGrid g;
  CollisionCoefficients cc;
  CutoffFamily fam{0.2};
  VelocityDiffusion Q;
  explicit Small(int nv = 8, DiffusionMode mode = DiffusionMode::A)
      : vg(nv, 4.0), g(xg, vg, 0.25), cc(vg, BackgroundG{}), Q(g, fam, cc, DiffusionOptions{mode}) {}
};

Eigen::VectorXd random_field(std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 r(seed);
  std::normal_distribution<double> N;
  Eigen::VectorXd a(n);
  for (auto& x : a) x = N(r);
  return a;
}

}  // namespace

TEST_SUITE("characteristics") {

TEST_CASE("free flight in the interior and J(t) = 1") {
  CutoffFamily fam(0.2);
  DomainSpec d = make_slab(1.0, 1.0);
  Vec3d x(0.3, 0.4, 0.5), v(0.5, -0.2, 0.3);
  Trajectory tr = integrate_backward(fam, d, VelocityForcing{}, 0.2, x, v);
  CHECK_FALSE(tr.hit0);
  CHECK((tr.samples.back().X - (x - 0.2 * v)).norm() < 1e-12);
  auto J = jacobian(tr);
  CHECK(J.front() == 1.0);
}

TEST_CASE("backward characteristic stops on the wall") {
  CutoffFamily fam(0.2);
  DomainSpec d = make_slab(1.0, 1.0);
  Trajectory tr = integrate_backward(fam, d, VelocityForcing{}, 1.0, Vec3d(0.5, 0.5, 0.3),
                                     Vec3d(0.0, 0.0, 2.0));
  CHECK(tr.hit0);
  CHECK(std::abs(tr.samples.back().X[2]) < 1e-8);
}

TEST_CASE("Jacobian stays inside the exponential band") {
  CutoffFamily fam(0.2);
  DomainSpec d = make_slab(1.0, 1.0);
  VelocityForcing B;
  B.field = [](double, const Vec3d& x, const Vec3d& v) { return Vec3d(0.3 * std::cos(2 * kPi * x[0]) * v); };
  B.div = [](double, const Vec3d& x, const Vec3d&) { return 0.9 * std::cos(2 * kPi * x[0]); };
  Trajectory tr = integrate_backward(fam, d, B, 0.3, Vec3d(0.2, 0.5, 0.05), Vec3d(0.4, 0.1, -0.05));
  auto J = jacobian(tr);
  double C = 1.1 * tr.max_abs_trace;
  for (std::size_t i = 0; i < J.size(); ++i) {
    double dt = std::abs(tr.samples[i].s - tr.samples.front().s);
    CHECK(J[i] >= std::exp(-C * dt) * (1 - 1e-12));
    CHECK(J[i] <= std::exp(C * dt) * (1 + 1e-12));
  }
}

}  // TEST_SUITE

TEST_SUITE("approx_solver") {

TEST_CASE("jump generator is symmetric with zero row sums") {
  Small s;
  const SpMat& M = s.Q.matrix();
  Eigen::VectorXd ones = Eigen::VectorXd::Ones(M.cols());
  CHECK((M * ones).cwiseAbs().maxCoeff() < 1e-12 * s.Q.norm_inf());
  SpMat Mt = M.transpose();
  CHECK((Eigen::MatrixXd(M) - Eigen::MatrixXd(Mt)).cwiseAbs().maxCoeff() < 1e-12 * s.Q.norm_inf());
  for (int k = 0; k < M.outerSize(); ++k)
    for (SpMat::InnerIterator it(M, k); it; ++it)
      if (it.row() != it.col()) CHECK(it.value() >= 0.0);
}

TEST_CASE("window guard") {
  Small s;
  SolverSchedule sch;
  CHECK_THROWS_AS(ApproxSolver(s.g, s.fam, s.Q, 0.1, 0.006, sch), Error);
  CHECK_THROWS_AS(ApproxSolver(s.g, s.fam, s.Q, 1.0, 0.004, sch), Error);
  CHECK_NOTHROW(ApproxSolver(s.g, s.fam, s.Q, 0.1, 0.004, sch));
}

TEST_CASE("maximum principle and L1 contraction on a short run") {
  Small s;
  SolverSchedule sch;
  ApproxSolver solver(s.g, s.fam, s.Q, 0.1, 0.004, sch);
  Eigen::VectorXd f0 = random_field(s.g.size(), 5).cwiseAbs();
  ForwardResult r = solver.forward(f0, 3, 5);
  CHECK(r.linf_ratio <= 1.0 + 1e-6);
  CHECK(r.l1_ratio <= 1.0 + 1e-6);
}

TEST_CASE("adjoint windows are the exact discrete transpose") {
  for (int nv : {8, 9}) {
    Small s(nv);
    SolverSchedule sch;
    sch.fixed_point_tol = 1e-15;
    sch.picard_max = 5000;
    ApproxSolver solver(s.g, s.fam, s.Q, 0.1, 0.004, sch);
    Eigen::VectorXd f = random_field(s.g.size(), 1), psi = random_field(s.g.size(), 2);
    Eigen::VectorXd FT = solver.propagate(f, 4);
    Eigen::VectorXd p0 = solver.adjoint(psi, 4, 1e-300).series.back().values;
    CHECK(duality_certificate(s.g, f, FT, p0, psi) < 1e-13);
  }
}

TEST_CASE("adjoint data must vanish near the grazing set") {
  Small s;
  Eigen::VectorXd psi = Eigen::VectorXd::Ones(s.g.size());
  CHECK_THROWS_AS(check_compatibility(s.g, s.fam, psi, 1.0), Error);
}

TEST_CASE("mild map contracts at the measured Lipschitz bound") {
  Small s;
  SolverSchedule sch;
  ApproxSolver solver(s.g, s.fam, s.Q, 0.1, 0.004, sch);
  Predicted p = solver.predict(random_field(s.g.size(), 3), InflowMode::absorbing, nullptr);
  Eigen::VectorXd a = random_field(s.g.size(), 4), b = random_field(s.g.size(), 6);
  double ratio = (solver.mild_map(p, a) - solver.mild_map(p, b)).cwiseAbs().maxCoeff() /
                 (a - b).cwiseAbs().maxCoeff();
  CHECK(ratio <= solver.lipschitz_bound() + 1e-12);
  CHECK(solver.lipschitz_bound() < 0.5);
}

}  // TEST_SUITE
