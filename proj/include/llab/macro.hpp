#pragma once

#include "llab/grid.hpp"
#include "llab/landau.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace llab {

/// Polynomial in v with real coefficients; paired with sqrt(mu) factors the
/// L2(dv) product of p sqrt(mu) and q sqrt(mu) is the standard Gaussian
/// expectation of p q.
struct GaussPoly {
  std::map<std::array<int, 3>, double> terms;

  static GaussPoly monomial(int e1, int e2, int e3, double c = 1.0);
  static GaussPoly constant(double c) { return monomial(0, 0, 0, c); }
  GaussPoly operator+(const GaussPoly& o) const;
  GaussPoly operator*(const GaussPoly& o) const;
  GaussPoly operator*(double s) const;
  double operator()(const Vec3d& v) const;
  /// E[p(V)], V standard normal in R^3, from E[V^{2k}] = (2k-1)!!.
  double expectation() const;
};

/// E[V1^e1 V2^e2 V3^e3] exactly.
double gaussian_moment(int e1, int e2, int e3);

/// Polynomial parts (without sqrt(mu)) of chi_k, A_j, B_kl; indices 0-based.
GaussPoly chi_poly(int k);
GaussPoly burnett_A_poly(int j);
GaussPoly burnett_B_poly(int k, int l);

/// v_j (|v|^2 - 5) / sqrt(10) sqrt(mu) and (v_k v_l - delta_kl |v|^2 / 3) sqrt(mu).
double burnett_A(int j, const Vec3d& v);
double burnett_B(int k, int l, const Vec3d& v);

/// Pf = a chi_0 + b . (chi_1, chi_2, chi_3) + c chi_4 and d = f - Pf.
struct MacroFields {
  Eigen::VectorXd a;
  std::array<Eigen::VectorXd, 3> b;
  Eigen::VectorXd c;
  Eigen::VectorXd d;
};

MacroFields project_P(const PhaseGrid& grid, const Eigen::VectorXd& f);
/// a chi_0 + b.chi + c chi_4 (without d).
Eigen::VectorXd macro_part(const PhaseGrid& grid, const MacroFields& m);

/// Boundary kinds on the slab: x1, x2 are periodic throughout.
/// neumann_zero: d_n phi = 0, mean-zero gauge; mean_zero: same operator, the
/// right-hand side mean is projected out first; tangential: vector potential
/// with phi.n = 0 (phi3 = 0 on the walls) and d_n phi1 = d_n phi2 = 0.
enum class PoissonBC { neumann_zero, mean_zero, tangential };

std::string to_string(PoissonBC bc);

struct PoissonSolution {
  PoissonBC bc = PoissonBC::neumann_zero;
  /// One component, or three for tangential.
  std::vector<Eigen::VectorXd> potential;
  /// |Lap phi + rhs| / |rhs| in the discrete L2 norm (0 for rhs = 0).
  double residual = 0.0;
  /// (|phi|_2^2 + |grad phi|_2^2)^{1/2} summed over components.
  double h1 = 0.0;
  /// |grad phi|_2.
  double grad_l2 = 0.0;
};

/// -Lap phi = rhs on the cell-centred slab grid. rhs holds one field, or three
/// for tangential. Neumann solvability is checked at 1e-6 relative.
PoissonSolution poisson_solve(const SlabGrid& xg, const std::vector<Eigen::VectorXd>& rhs,
                              PoissonBC bc);

/// Discrete Laplacian with the boundary closure of one component
/// (dirichlet: phi = 0 on the walls, else d_n phi = 0).
Eigen::VectorXd slab_laplacian(const SlabGrid& xg, const Eigen::VectorXd& phi, bool dirichlet);
/// Centred gradient component (axis 0..2) with the same closure.
Eigen::VectorXd slab_gradient(const SlabGrid& xg, const Eigen::VectorXd& phi, int axis,
                              bool dirichlet);

/// Three-point time derivative of a sampled series (one-sided second order at the ends).
std::vector<Eigen::VectorXd> time_derivative(const std::vector<double>& t,
                                             const std::vector<Eigen::VectorXd>& series);

struct MacroControlRow {
  double t = 0.0;
  double eta = 0.0;
  double lhs = 0.0;        // int_0^t |Pf|_sigma^2
  double micro = 0.0;      // int_0^t |(I-P)f|_sigma^2
  double c_needed = 0.0;   // smallest C making lhs <= eta(t) - eta(0) + C micro
  double margin = 0.0;     // rhs - lhs at the fitted C
  double l2sq = 0.0;       // |f(t)|_2^2
  double mean_a = 0.0, mean_c = 0.0;
};

struct MacroControlReport {
  std::vector<MacroControlRow> rows;
  double c_fit = 0.0;
  /// max |eta(t)| / |f(t)|_2^2.
  double c_eta = 0.0;
  double worst_margin = 0.0;
  double max_poisson_residual = 0.0;
  /// Growth of max(|int a|, |int b1|, |int b2|, |int c|) over the series (the
  /// means are projected out before the Poisson solves).
  double mean_drift = 0.0;
  /// Bound-check regressions |grad Phi| / |source| for the time-derivative problems.
  double c_phi_a = 0.0, c_phi_b = 0.0, c_phi_c = 0.0;
  bool holds = false;
};

/// eta(t) = -<psi_a + psi_b + psi_c, f(t)>, sides of the macroscopic control
/// inequality along a series. c_fixed > 0 checks a given constant instead of fitting.
MacroControlReport macro_control_report(const PhaseGrid& grid, const std::vector<KineticField>& series,
                                        double c_fixed = 0.0, double safety = 2.0);

/// Sums the test functions of the three Poisson problems for one field.
Eigen::VectorXd macro_test_function(const PhaseGrid& grid, const Eigen::VectorXd& f);

/// Wall integral of psi_c f (v.n) over both walls, using the wall-adjacent
/// cells as traces.
double wall_psi_c_flux(const PhaseGrid& grid, const Eigen::VectorXd& f);

struct CoercivityReport {
  double delta_min = 0.0;
  int samples = 0;
  int excluded = 0;
  std::vector<double> quotients;
};

/// Rayleigh quotients <Lg, g> / |(I-P)g|_sigma^2 over a seeded random family of
/// smooth velocity slices, plus the given extra slices.
CoercivityReport coercivity_spotcheck(const VConvolver& conv, int count, std::uint64_t seed,
                                      const std::vector<Eigen::VectorXd>& extra = {});

struct DecayReport {
  std::vector<double> t, l2, energy;
  double energy_ratio = 0.0;        // max E(t) / E(0)
  double monotone_violation = 0.0;  // max increase of |f|_2 after the transient
  double decay_exponent = 0.0;      // slope of log|f|_2 against log(1 + t)
  bool monotone = true;
};

DecayReport decay_monitor(const PhaseGrid& grid, const std::vector<KineticField>& series,
                          double theta, double slack = 1e-8, int transient = 0);

}  // namespace llab
