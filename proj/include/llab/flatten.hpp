#pragma once

#include "llab/common.hpp"
#include "llab/domain.hpp"
#include "llab/grid.hpp"

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

namespace llab {

/// Matrices of the flattening map at a point y of a graph patch, all in the
/// patch's local coordinates. x = (y1 - y3 rho1, y2 - y3 rho2, rho + y3).
struct FlattenFrame {
  Vec3d y = Vec3d::Zero();
  RhoJet<double> jet;
  /// dx/dy.
  Mat3d A_inv = Mat3d::Identity();
  Mat3d A = Mat3d::Identity();
  /// A_inv^T A_inv and its inverse A A^T.
  Mat3d C = Mat3d::Identity();
  Mat3d C_inv = Mat3d::Identity();
  double det_A_inv = 1.0;

  /// dv/dy at fixed w, for v = A_inv(y) w.
  Mat3d B(const Vec3d& w) const;
  /// Unnormalized normal (-rho1, -rho2, 1) at (y1, y2).
  Vec3d normal() const { return Vec3d(-jet.r1, -jet.r2, 1.0); }
};

/// Throws ChartDegenerate if det(A_inv) <= 1e-10 or (y1, y2) leaves the chart box.
FlattenFrame frame_at(const BoundaryPatch& patch, const Vec3d& y);

/// Closed forms of det(A_inv), A and C as polynomials in y3, for cross-checks.
double det_closed_form(const RhoJet<double>& j, double y3);
Mat3d A_closed_form(const RhoJet<double>& j, double y3);
Mat3d C_closed_form(const RhoJet<double>& j, double y3);

/// Local point of the flattened coordinates y.
Vec3d flatten_inverse(const BoundaryPatch& patch, const Vec3d& y);

/// (x, v) ambient -> (y, w) = (phi(x), A v); Newton inversion of phi^{-1}.
std::pair<Vec3d, Vec3d> push_phase(const BoundaryPatch& patch, const Vec3d& x, const Vec3d& v);
/// (y, w) -> (x, v) ambient.
std::pair<Vec3d, Vec3d> pull_phase(const BoundaryPatch& patch, const Vec3d& y, const Vec3d& w);

/// Box used for sampling a patch: its chart box clipped to [-1, 1]^2.
std::array<double, 4> sample_box(const BoundaryPatch& patch);

/// max |A_inv (R w) - R_x (A_inv w)| over random samples on y3 = 0, R_x the
/// reflection about the unit normal.
double specular_commutation_check(const BoundaryPatch& patch, int samples, std::uint64_t seed);

/// Max round-trip |pull(push(x, v)) - (x, v)| over random chart points.
double round_trip_residual(const BoundaryPatch& patch, int samples, std::uint64_t seed,
                           double y3_max = 0.1);

/// Grid for a field on the closed lower half space near the interface: y1, y2
/// on n x n nodes of spacing h from lo, y3 on the m cell centres -(k + 1/2) h3
/// below the interface, w on a symmetric velocity grid.
struct HalfGrid {
  std::array<double, 2> lo{0.0, 0.0};
  int n = 4;
  double h = 0.1;
  int m = 4;
  double h3 = 0.1;
  VGrid w;

  std::int64_t size() const { return std::int64_t(n) * n * 2 * m * w.size(); }
};

/// Mirror-extended field: y3 levels k = 0..2m-1 at (k - m + 1/2) h3; the
/// upper m levels hold f(R y', R w') of the lower ones.
struct ExtendedField {
  HalfGrid grid;
  /// Index ((i1 * n + i2) * 2m + k) * nw + wi.
  Eigen::VectorXd values;
  /// Parity used for the upper block: diag(1, 1, -1) on y and on w.
  Vec3d parity = Vec3d(1.0, 1.0, -1.0);

  std::int64_t index(int i1, int i2, int k, std::int64_t wi) const {
    return ((std::int64_t(i1) * grid.n + i2) * 2 * grid.m + k) * grid.w.size() + wi;
  }
  double y3(int k) const { return (k - grid.m + 0.5) * grid.h3; }
  /// Interface value: mean of the node pair at -+h3/2, so both sides see the same trace.
  double interface_value(int i1, int i2, std::int64_t wi) const;
};

/// Samples tilde_f(y, w) on the lower block and fills the upper block by the
/// parity rule. Throws SpecularViolation if |f(y, w) - f(y, R w)| > tol on the
/// interface nodes (y3 = 0).
ExtendedField mirror_extend(const HalfGrid& grid,
                            const std::function<double(const Vec3d&, const Vec3d&)>& tilde_f,
                            double tol = 1e-8);

/// Sum of the two interface integrals of f phi (w'.n) dS dw' (outer normals
/// +e3 below, -e3 above) for a test function phi(y', w'). one_sided uses the
/// nearest node of each block instead of the shared interface value; that sum
/// is O(h3) only.
double extension_boundary_term(const ExtendedField& f,
                               const std::function<double(const Vec3d&, const Vec3d&)>& phi,
                               bool one_sided = false);

/// sigma(x, v) and a(x, v) in local patch coordinates.
using MatrixField = std::function<Mat3d(const Vec3d&, const Vec3d&)>;
using VectorField = std::function<Vec3d(const Vec3d&, const Vec3d&)>;

struct TransformedCoefficients {
  Mat3d AA = Mat3d::Identity();
  Vec3d BB = Vec3d::Zero();
};

/// Second- and first-order coefficients of the extended equation at (y', w').
/// upper = false: A sigma A^T and A B w' + A a; upper = true: the reflected
/// forms evaluated through y = R y', w = R w'.
TransformedCoefficients transformed_coefficients(const BoundaryPatch& patch, const Vec3d& yp,
                                                 const Vec3d& wp, const MatrixField& sigma,
                                                 const VectorField& a, bool upper);

struct ContinuityReport {
  /// Claims at y3 = 0: A continuity, lambda = w^T C w parity, Lambda = C^{-1} parity.
  double a_residual = 0.0;
  double lambda_residual = 0.0;
  double Lambda_residual = 0.0;
  /// max |c13|, |c23| at y3 = 0.
  double c13_c23 = 0.0;
  /// Max one-sided jumps of the assembled coefficients at +-delta, and their
  /// linear extrapolation to delta = 0.
  std::vector<double> deltas, aa_jump, bb_jump;
  double aa_jump_extrapolated = 0.0;
  double bb_jump_extrapolated = 0.0;
  /// |det(A_inv) - closed form| and |A - adj / det|.
  double det_residual = 0.0;
  double adjugate_residual = 0.0;
};

ContinuityReport interface_continuity_certificate(const BoundaryPatch& patch,
                                                  const MatrixField& sigma, const VectorField& a,
                                                  int samples, std::uint64_t seed,
                                                  double delta0 = 1e-2);

struct TransportInvarianceReport {
  std::vector<double> steps, residual;
  /// Same with the plus sign on the (A B w) term.
  std::vector<double> residual_plus;
  double order = 0.0;
};

/// v.grad_x f against w.grad_y tf - (A B w).grad_w tf by centred differences
/// of step h, h/2, h/4 for a smooth test function f(x, v) in local coordinates.
TransportInvarianceReport transport_invariance(
    const BoundaryPatch& patch, const std::function<double(const Vec3d&, const Vec3d&)>& f,
    int samples, std::uint64_t seed, double h0 = 0.02);

/// Built-in test patches: flat, tilted plane alpha*y1, (y1^2 + y2^2)/4, (y1^2 - y2^2)/3.
BoundaryPatch flat_patch();
BoundaryPatch tilted_patch(double alpha);
BoundaryPatch paraboloid_patch();
BoundaryPatch saddle_patch();

}  // namespace llab
