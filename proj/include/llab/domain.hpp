#pragma once

#include "llab/common.hpp"

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace llab {

/// Value and partials of a graph function rho(y1, y2) up to third order.
template <class Scalar>
struct RhoJet {
  Scalar r{0};
  Scalar r1{0}, r2{0};
  Scalar r11{0}, r12{0}, r22{0};
  Scalar r111{0}, r112{0}, r122{0}, r222{0};
};

/// Graph patch: in local coordinates the domain is {x3 < rho(x1, x2)}.
/// Ambient point = origin + frame * local point.
struct BoundaryPatch {
  std::function<RhoJet<double>(double, double)> rho;
  std::array<double, 2> box_lo{-1e300, -1e300};
  std::array<double, 2> box_hi{1e300, 1e300};
  Mat3d frame = Mat3d::Identity();
  Vec3d origin = Vec3d::Zero();
  /// Extra validity test inside the box (e.g. square-root caps).
  std::function<bool(double, double)> valid;

  bool contains(double y1, double y2) const {
    bool in = y1 >= box_lo[0] && y1 <= box_hi[0] && y2 >= box_lo[1] && y2 <= box_hi[1];
    return in && (!valid || valid(y1, y2));
  }
  Vec3d to_local(const Vec3d& x) const { return frame.transpose() * (x - origin); }
  Vec3d to_ambient(const Vec3d& y) const { return origin + frame * y; }
};

/// Polynomial rho: coefficients of 1, y1, y2, y1^2, y1 y2, y2^2, y1^3, y1^2 y2, y1 y2^2, y2^3.
using PolyCoeffs = std::array<double, 10>;
RhoJet<double> poly_jet(const PolyCoeffs& c, double y1, double y2);

struct DomainSpec {
  std::string kind;
  std::function<double(const Vec3d&)> zeta;
  std::function<Vec3d(const Vec3d&)> grad_zeta;
  std::vector<BoundaryPatch> patches;
  double delta0 = 0.25;
  std::optional<std::pair<Vec3d, Vec3d>> symmetry_axis;
  /// Period per axis; zero means not periodic.
  std::array<double, 3> period{0.0, 0.0, 0.0};
  /// Exact closest boundary point when the geometry admits one.
  std::function<Vec3d(const Vec3d&)> closest;
};

DomainSpec make_half_space(double delta0 = 0.25);
/// Slab 0 < x3 < L, periodic in x1, x2 with period `lateral`.
DomainSpec make_slab(double L, double lateral, double delta0 = 0.25);
DomainSpec make_ball(double R, const Vec3d& center = Vec3d::Zero(), double delta0 = 0.25);
DomainSpec make_ellipsoid(double a, double b, double c, double delta0 = 0.2);
/// Global graph domain {x3 < rho(x1, x2)} plus optional overlapping chart boxes.
DomainSpec make_graph_domain(const PolyCoeffs& coeffs, double delta0,
                             const std::vector<std::array<double, 4>>& boxes);

enum class BoundaryKind { outgoing, incoming, grazing, interior };

struct BoundaryClassification {
  BoundaryKind kind = BoundaryKind::interior;
  Vec3d n = Vec3d::Zero();
  double v_dot_n = 0.0;
};

struct NormalCoordinates {
  double x_perp = 0.0;
  double v_perp = 0.0;
  bool in_bd = false;
  Vec3d x_hat = Vec3d::Zero();
  Vec3d n = Vec3d::Zero();
};

inline constexpr double kGrazingTol = 1e-12;
inline constexpr double kBoundaryTol = 1e-8;

Vec3d outward_normal(const DomainSpec& spec, const Vec3d& x);

template <class DV, class DN>
auto reflect(const Eigen::MatrixBase<DV>& v, const Eigen::MatrixBase<DN>& n) {
  using S = typename DV::Scalar;
  Vec3<S> vv = v;
  return Vec3<S>(vv - S(2) * n.dot(vv) * n);
}

/// Closest boundary point: damped Newton projection, then chart search.
Vec3d closest_boundary_point(const DomainSpec& spec, const Vec3d& x);

NormalCoordinates normal_coordinates(const DomainSpec& spec, const Vec3d& x, const Vec3d& v);

BoundaryClassification classify(const DomainSpec& spec, const Vec3d& x, const Vec3d& v);

/// Max of |((x - x0) x omega) . n| over `samples` boundary points.
double rotational_symmetry_residual(const DomainSpec& spec, const Vec3d& x0, const Vec3d& omega,
                                    const std::vector<Vec3d>& samples);

/// Boundary points drawn from the patches (deterministic for a given seed).
std::vector<Vec3d> sample_boundary(const DomainSpec& spec, int count, std::uint64_t seed);

/// Samples points within delta0 of the boundary and checks chart coverage.
/// Returns the number of misses.
int validate_delta0(const DomainSpec& spec, int count, std::uint64_t seed);

/// Max |zeta| over sampled graph points of every patch.
double patch_graph_residual(const DomainSpec& spec, int per_patch, std::uint64_t seed);

}  // namespace llab
