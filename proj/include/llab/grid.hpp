#pragma once

#include "llab/common.hpp"
#include "llab/domain.hpp"

#include <vector>

namespace llab {

/// Symmetric vertex grid on [-vmax, vmax]^3, index (i1 * n + i2) * n + i3.
struct VGrid {
  int n = 16;
  double vmax = 8.0;

  VGrid() = default;
  VGrid(int n_, double vmax_);
  double h() const { return 2.0 * vmax / (n - 1); }
  double node(int i) const { return -vmax + i * h(); }
  std::int64_t size() const { return std::int64_t(n) * n * n; }
  std::int64_t index(int i1, int i2, int i3) const { return (std::int64_t(i1) * n + i2) * n + i3; }
  Vec3d v(std::int64_t idx) const;
  std::array<int, 3> multi(std::int64_t idx) const;
  double cell() const { return h() * h() * h(); }
  /// Zero-based index of the node mirrored in the third component.
  std::int64_t mirror3(std::int64_t idx) const;
};

/// Slab 0 < x3 < L, periodic in x1, x2 with period lx. Nodes in x1, x2 are
/// i * lx / n; x3 nodes are cell centres (j + 1/2) L / n3, so no node sits on a
/// wall. Index (j1 * n + j2) * n3 + j3.
struct SlabGrid {
  double L = 1.0;
  double lx = 1.0;
  int n = 8;
  int n3 = 9;

  SlabGrid() = default;
  SlabGrid(double L_, double lx_, int n_, int n3_);
  double h() const { return lx / n; }
  double h3() const { return L / n3; }
  std::int64_t size() const { return std::int64_t(n) * n * n3; }
  std::int64_t index(int j1, int j2, int j3) const { return (std::int64_t(j1) * n + j2) * n3 + j3; }
  Vec3d x(std::int64_t idx) const;
  std::array<int, 3> multi(std::int64_t idx) const;
  /// Cell volume (uniform).
  double weight(std::int64_t) const { return h() * h() * h3(); }
};

/// Tensor phase grid; field index = v_index * x.size() + x_index.
struct PhaseGrid {
  SlabGrid x;
  VGrid v;
  DomainSpec domain;

  PhaseGrid(const SlabGrid& xg, const VGrid& vg, double delta0 = 0.25);
  std::int64_t size() const { return x.size() * v.size(); }
  std::int64_t index(std::int64_t xi, std::int64_t vi) const { return vi * x.size() + xi; }
  /// Quadrature weight of node (xi, vi).
  double weight(std::int64_t xi) const { return x.weight(xi) * v.cell(); }
  /// Mask: 0 interior, 1 within delta0 of a wall.
  int mask(std::int64_t xi) const;
};

struct KineticField {
  Eigen::VectorXd values;
  double time = 0.0;
  double theta = 0.0;

  KineticField() = default;
  explicit KineticField(std::int64_t n, double t = 0.0) : values(Eigen::VectorXd::Zero(n)), time(t) {}
  double sup() const { return values.size() ? values.cwiseAbs().maxCoeff() : 0.0; }
};

/// Weighted sum over the phase grid (pairwise order).
double integrate(const PhaseGrid& g, const Eigen::VectorXd& f);
double l1_norm(const PhaseGrid& g, const Eigen::VectorXd& f);
double l2_norm(const PhaseGrid& g, const Eigen::VectorXd& f);

}  // namespace llab
