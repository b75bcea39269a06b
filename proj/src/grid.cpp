#include "llab/grid.hpp"

#include <vector>

namespace llab {

VGrid::VGrid(int n_, double vmax_) : n(n_), vmax(vmax_) {
  if (n < 2 || !(vmax > 0.0)) throw Error(Errc::ConfigError, "velocity grid needs n >= 2, vmax > 0");
}

Vec3d VGrid::v(std::int64_t idx) const {
  auto m = multi(idx);
  return Vec3d(node(m[0]), node(m[1]), node(m[2]));
}

std::array<int, 3> VGrid::multi(std::int64_t idx) const {
  int i3 = static_cast<int>(idx % n);
  idx /= n;
  int i2 = static_cast<int>(idx % n);
  int i1 = static_cast<int>(idx / n);
  return {i1, i2, i3};
}

std::int64_t VGrid::mirror3(std::int64_t idx) const {
  auto m = multi(idx);
  return index(m[0], m[1], n - 1 - m[2]);
}

SlabGrid::SlabGrid(double L_, double lx_, int n_, int n3_) : L(L_), lx(lx_), n(n_), n3(n3_) {
  if (n < 1 || n3 < 1 || !(L > 0.0) || !(lx > 0.0))
    throw Error(Errc::ConfigError, "slab grid needs n, n3 >= 1 and positive lengths");
}

Vec3d SlabGrid::x(std::int64_t idx) const {
  auto m = multi(idx);
  return Vec3d(m[0] * h(), m[1] * h(), (m[2] + 0.5) * h3());
}

std::array<int, 3> SlabGrid::multi(std::int64_t idx) const {
  int j3 = static_cast<int>(idx % n3);
  idx /= n3;
  int j2 = static_cast<int>(idx % n);
  int j1 = static_cast<int>(idx / n);
  return {j1, j2, j3};
}

PhaseGrid::PhaseGrid(const SlabGrid& xg, const VGrid& vg, double delta0)
    : x(xg), v(vg), domain(make_slab(xg.L, xg.lx, delta0)) {}

int PhaseGrid::mask(std::int64_t xi) const {
  double x3 = (static_cast<int>(xi % x.n3) + 0.5) * x.h3();
  return std::min(x3, x.L - x3) < domain.delta0 ? 1 : 0;
}

double integrate(const PhaseGrid& g, const Eigen::VectorXd& f) {
  std::int64_t nx = g.x.size(), nv = g.v.size();
  std::vector<double> per_v(nv);
  std::vector<double> tmp(nx);
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    for (std::int64_t xi = 0; xi < nx; ++xi) tmp[xi] = g.x.weight(xi) * f[vi * nx + xi];
    per_v[vi] = pairwise_sum(tmp.data(), tmp.size());
  }
  return g.v.cell() * pairwise_sum(per_v.data(), per_v.size());
}

double l1_norm(const PhaseGrid& g, const Eigen::VectorXd& f) {
  return integrate(g, f.cwiseAbs());
}

double l2_norm(const PhaseGrid& g, const Eigen::VectorXd& f) {
  return std::sqrt(integrate(g, f.cwiseAbs2()));
}

}  // namespace llab
