#include "llab/regularization.hpp"

#include <numeric>

namespace llab {

namespace {

double glue(double t) { return t > 0.0 ? std::exp(-1.0 / t) : 0.0; }
double glue_deriv(double t) { return t > 0.0 ? std::exp(-1.0 / t) / (t * t) : 0.0; }

bool flat_kind(const DomainSpec& g) { return g.kind == "slab" || g.kind == "half_space"; }

}  // namespace

double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  double a = glue(t), b = glue(1.0 - t);
  return a / (a + b);
}

double smooth_step_deriv(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  double a = glue(t), b = glue(1.0 - t);
  double da = glue_deriv(t), db = -glue_deriv(1.0 - t);
  return (da * b - a * db) / ((a + b) * (a + b));
}

CutoffFamily::CutoffFamily(double eps) : epsilon(eps) {
  if (!(eps > 0.0 && eps < 0.5)) throw Error(Errc::OutOfRange, "epsilon must lie in (0, 1/2)");
}

double CutoffFamily::lambda(double s) const {
  double e4 = eps4();
  return smooth_step(std::abs(s) / e4 - 1.0);
}

double CutoffFamily::lambda_deriv(double s) const {
  double e4 = eps4();
  double sg = s < 0 ? -1.0 : 1.0;
  return sg * smooth_step_deriv(std::abs(s) / e4 - 1.0) / e4;
}

double lambda_eps(const CutoffFamily& fam, double s) { return fam.lambda(s); }

Vec3d beta_eps(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x, const Vec3d& v) {
  auto nc = normal_coordinates(geom, x, v);
  if (!nc.in_bd) return v;
  return fam.lambda(nc.v_perp) * v;
}

double eta_eps(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x) {
  auto nc = normal_coordinates(geom, x, Vec3d::Zero());
  if (!nc.in_bd) return 1.0;
  double xp2 = nc.x_perp * nc.x_perp;
  return fam.lambda(xp2 * xp2);
}

Vec3d eta_eps_grad(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x) {
  auto nc = normal_coordinates(geom, x, Vec3d::Zero());
  if (!nc.in_bd) return Vec3d::Zero();
  double xp = nc.x_perp;
  double d = fam.lambda_deriv(xp * xp * xp * xp) * 4.0 * xp * xp * xp;
  // x_perp grows away from the wall, i.e. along -n.
  return -d * nc.n;
}

Vec3d regularized_drift(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                        const Vec3d& v) {
  auto nc = normal_coordinates(geom, x, v);
  if (!nc.in_bd) return v;
  Vec3d beta = fam.lambda(nc.v_perp) * v;
  double xp2 = nc.x_perp * nc.x_perp;
  double eta = fam.lambda(xp2 * xp2);
  return beta + (v - beta) * eta;
}

double regularized_drift_div(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                             const Vec3d& v) {
  auto nc = normal_coordinates(geom, x, v);
  if (!nc.in_bd) return 0.0;
  if (flat_kind(geom)) {
    // beta is x-independent on each flat wall.
    Vec3d beta = fam.lambda(nc.v_perp) * v;
    return (v - beta).dot(eta_eps_grad(fam, geom, x));
  }
  double h = 1e-6;
  double div = 0.0;
  for (int k = 0; k < 3; ++k) {
    Vec3d e = Vec3d::Zero();
    e[k] = h;
    div += (regularized_drift(fam, geom, x + e, v)[k] - regularized_drift(fam, geom, x - e, v)[k]) /
           (2 * h);
  }
  return div;
}

BumpKernel::BumpKernel(int order) {
  Rule1d gl = gauss_legendre(order);
  // Profile exp(-1/(1-t^2)) on (-1, 1); amplitude and width follow from the
  // discrete zeroth and second moments of the same table.
  std::vector<double> e(order);
  double m0 = 0.0, m2 = 0.0;
  for (int k = 0; k < order; ++k) {
    double t = gl.x[k];
    e[k] = std::exp(-1.0 / (1.0 - t * t));
    m0 += gl.w[k] * e[k];
    m2 += gl.w[k] * t * t * e[k];
  }
  r_ = std::sqrt(m0 / m2);
  c_ = 1.0 / (r_ * m0);
  nodes_.resize(order);
  weights_.resize(order);
  for (int k = 0; k < order; ++k) {
    nodes_[k] = r_ * gl.x[k];
    weights_[k] = r_ * gl.w[k] * c_ * e[k];
  }
}

double BumpKernel::xi1(double u) const {
  double t = u / r_;
  if (std::abs(t) >= 1.0) return 0.0;
  return c_ * std::exp(-1.0 / (1.0 - t * t));
}

std::array<double, 3> BumpKernel::moments() const {
  std::array<double, 3> m{0.0, 0.0, 0.0};
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    m[0] += weights_[k];
    m[1] += weights_[k] * nodes_[k];
    m[2] += weights_[k] * nodes_[k] * nodes_[k];
  }
  return m;
}

}  // namespace llab
