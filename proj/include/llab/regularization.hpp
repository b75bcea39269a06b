#pragma once

#include "llab/common.hpp"
#include "llab/domain.hpp"
#include "llab/quadrature.hpp"

#include <limits>
#include <vector>

namespace llab {

/// Smooth step on [0, 1] built from exp(-1/t) glue, with derivative.
double smooth_step(double t);
double smooth_step_deriv(double t);

/// Cutoff family for a fixed regularization parameter.
struct CutoffFamily {
  double epsilon = 0.2;

  explicit CutoffFamily(double eps = 0.2);
  /// 0 on |s| <= eps^4, 1 on |s| >= 2 eps^4, even.
  double lambda(double s) const;
  double lambda_deriv(double s) const;
  double eps4() const { return epsilon * epsilon * epsilon * epsilon; }
};

double lambda_eps(const CutoffFamily& fam, double s);
Vec3d beta_eps(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x, const Vec3d& v);
double eta_eps(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x);
/// Gradient of eta_eps in x (zero in the interior region).
Vec3d eta_eps_grad(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x);
/// W = beta + (v - beta) eta.
Vec3d regularized_drift(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                        const Vec3d& v);
/// div_x W. Analytic on flat walls, centered differences otherwise.
double regularized_drift_div(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                             const Vec3d& v);

/// Product bump xi(u) = xi1(u1) xi1(u2) xi1(u3) with discrete moments (1, 0, 1)
/// under its own Gauss-Legendre table.
class BumpKernel {
 public:
  explicit BumpKernel(int order = 16);

  double radius() const { return r_; }
  double amplitude() const { return c_; }
  int order() const { return static_cast<int>(nodes_.size()); }
  double xi1(double u) const;
  /// Nodes u_k and weights w_k * xi1(u_k) on the support.
  const std::vector<double>& nodes() const { return nodes_; }
  const std::vector<double>& weights() const { return weights_; }
  /// Discrete moments of xi1: {int xi1, int u xi1, int u^2 xi1}.
  std::array<double, 3> moments() const;

 private:
  double r_ = 1.0, c_ = 1.0;
  std::vector<double> nodes_, weights_;
};

/// Options for the functional forms of Q^eps.
struct QepsOptions {
  /// Standardizing factor: shifts are eps * S u.
  Mat3d S = Mat3d::Identity();
  /// Half-width of the velocity box. Values outside count as zero; with
  /// extrapolate = false leaving the box is an error instead.
  double vmax = std::numeric_limits<double>::infinity();
  bool extrapolate = true;
};

/// (2/eps^2) sum_k w_k [f(v + eps S u_k) - f(v)] over the tensor bump table.
template <class F>
double q_eps(const CutoffFamily& fam, const BumpKernel& ker, F&& f, const Vec3d& v,
             const QepsOptions& opt = {}, double sign = 1.0) {
  const auto& u = ker.nodes();
  const auto& w = ker.weights();
  const int n = ker.order();
  const double eps = fam.epsilon;
  const double f0 = f(v);
  std::vector<double> terms;
  terms.reserve(static_cast<std::size_t>(n) * n * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        Vec3d vs = v + sign * eps * (opt.S * Vec3d(u[i], u[j], u[k]));
        bool out = vs.cwiseAbs().maxCoeff() > opt.vmax;
        double fv;
        if (out && !opt.extrapolate)
          throw Error(Errc::OutOfRange, "shifted stencil leaves the velocity box");
        fv = out ? 0.0 : f(vs);
        terms.push_back(w[i] * w[j] * w[k] * (fv - f0));
      }
  return 2.0 / (eps * eps) * pairwise_sum(terms.data(), terms.size());
}

/// Adjoint form: shifts by -eps S u.
template <class F>
double q_eps_adjoint(const CutoffFamily& fam, const BumpKernel& ker, F&& f, const Vec3d& v,
                     const QepsOptions& opt = {}) {
  return q_eps(fam, ker, std::forward<F>(f), v, opt, -1.0);
}

}  // namespace llab
