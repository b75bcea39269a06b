#include "llab/characteristics.hpp"

#include <algorithm>

namespace llab {

double VelocityForcing::divergence(double s, const Vec3d& x, const Vec3d& v) const {
  if (!field) return 0.0;
  if (div) return div(s, x, v);
  const double h = 1e-5;
  double d = 0.0;
  for (int k = 0; k < 3; ++k) {
    Vec3d e = Vec3d::Zero();
    e[k] = h;
    d += (field(s, x, v + e)[k] - field(s, x, v - e)[k]) / (2 * h);
  }
  return d;
}

double trace_m(const CutoffFamily& fam, const DomainSpec& geom, const VelocityForcing& B, double s,
               const Vec3d& x, const Vec3d& v) {
  return regularized_drift_div(fam, geom, x, v) - B.divergence(s, x, v);
}

double cutoff_drift_defect(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                           const Vec3d& v) {
  Vec3d beta = beta_eps(fam, geom, x, v);
  return (v - beta).dot(eta_eps_grad(fam, geom, x));
}

namespace {

struct State {
  Vec3d X, V;
  double l;
};

// Right-hand side of the (X, V, log J) system in forward time.
State rhs(const CutoffFamily& fam, const DomainSpec& geom, const VelocityForcing& B, double s,
          const State& y) {
  return {regularized_drift(fam, geom, y.X, y.V), -B(s, y.X, y.V),
          trace_m(fam, geom, B, s, y.X, y.V)};
}

State axpy(const State& y, double h, const State& k) {
  return {y.X + h * k.X, y.V + h * k.V, y.l + h * k.l};
}

// One RK4 step of signed size h (h < 0 integrates backward).
State rk4(const CutoffFamily& fam, const DomainSpec& geom, const VelocityForcing& B, double s,
          const State& y, double h) {
  State k1 = rhs(fam, geom, B, s, y);
  State k2 = rhs(fam, geom, B, s + 0.5 * h, axpy(y, 0.5 * h, k1));
  State k3 = rhs(fam, geom, B, s + 0.5 * h, axpy(y, 0.5 * h, k2));
  State k4 = rhs(fam, geom, B, s + h, axpy(y, h, k3));
  return {y.X + h / 6 * (k1.X + 2 * k2.X + 2 * k3.X + k4.X),
          y.V + h / 6 * (k1.V + 2 * k2.V + 2 * k3.V + k4.V),
          y.l + h / 6 * (k1.l + 2 * k2.l + 2 * k3.l + k4.l)};
}

double step_size(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                 const CharOptions& opt) {
  auto nc = normal_coordinates(geom, x, Vec3d::Zero());
  // Cutoff zone reaches x_perp = 2^{1/4} eps; keep a margin.
  if (nc.x_perp < 1.5 * fam.epsilon) return std::min(fam.eps4(), opt.dt_boundary);
  return opt.dt_interior;
}

bool outside(const DomainSpec& geom, const Vec3d& x) { return geom.zeta(x) > 0.0; }

// Integrates from s0 toward s_end (either direction) until a boundary hit.
Trajectory integrate(const CutoffFamily& fam, const DomainSpec& geom, const VelocityForcing& B,
                     double s0, const Vec3d& x, const Vec3d& v, double s_end,
                     const CharOptions& opt, bool& hit, double& s_stop) {
  Trajectory tr;
  const double dir = s_end < s0 ? -1.0 : 1.0;
  State y{x, v, 0.0};
  double s = s0;
  tr.samples.push_back({s, x, v, 0.0});
  tr.max_abs_trace = std::abs(trace_m(fam, geom, B, s, x, v));
  hit = false;
  // On the boundary and moving out: stopped immediately.
  if (std::abs(geom.zeta(x)) <= kBoundaryTol) {
    Vec3d w = dir * regularized_drift(fam, geom, x, v);
    if (w.dot(geom.grad_zeta(x)) > 0.0) {
      hit = true;
      s_stop = s0;
      return tr;
    }
  }
  while (dir * (s_end - s) > 0.0) {
    double h = std::min(step_size(fam, geom, y.X, opt), dir * (s_end - s));
    State y1 = rk4(fam, geom, B, s, y, dir * h);
    State ym = rk4(fam, geom, B, s, y, dir * 0.5 * h);
    bool out_end = outside(geom, y1.X);
    bool out_mid = outside(geom, ym.X);
    if (out_end || out_mid) {
      // First crossing: shrink the bracket onto the earliest exit.
      double lo = 0.0, hi = out_mid ? 0.5 * h : h;
      int it = 0;
      while (hi - lo > opt.event_tol) {
        double mid = 0.5 * (lo + hi);
        if (outside(geom, rk4(fam, geom, B, s, y, dir * mid).X))
          hi = mid;
        else
          lo = mid;
        if (++it > 200) throw Error(Errc::StepCollapse, "bisection did not bracket the boundary hit");
      }
      State yh = rk4(fam, geom, B, s, y, dir * hi);
      if (std::abs(geom.zeta(yh.X)) > 1e-6)
        throw Error(Errc::StepCollapse, "boundary hit not resolved");
      // Snap onto the level set along the normal.
      Vec3d g = geom.grad_zeta(yh.X);
      yh.X -= geom.zeta(yh.X) * g / g.squaredNorm();
      s += dir * hi;
      tr.samples.push_back({s, yh.X, yh.V, yh.l});
      tr.max_abs_trace = std::max(tr.max_abs_trace, std::abs(trace_m(fam, geom, B, s, yh.X, yh.V)));
      hit = true;
      s_stop = s;
      return tr;
    }
    y = y1;
    s += dir * h;
    tr.samples.push_back({s, y.X, y.V, y.l});
    tr.max_abs_trace = std::max(tr.max_abs_trace, std::abs(trace_m(fam, geom, B, s, y.X, y.V)));
  }
  s_stop = s_end;
  return tr;
}

}  // namespace

Trajectory integrate_backward(const CutoffFamily& fam, const DomainSpec& geom,
                              const VelocityForcing& B, double t, const Vec3d& x, const Vec3d& v,
                              const CharOptions& opt) {
  if (geom.zeta(x) > kBoundaryTol) throw Error(Errc::OutsideDomain, "anchor outside the domain");
  bool hit = false;
  double stop = 0.0;
  Trajectory tr = integrate(fam, geom, B, t, x, v, 0.0, opt, hit, stop);
  tr.hit0 = hit;
  tr.t0 = hit ? stop : 0.0;
  tr.t1 = t;
  return tr;
}

Trajectory integrate_forward(const CutoffFamily& fam, const DomainSpec& geom,
                             const VelocityForcing& B, double t, const Vec3d& x, const Vec3d& v,
                             double T, const CharOptions& opt) {
  if (geom.zeta(x) > kBoundaryTol) throw Error(Errc::OutsideDomain, "anchor outside the domain");
  bool hit = false;
  double stop = T;
  Trajectory tr = integrate(fam, geom, B, t, x, v, T, opt, hit, stop);
  tr.hit1 = hit;
  tr.t1 = hit ? stop : T;
  tr.t0 = t;
  return tr;
}

std::pair<double, bool> forward_stopping_time(const CutoffFamily& fam, const DomainSpec& geom,
                                              const VelocityForcing& B, double t, const Vec3d& x,
                                              const Vec3d& v, double T, const CharOptions& opt) {
  Trajectory tr = integrate_forward(fam, geom, B, t, x, v, T, opt);
  return {tr.t1, tr.hit1};
}

std::vector<double> jacobian(const Trajectory& traj) {
  std::vector<double> j(traj.samples.size());
  for (std::size_t i = 0; i < j.size(); ++i) j[i] = std::exp(traj.samples[i].log_j);
  return j;
}

}  // namespace llab
