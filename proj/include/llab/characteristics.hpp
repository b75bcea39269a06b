#pragma once

#include "llab/common.hpp"
#include "llab/domain.hpp"
#include "llab/regularization.hpp"

#include <vector>

namespace llab {

/// Velocity forcing B(s, x, v) of the characteristic system, V' = -B, with its
/// velocity divergence. An empty `field` means B = 0; an empty `div` is filled
/// by centered differences.
struct VelocityForcing {
  std::function<Vec3d(double, const Vec3d&, const Vec3d&)> field;
  std::function<double(double, const Vec3d&, const Vec3d&)> div;

  bool zero() const { return !field; }
  Vec3d operator()(double s, const Vec3d& x, const Vec3d& v) const {
    return field ? field(s, x, v) : Vec3d::Zero();
  }
  double divergence(double s, const Vec3d& x, const Vec3d& v) const;
};

struct CharOptions {
  /// RK4 step away from the cutoff zone.
  double dt_interior = 1e-2;
  /// Cap on the step inside the cutoff zone; min(eps^4, this) is used.
  double dt_boundary = 1e-3;
  double event_tol = 1e-10;
};

struct TrajectorySample {
  double s = 0.0;
  Vec3d X = Vec3d::Zero();
  Vec3d V = Vec3d::Zero();
  /// int_t^s tr M.
  double log_j = 0.0;
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double t0 = 0.0;
  double t1 = 0.0;
  bool hit0 = false;
  bool hit1 = false;
  double max_abs_trace = 0.0;
};

/// tr M = div_x W_eps - div_v B at (s, x, v).
double trace_m(const CutoffFamily& fam, const DomainSpec& geom, const VelocityForcing& B, double s,
               const Vec3d& x, const Vec3d& v);

/// (v - beta_eps(v)) . grad eta_eps(x), the defect term of the cutoff drift.
double cutoff_drift_defect(const CutoffFamily& fam, const DomainSpec& geom, const Vec3d& x,
                           const Vec3d& v);

/// Backward characteristic from (t, x, v) down to s = 0 or the first boundary hit.
/// Samples run from s = t downward.
Trajectory integrate_backward(const CutoffFamily& fam, const DomainSpec& geom,
                              const VelocityForcing& B, double t, const Vec3d& x, const Vec3d& v,
                              const CharOptions& opt = {});

/// Forward stopping time: first boundary hit after t, or T without a hit.
std::pair<double, bool> forward_stopping_time(const CutoffFamily& fam, const DomainSpec& geom,
                                              const VelocityForcing& B, double t, const Vec3d& x,
                                              const Vec3d& v, double T,
                                              const CharOptions& opt = {});

/// Forward trajectory up to the stopping time (samples ascending in s).
Trajectory integrate_forward(const CutoffFamily& fam, const DomainSpec& geom,
                             const VelocityForcing& B, double t, const Vec3d& x, const Vec3d& v,
                             double T, const CharOptions& opt = {});

/// J(s; t) = exp(int_t^s tr M) at every sample.
std::vector<double> jacobian(const Trajectory& traj);

}  // namespace llab
