#pragma once

#include "llab/diffusion.hpp"
#include "llab/grid.hpp"
#include "llab/landau.hpp"
#include "llab/regularization.hpp"

#include <functional>
#include <vector>

namespace llab {

struct SolverSchedule {
  std::vector<double> epsilon_list{0.3, 0.2, 0.15, 0.1};
  std::vector<double> a_list{0.3, 0.1, 0.03};
  int n_max = 12;
  double T = 0.5;
  double fixed_point_tol = 1e-9;
  int picard_max = 200;
  int duhamel_panels = 8;
  /// Window length T1 = window_fraction * eps^2, so 4 T1 / eps^2 = 4 window_fraction.
  double window_fraction = 0.1;
  /// Boundary mismatch below which the reflection sweep counts as converged.
  double mismatch_tol = 1e-12;
  /// Compatibility radius for adjoint data; 0 means 4 eps^4.
  double compat_delta = 0.0;

  void validate() const;
};

/// Number of windows and window length covering [0, T].
struct WindowPlan {
  int steps = 0;
  double dt = 0.0;
};
WindowPlan plan_windows(const SolverSchedule& sched, double eps, double T);

/// How incoming wall values are produced.
/// absorbing: zero (first reflection iterate); lagged: (1-a) R[trace of the
/// previous iterate]; self: (1-a) R[own outgoing trace], the n -> infinity limit.
enum class InflowMode { absorbing, lagged, self };

/// Output of the explicit half and the transport of one window.
struct Predicted {
  Eigen::VectorXd base;
  /// Outgoing wall trace per (v node, lateral column); zero for v3 = 0.
  Eigen::VectorXd trace;
};

struct PicardStats {
  int iterations = 0;
  double residual = 0.0;
};

struct StepRow {
  double t = 0.0;
  double linf = 0.0;
  double l1 = 0.0;
  double l2 = 0.0;
  double mass = 0.0;
  double energy = 0.0;
  double trace_sup = 0.0;
  double positivity_min = 0.0;
  int picard = 0;
};

struct ForwardResult {
  /// Fields of the last iterate at the recorded times (t = 0 first).
  std::vector<KineticField> series;
  std::vector<StepRow> rows;
  /// Flux-weighted boundary mismatch int |gamma+(f^n - f^{n-1})| for n = 1..n.
  std::vector<double> mismatch;
  /// First n with mismatch below tolerance (0 if never).
  int converged_n = 0;
  /// Max over all iterates and steps of ||F||_inf / ||f0||_inf and of the L1 ratio.
  double linf_ratio = 0.0;
  double l1_ratio = 0.0;
  double trace_sup = 0.0;
  double positivity_min = 0.0;
  int picard_max = 0;
};

struct AdjointResult {
  /// psi at the recorded times, from t = T down to t = 0.
  std::vector<KineticField> series;
  double min_value = 0.0;
  double max_abs = 0.0;
  double integral_T = 0.0;
  double integral_0 = 0.0;
  /// int psi(t) at every window boundary, t descending.
  std::vector<double> integrals;
};

/// Regularized approximate problem on a slab phase grid: window-by-window
/// splitting F(t_b) = T[F] with T[F] = S(I + dt/2 Q)F(t_a) + dt/2 Q F, S the
/// transport along the regularized drift with the modified reflection data.
class ApproxSolver {
 public:
  ApproxSolver(const PhaseGrid& grid, const CutoffFamily& fam, const VelocityDiffusion& Q,
               double a, double dt, const SolverSchedule& sched,
               const CollisionCoefficients* drift = nullptr);

  const PhaseGrid& grid() const { return grid_; }
  double dt() const { return dt_; }
  double a() const { return a_; }
  const CutoffFamily& family() const { return fam_; }
  /// 4 T1 / eps^2 for T1 = dt.
  double window_ratio() const { return 4.0 * dt_ / (fam_.epsilon * fam_.epsilon); }
  /// Lipschitz bound of the mild map actually used: dt/2 * ||Q||_inf.
  double lipschitz_bound() const { return 0.5 * dt_ * Q_.norm_inf(); }
  std::int64_t columns() const { return std::int64_t(grid_.x.n) * grid_.x.n; }

  /// Explicit half, velocity drift and transport. dir = -1 runs the adjoint.
  Predicted predict(const Eigen::VectorXd& F, InflowMode mode, const Eigen::VectorXd* prev_trace,
                    double dir = 1.0) const;
  /// Transport alone, of an already prepared H.
  Predicted transport(const Eigen::VectorXd& H, InflowMode mode, const Eigen::VectorXd* prev_trace,
                      double dir = 1.0) const;
  /// One application of the mild map: base + dt/2 Q guess.
  Eigen::VectorXd mild_map(const Predicted& p, const Eigen::VectorXd& guess) const;
  /// Picard iteration of the mild map to the fixed-point tolerance.
  Eigen::VectorXd correct(const Predicted& p, PicardStats* stats = nullptr) const;

  /// Forward solve over `steps` windows with n reflection iterates (n = 0: self mode).
  ForwardResult forward(const Eigen::VectorXd& f0, int n, int steps, int record_every = 1) const;
  /// Self-mode propagation over `steps` windows.
  Eigen::VectorXd propagate(const Eigen::VectorXd& f, int steps) const;
  /// Backward adjoint solve from psi_T over `steps` windows (self dual reflection).
  AdjointResult adjoint(const Eigen::VectorXd& psi_T, int steps, double compat_delta,
                        int record_every = 1) const;

  /// Flux weight |v3| * dt * h^2 * h_v^3 of a trace entry.
  double trace_weight(std::int64_t vi) const;

 private:
  void velocity_drift(Eigen::VectorXd& F, double dir) const;

  const PhaseGrid& grid_;
  CutoffFamily fam_;
  const VelocityDiffusion& Q_;
  double a_;
  double dt_;
  SolverSchedule sched_;
  const CollisionCoefficients* drift_;
  // Per velocity slice: free when W_eps = v at every x node, lateral when v3 = 0.
  enum : char { kGeneral, kFree, kLateral };
  std::vector<char> slice_kind_;
};

/// One application of T for given start field, previous-iterate trace and guess.
Eigen::VectorXd mild_step(const ApproxSolver& s, const Eigen::VectorXd& F_start,
                          const Eigen::VectorXd& prev_trace, const Eigen::VectorXd& guess);

/// Reflection sweep: forward solve with n_max iterates, mismatch per n.
ForwardResult reflection_sweep(const ApproxSolver& s, const Eigen::VectorXd& f0, int n_max,
                               int steps, int record_every = 1);

/// Duhamel layer f(t) = U(t) f0 + int_0^t U(t - s) Kbar_g f(s) ds on `panels`
/// equal panels, trapezoid in s, fixed-point per panel.
struct DuhamelResult {
  std::vector<KineticField> series;
  int max_iterations = 0;
};
DuhamelResult duhamel_layer(const ApproxSolver& s, const Eigen::VectorXd& f0, int panels,
                            int steps_per_panel, const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& kbar,
                            double tol = 1e-9, int max_iter = 200);

/// |<F(T), psi_T> - <f0, psi(0)>| / (|f0|_2 |psi_T|_2).
double duality_certificate(const PhaseGrid& grid, const Eigen::VectorXd& f0,
                           const Eigen::VectorXd& F_T, const Eigen::VectorXd& psi_0,
                           const Eigen::VectorXd& psi_T);

/// Checks psi_T = 0 where x_perp^2 + |beta_eps(v)|^2 < delta; throws CompatibilityViolation.
void check_compatibility(const PhaseGrid& grid, const CutoffFamily& fam,
                         const Eigen::VectorXd& psi_T, double delta);

/// Min over nodes of mu + sqrt(mu) f.
double positivity_min(const PhaseGrid& grid, const Eigen::VectorXd& f);
/// <f, sqrt(mu)> and <f, |v|^2 sqrt(mu)> over the phase grid.
std::pair<double, double> conservation_moments(const PhaseGrid& grid, const Eigen::VectorXd& f);

}  // namespace llab
