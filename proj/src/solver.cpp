#include "llab/solver.hpp"

#include "llab/characteristics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace llab {

void SolverSchedule::validate() const {
  if (epsilon_list.empty() || a_list.empty())
    throw Error(Errc::ConfigError, "schedule.epsilon_list and schedule.a_list must be non-empty");
  for (double e : epsilon_list)
    if (!(e > 0.0 && e < 0.5)) throw Error(Errc::ConfigError, "schedule.epsilon_list: values must lie in (0, 0.5)");
  for (double a : a_list)
    if (!(a > 0.0 && a < 1.0)) throw Error(Errc::ConfigError, "schedule.a_list: values must lie in (0, 1)");
  if (n_max < 1) throw Error(Errc::ConfigError, "schedule.n_max must be >= 1");
  if (!(T > 0.0)) throw Error(Errc::ConfigError, "schedule.T must be positive");
  if (!(fixed_point_tol > 0.0)) throw Error(Errc::ConfigError, "schedule.fixed_point_tol must be positive");
  if (!(window_fraction > 0.0 && window_fraction < 0.125))
    throw Error(Errc::ConfigError, "schedule.window_fraction must lie in (0, 1/8)");
  if (duhamel_panels < 1) throw Error(Errc::ConfigError, "schedule.duhamel_panels must be >= 1");
}

WindowPlan plan_windows(const SolverSchedule& sched, double eps, double T) {
  double t1 = sched.window_fraction * eps * eps;
  WindowPlan p;
  p.steps = std::max(1, static_cast<int>(std::ceil(T / t1 - 1e-12)));
  p.dt = T / p.steps;
  return p;
}

ApproxSolver::ApproxSolver(const PhaseGrid& grid, const CutoffFamily& fam,
                           const VelocityDiffusion& Q, double a, double dt,
                           const SolverSchedule& sched, const CollisionCoefficients* drift)
    : grid_(grid), fam_(fam), Q_(Q), a_(a), dt_(dt), sched_(sched), drift_(drift) {
  if (!(a >= 0.0 && a < 1.0)) throw Error(Errc::OutOfRange, "reflection damping a must lie in [0, 1)");
  if (!(4.0 * dt / (fam.epsilon * fam.epsilon) < 0.5))
    throw Error(Errc::ContractionGuard, "window violates 4 T1 / eps^2 < 1/2");
  if (drift_ && drift_->background().zero() && drift_->theta() == 0.0) drift_ = nullptr;
  const VGrid& vg = grid.v;
  slice_kind_.resize(vg.size());
  for (std::int64_t vi = 0; vi < vg.size(); ++vi) {
    double v3 = vg.v(vi)[2];
    slice_kind_[vi] = fam.lambda(v3) == 1.0 ? kFree : v3 == 0.0 ? kLateral : kGeneral;
    if (std::abs(v3) * dt >= grid.x.L)
      throw Error(Errc::ConfigError, "window too long: a velocity node crosses the slab in one window");
  }
}

double ApproxSolver::trace_weight(std::int64_t vi) const {
  const auto& xg = grid_.x;
  return std::abs(grid_.v.v(vi)[2]) * dt_ * xg.h() * xg.h() * grid_.v.cell();
}

namespace {

void lateral_shift(double* f, int n, int n3, double s, bool first_axis, std::vector<double>& buf) {
  if (s == 0.0) return;
  double fl = std::floor(s);
  int m = static_cast<int>(fl);
  double th = s - fl;
  buf.resize(std::size_t(n) * n * n3);
  std::copy(f, f + buf.size(), buf.begin());
  auto wrap = [n](int j) { return ((j % n) + n) % n; };
  for (int j1 = 0; j1 < n; ++j1)
    for (int j2 = 0; j2 < n; ++j2) {
      int a1 = j1, a2 = j2, b1 = j1, b2 = j2;
      if (first_axis) {
        a1 = wrap(j1 - m);
        b1 = wrap(j1 - m - 1);
      } else {
        a2 = wrap(j2 - m);
        b2 = wrap(j2 - m - 1);
      }
      double* dst = f + (std::size_t(j1) * n + j2) * n3;
      const double* pa = buf.data() + (std::size_t(a1) * n + a2) * n3;
      const double* pb = buf.data() + (std::size_t(b1) * n + b2) * n3;
      for (int k = 0; k < n3; ++k) dst[k] = (1.0 - th) * pa[k] + th * pb[k];
    }
}

// Same, with a separate shift per x3 row.
void lateral_shift_rows(double* f, int n, int n3, const std::vector<double>& s, bool first_axis,
                        std::vector<double>& buf) {
  buf.resize(std::size_t(n) * n * n3);
  std::copy(f, f + buf.size(), buf.begin());
  auto wrap = [n](int j) { return ((j % n) + n) % n; };
  for (int k = 0; k < n3; ++k) {
    if (s[k] == 0.0) continue;
    double fl = std::floor(s[k]);
    int m = static_cast<int>(fl);
    double th = s[k] - fl;
    for (int j1 = 0; j1 < n; ++j1)
      for (int j2 = 0; j2 < n; ++j2) {
        int a1 = j1, a2 = j2, b1 = j1, b2 = j2;
        if (first_axis) {
          a1 = wrap(j1 - m);
          b1 = wrap(j1 - m - 1);
        } else {
          a2 = wrap(j2 - m);
          b2 = wrap(j2 - m - 1);
        }
        f[(std::size_t(j1) * n + j2) * n3 + k] = (1.0 - th) * buf[(std::size_t(a1) * n + a2) * n3 + k] +
                                                 th * buf[(std::size_t(b1) * n + b2) * n3 + k];
      }
  }
}

// x3 shift by s cells with zero ghosts; returns the outgoing mass in cell units.
double column_shift(const double* in, double* out, int n3, double s) {
  if (s == 0.0) {
    std::copy(in, in + n3, out);
    return 0.0;
  }
  double a = std::abs(s);
  double fl = std::floor(a);
  int m = static_cast<int>(fl);
  double th = a - fl;
  auto E = [&](int k) { return (k >= 0 && k < n3) ? in[k] : 0.0; };
  double before = 0.0, after = 0.0;
  for (int i = 0; i < n3; ++i) before += in[i];
  for (int i = 0; i < n3; ++i) {
    int j = s > 0 ? i : n3 - 1 - i;
    double v = s > 0 ? (1.0 - th) * E(i - m) + th * E(i - m - 1)
                     : (1.0 - th) * E(j + m) + th * E(j + m + 1);
    out[s > 0 ? i : j] = v;
  }
  for (int i = 0; i < n3; ++i) after += out[i];
  return before - after;
}

// Weight of the ghost (inflow) value in new cell i for a shift of s cells.
double ghost_weight(int i, int n3, double s) {
  double a = std::abs(s);
  double fl = std::floor(a);
  int m = static_cast<int>(fl);
  double th = a - fl;
  int k = s > 0 ? i : n3 - 1 - i;
  return (k - m < 0 ? 1.0 - th : 0.0) + (k - m - 1 < 0 ? th : 0.0);
}

}  // namespace

void ApproxSolver::velocity_drift(Eigen::VectorXd& F, double dir) const {
  if (!drift_) return;
  const VGrid& vg = grid_.v;
  const std::int64_t nx = grid_.x.size(), nv = vg.size();
  Eigen::VectorXd src = F;
  const double h = vg.h();
  parallel_for(nx, [&](std::int64_t xi) {
    Vec3d x = grid_.x.x(xi);
    for (std::int64_t vi = 0; vi < nv; ++vi) {
      Vec3d foot = vg.v(vi) + dir * dt_ * drift_->a_g(x, vi);
      std::array<int, 3> c;
      std::array<double, 3> t;
      bool out = false;
      for (int d = 0; d < 3; ++d) {
        double q = (foot[d] + vg.vmax) / h;
        if (q < 0.0 || q > vg.n - 1) {
          out = true;
          break;
        }
        c[d] = std::min(static_cast<int>(std::floor(q)), vg.n - 2);
        t[d] = q - c[d];
      }
      double val = 0.0;
      if (!out)
        for (int k = 0; k < 8; ++k) {
          int a = (k >> 2) & 1, b = (k >> 1) & 1, e = k & 1;
          double w = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (e ? t[2] : 1 - t[2]);
          if (w != 0.0) val += w * src[vg.index(c[0] + a, c[1] + b, c[2] + e) * nx + xi];
        }
      F[vi * nx + xi] = val;
    }
  });
}

Predicted ApproxSolver::predict(const Eigen::VectorXd& F, InflowMode mode,
                                const Eigen::VectorXd* prev_trace, double dir) const {
  Eigen::VectorXd H = F + 0.5 * dt_ * Q_.apply(F);
  velocity_drift(H, dir);
  return transport(H, mode, prev_trace, dir);
}

Predicted ApproxSolver::transport(const Eigen::VectorXd& H, InflowMode mode,
                                  const Eigen::VectorXd* prev_trace, double dir) const {
  const auto& xg = grid_.x;
  const VGrid& vg = grid_.v;
  const std::int64_t nx = xg.size(), nv = vg.size(), ncol = columns();
  const int n = xg.n, n3 = xg.n3;

  Predicted p;
  p.base.resize(H.size());
  p.trace = Eigen::VectorXd::Zero(nv * ncol);

  // Pass 1: x3 transport with zero ghosts and the outgoing traces.
  parallel_for(nv, [&](std::int64_t vi) {
    Vec3d u = dir * vg.v(vi);
    const double* src = H.data() + vi * nx;
    double* dst = p.base.data() + vi * nx;
    if (slice_kind_[vi] == kLateral) {
      std::copy(src, src + nx, dst);
    } else if (slice_kind_[vi] == kFree) {
      double s = u[2] * dt_ / xg.h3();
      for (std::int64_t c = 0; c < ncol; ++c) {
        double outm = column_shift(src + c * n3, dst + c * n3, n3, s);
        p.trace[vi * ncol + c] = s != 0.0 ? outm / std::abs(s) : 0.0;
      }
    } else {
      // Wall-adjacent cell value on the exit side.
      for (std::int64_t c = 0; c < ncol; ++c)
        p.trace[vi * ncol + c] = u[2] > 0 ? src[c * n3 + n3 - 1] : u[2] < 0 ? src[c * n3] : 0.0;
    }
  });

  // Inflow data.
  Eigen::VectorXd inflow = Eigen::VectorXd::Zero(nv * ncol);
  if (mode != InflowMode::absorbing) {
    const Eigen::VectorXd& src = mode == InflowMode::self ? p.trace : *prev_trace;
    if (src.size() != nv * ncol) throw Error(Errc::OutOfRange, "trace size does not match the grid");
    for (std::int64_t vi = 0; vi < nv; ++vi) {
      std::int64_t mi = vg.mirror3(vi);
      for (std::int64_t c = 0; c < ncol; ++c)
        inflow[vi * ncol + c] = (1.0 - a_) * src[mi * ncol + c];
    }
  }

  // Pass 2: ghosts, lateral shifts; general slices by backward characteristics.
  parallel_for(nv, [&](std::int64_t vi) {
    Vec3d u = dir * vg.v(vi);
    double* dst = p.base.data() + vi * nx;
    if (slice_kind_[vi] == kLateral) {
      // No wall contact: every x3 row drifts sideways at its own speed.
      std::vector<double> s1(n3), s2(n3), buf;
      for (int k = 0; k < n3; ++k) {
        Vec3d w = regularized_drift(fam_, grid_.domain, xg.x(xg.index(0, 0, k)), u);
        s1[k] = w[0] * dt_ / xg.h();
        s2[k] = w[1] * dt_ / xg.h();
      }
      lateral_shift_rows(dst, n, n3, s1, true, buf);
      lateral_shift_rows(dst, n, n3, s2, false, buf);
      return;
    }
    if (slice_kind_[vi] == kFree) {
      double s = u[2] * dt_ / xg.h3();
      if (s != 0.0)
        for (std::int64_t c = 0; c < ncol; ++c) {
          double b = inflow[vi * ncol + c];
          if (b == 0.0) continue;
          for (int i = 0; i < n3; ++i) {
            double gw = ghost_weight(i, n3, s);
            if (gw == 0.0) break;
            dst[c * n3 + (s > 0 ? i : n3 - 1 - i)] += gw * b;
          }
        }
      std::vector<double> buf;
      lateral_shift(dst, n, n3, u[0] * dt_ / xg.h(), true, buf);
      lateral_shift(dst, n, n3, u[1] * dt_ / xg.h(), false, buf);
      return;
    }
    const double* src = H.data() + vi * nx;
    VelocityForcing none;
    CharOptions co;
    co.dt_interior = dt_;
    for (std::int64_t xi = 0; xi < nx; ++xi) {
      Vec3d x = xg.x(xi);
      Trajectory tr = integrate_backward(fam_, grid_.domain, none, dt_, x, u, co);
      Vec3d foot = tr.samples.back().X;
      double q1 = foot[0] / xg.h(), q2 = foot[1] / xg.h();
      if (tr.hit0) {
        int c1 = ((static_cast<int>(std::lround(q1)) % n) + n) % n;
        int c2 = ((static_cast<int>(std::lround(q2)) % n) + n) % n;
        dst[xi] = inflow[vi * ncol + std::int64_t(c1) * n + c2];
        continue;
      }
      double q3 = std::clamp(foot[2] / xg.h3() - 0.5, 0.0, double(n3 - 1));
      int i1 = static_cast<int>(std::floor(q1)), i2 = static_cast<int>(std::floor(q2));
      int i3 = std::min(static_cast<int>(std::floor(q3)), std::max(0, n3 - 2));
      double t1 = q1 - i1, t2 = q2 - i2, t3 = n3 > 1 ? q3 - i3 : 0.0;
      double val = 0.0;
      for (int k = 0; k < 8; ++k) {
        int a = (k >> 2) & 1, b = (k >> 1) & 1, e = k & 1;
        double w = (a ? t1 : 1 - t1) * (b ? t2 : 1 - t2) * (e ? t3 : 1 - t3);
        if (w == 0.0) continue;
        int j1 = (((i1 + a) % n) + n) % n, j2 = (((i2 + b) % n) + n) % n;
        int j3 = std::min(i3 + e, n3 - 1);
        val += w * src[xg.index(j1, j2, j3)];
      }
      dst[xi] = val;
    }
  });
  return p;
}

Eigen::VectorXd ApproxSolver::mild_map(const Predicted& p, const Eigen::VectorXd& guess) const {
  return p.base + 0.5 * dt_ * Q_.apply(guess);
}

Eigen::VectorXd ApproxSolver::correct(const Predicted& p, PicardStats* stats) const {
  Eigen::VectorXd F = p.base;
  Eigen::VectorXd QF;
  const double h = 0.5 * dt_;
  double res = 0.0;
  for (int it = 1; it <= sched_.picard_max; ++it) {
    Q_.apply(F, QF);
    Eigen::VectorXd Fn = p.base + h * QF;
    res = (Fn - F).cwiseAbs().maxCoeff();
    double scale = Fn.cwiseAbs().maxCoeff();
    F.swap(Fn);
    if (res <= sched_.fixed_point_tol * scale || res == 0.0) {
      if (stats) *stats = {it, scale > 0 ? res / scale : 0.0};
      return F;
    }
  }
  throw Error(Errc::NoConvergence,
              "Picard residual " + sci(res) + " after " + std::to_string(sched_.picard_max) + " iterations");
}

double positivity_min(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  double m = std::numeric_limits<double>::infinity();
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = grid.v.v(vi);
    double mu = maxwellian(v), sm = sqrt_maxwellian(v);
    for (std::int64_t xi = 0; xi < nx; ++xi) m = std::min(m, mu + sm * f[vi * nx + xi]);
  }
  return m;
}

std::pair<double, double> conservation_moments(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  Eigen::VectorXd m0(f.size()), m2(f.size());
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = grid.v.v(vi);
    double sm = sqrt_maxwellian(v), v2 = v.squaredNorm();
    for (std::int64_t xi = 0; xi < nx; ++xi) {
      m0[vi * nx + xi] = sm * f[vi * nx + xi];
      m2[vi * nx + xi] = v2 * sm * f[vi * nx + xi];
    }
  }
  return {integrate(grid, m0), integrate(grid, m2)};
}

namespace {

StepRow make_row(const PhaseGrid& grid, double t, const Eigen::VectorXd& F) {
  StepRow r;
  r.t = t;
  r.linf = F.size() ? F.cwiseAbs().maxCoeff() : 0.0;
  r.l1 = l1_norm(grid, F);
  r.l2 = l2_norm(grid, F);
  auto cm = conservation_moments(grid, F);
  r.mass = cm.first;
  r.energy = cm.second;
  r.positivity_min = positivity_min(grid, F);
  return r;
}

}  // namespace

ForwardResult ApproxSolver::forward(const Eigen::VectorXd& f0, int n, int steps,
                                    int record_every) const {
  const int N = std::max(n, 1);
  const std::int64_t nv = grid_.v.size(), ncol = columns();
  std::vector<Eigen::VectorXd> F(N, f0);
  std::vector<Eigen::VectorXd> traces(N, Eigen::VectorXd::Zero(nv * ncol));
  ForwardResult res;
  res.mismatch.assign(N, 0.0);
  const double linf0 = f0.size() ? f0.cwiseAbs().maxCoeff() : 0.0;
  const double l10 = l1_norm(grid_, f0);
  res.rows.push_back(make_row(grid_, 0.0, f0));
  res.positivity_min = res.rows.back().positivity_min;
  res.series.emplace_back(f0.size(), 0.0);
  res.series.back().values = f0;
  res.linf_ratio = linf0 > 0 ? 1.0 : 0.0;
  res.l1_ratio = l10 > 0 ? 1.0 : 0.0;
  std::vector<double> tw(nv);
  for (std::int64_t vi = 0; vi < nv; ++vi) tw[vi] = trace_weight(vi);
  for (int k = 1; k <= steps; ++k) {
    int picard = 0;
    double tsup = 0.0;
    for (int i = 0; i < N; ++i) {
      InflowMode mode = n == 0 ? InflowMode::self : (i == 0 ? InflowMode::absorbing : InflowMode::lagged);
      Predicted p = predict(F[i], mode, i ? &traces[i - 1] : nullptr);
      PicardStats st;
      F[i] = correct(p, &st);
      picard = std::max(picard, st.iterations);
      std::vector<double> mm(nv * ncol);
      for (std::int64_t vi = 0; vi < nv; ++vi)
        for (std::int64_t c = 0; c < ncol; ++c) {
          double prev = i ? traces[i - 1][vi * ncol + c] : 0.0;
          mm[vi * ncol + c] = tw[vi] * std::abs(p.trace[vi * ncol + c] - prev);
        }
      res.mismatch[i] += pairwise_sum(mm.data(), mm.size());
      traces[i] = std::move(p.trace);
      tsup = std::max(tsup, traces[i].size() ? traces[i].cwiseAbs().maxCoeff() : 0.0);
      if (linf0 > 0) res.linf_ratio = std::max(res.linf_ratio, F[i].cwiseAbs().maxCoeff() / linf0);
      if (l10 > 0) res.l1_ratio = std::max(res.l1_ratio, l1_norm(grid_, F[i]) / l10);
    }
    res.picard_max = std::max(res.picard_max, picard);
    res.trace_sup = std::max(res.trace_sup, tsup);
    StepRow row = make_row(grid_, k * dt_, F[N - 1]);
    row.trace_sup = tsup;
    row.picard = picard;
    res.positivity_min = std::min(res.positivity_min, row.positivity_min);
    res.rows.push_back(row);
    if (k % std::max(1, record_every) == 0 || k == steps) {
      res.series.emplace_back(f0.size(), k * dt_);
      res.series.back().values = F[N - 1];
    }
  }
  for (int i = 0; i < N; ++i)
    if (res.mismatch[i] <= sched_.mismatch_tol) {
      res.converged_n = i + 1;
      break;
    }
  return res;
}

Eigen::VectorXd ApproxSolver::propagate(const Eigen::VectorXd& f, int steps) const {
  Eigen::VectorXd F = f;
  for (int k = 0; k < steps; ++k) F = correct(predict(F, InflowMode::self, nullptr));
  return F;
}

void check_compatibility(const PhaseGrid& grid, const CutoffFamily& fam,
                         const Eigen::VectorXd& psi_T, double delta) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = grid.v.v(vi);
    for (std::int64_t xi = 0; xi < nx; ++xi) {
      if (psi_T[vi * nx + xi] == 0.0) continue;
      Vec3d x = grid.x.x(xi);
      auto nc = normal_coordinates(grid.domain, x, v);
      Vec3d beta = beta_eps(fam, grid.domain, x, v);
      if (nc.x_perp * nc.x_perp + beta.squaredNorm() < delta)
        throw Error(Errc::CompatibilityViolation,
                    "terminal data nonzero near the grazing set at node (" + std::to_string(xi) +
                        ", " + std::to_string(vi) + ")");
    }
  }
}

AdjointResult ApproxSolver::adjoint(const Eigen::VectorXd& psi_T, int steps, double compat_delta,
                                    int record_every) const {
  double delta = compat_delta > 0 ? compat_delta : 4.0 * fam_.eps4();
  check_compatibility(grid_, fam_, psi_T, delta);
  AdjointResult res;
  Eigen::VectorXd psi = psi_T;
  const double T = steps * dt_;
  res.series.emplace_back(psi.size(), T);
  res.series.back().values = psi;
  res.min_value = psi.size() ? psi.minCoeff() : 0.0;
  res.max_abs = psi.size() ? psi.cwiseAbs().maxCoeff() : 0.0;
  res.integral_T = integrate(grid_, psi);
  res.integrals.push_back(res.integral_T);
  for (int k = 1; k <= steps; ++k) {
    // Transposed order of the forward window: implicit half, transport, explicit half.
    Predicted p;
    p.base = psi;
    psi = transport(correct(p), InflowMode::self, nullptr, -1.0).base;
    velocity_drift(psi, -1.0);
    psi += 0.5 * dt_ * Q_.apply(psi);
    res.min_value = std::min(res.min_value, psi.minCoeff());
    res.max_abs = std::max(res.max_abs, psi.cwiseAbs().maxCoeff());
    res.integrals.push_back(integrate(grid_, psi));
    if (k % std::max(1, record_every) == 0 || k == steps) {
      res.series.emplace_back(psi.size(), T - k * dt_);
      res.series.back().values = psi;
    }
  }
  res.integral_0 = res.integrals.back();
  return res;
}

Eigen::VectorXd mild_step(const ApproxSolver& s, const Eigen::VectorXd& F_start,
                          const Eigen::VectorXd& prev_trace, const Eigen::VectorXd& guess) {
  Predicted p = s.predict(F_start, prev_trace.size() ? InflowMode::lagged : InflowMode::absorbing,
                          prev_trace.size() ? &prev_trace : nullptr);
  return s.mild_map(p, guess);
}

ForwardResult reflection_sweep(const ApproxSolver& s, const Eigen::VectorXd& f0, int n_max,
                               int steps, int record_every) {
  if (n_max < 2) throw Error(Errc::ConfigError, "reflection sweep needs n_max >= 2");
  return s.forward(f0, n_max, steps, record_every);
}

DuhamelResult duhamel_layer(const ApproxSolver& s, const Eigen::VectorXd& f0, int panels,
                            int steps_per_panel,
                            const std::function<Eigen::VectorXd(const Eigen::VectorXd&)>& kbar,
                            double tol, int max_iter) {
  DuhamelResult res;
  const double ds = steps_per_panel * s.dt();
  res.series.emplace_back(f0.size(), 0.0);
  res.series.back().values = f0;
  Eigen::VectorXd R = f0, f = f0, kf;
  if (kbar) kf = kbar(f0);
  for (int m = 1; m <= panels; ++m) {
    if (kbar) {
      double c = m == 1 ? 0.5 : 1.0;
      R = s.propagate(R + ds * c * kf, steps_per_panel);
      f = R;
      int it = 0;
      for (;;) {
        Eigen::VectorXd fn = R + 0.5 * ds * kbar(f);
        double res_n = (fn - f).cwiseAbs().maxCoeff();
        double scale = fn.cwiseAbs().maxCoeff();
        f.swap(fn);
        ++it;
        if (res_n <= tol * scale || res_n == 0.0) break;
        if (it >= max_iter) throw Error(Errc::NoConvergence, "Duhamel panel iteration stalled");
      }
      res.max_iterations = std::max(res.max_iterations, it);
      kf = kbar(f);
    } else {
      R = s.propagate(R, steps_per_panel);
      f = R;
    }
    res.series.emplace_back(f0.size(), m * ds);
    res.series.back().values = f;
  }
  return res;
}

double duality_certificate(const PhaseGrid& grid, const Eigen::VectorXd& f0,
                           const Eigen::VectorXd& F_T, const Eigen::VectorXd& psi_0,
                           const Eigen::VectorXd& psi_T) {
  double nf = l2_norm(grid, f0), np = l2_norm(grid, psi_T);
  if (nf == 0.0 || np == 0.0) return 0.0;
  double lhs = integrate(grid, F_T.cwiseProduct(psi_T));
  double rhs = integrate(grid, f0.cwiseProduct(psi_0));
  return std::abs(lhs - rhs) / (nf * np);
}

}  // namespace llab
