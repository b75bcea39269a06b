#include "llab/scenarios.hpp"

#include "llab/characteristics.hpp"
#include "llab/flatten.hpp"
#include "llab/landau.hpp"
#include "llab/macro.hpp"
#include "llab/regularization.hpp"
#include "llab/solver.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>
#include <random>

namespace llab {

namespace {

std::string tag_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string join(const std::string& dir, const std::string& file) { return dir + "/" + file; }

void write_field(const std::string& path, const Eigen::VectorXd& f) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(f.data()), static_cast<std::streamsize>(f.size() * sizeof(double)));
}

struct Setup {
  SlabGrid xg;
  VGrid vg;
  std::unique_ptr<PhaseGrid> grid;
  std::unique_ptr<CollisionCoefficients> coeffs;

  Setup(const RunConfig& c, int nx, int nx3, int nv, double vmax)
      : xg(c.domain.L, c.domain.lateral, nx, nx3), vg(nv, vmax) {
    grid = std::make_unique<PhaseGrid>(xg, vg, c.domain.delta0);
    coeffs = std::make_unique<CollisionCoefficients>(vg, BackgroundG{});
  }
};

template <class F>
Eigen::VectorXd sample_field(const PhaseGrid& g, F&& fn) {
  const std::int64_t nx = g.x.size(), nv = g.v.size();
  Eigen::VectorXd f(g.size());
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = g.v.v(vi);
    for (std::int64_t xi = 0; xi < nx; ++xi) f[vi * nx + xi] = fn(g.x.x(xi), v);
  }
  return f;
}

// smooth positive bump away from the walls
Eigen::VectorXd forward_datum(const PhaseGrid& g) {
  const double L = g.x.L, lx = g.x.lx;
  return sample_field(g, [&](const Vec3d& x, const Vec3d& v) {
    double s = x[2] / L - 0.5;
    return 0.4 * sqrt_maxwellian(v) * std::exp(-20.0 * s * s) * (1.0 + 0.5 * std::cos(2 * kPi * x[0] / lx));
  });
}

// zero on |v3| < 0.3, so the data vanish near the grazing set at the walls
Eigen::VectorXd adjoint_datum(const PhaseGrid& g) {
  const double L = g.x.L, lx = g.x.lx;
  return sample_field(g, [&](const Vec3d& x, const Vec3d& v) {
    if (std::abs(v[2]) < 0.3) return 0.0;
    return std::exp(-0.25 * v.squaredNorm()) * std::sin(kPi * x[2] / L) *
           (1.0 + 0.3 * std::cos(2 * kPi * x[1] / lx));
  });
}

Eigen::VectorXd macro_datum(const PhaseGrid& g, int id) {
  const double L = g.x.L, lx = g.x.lx;
  return sample_field(g, [&](const Vec3d& x, const Vec3d& v) {
    double p1 = 2 * kPi * x[0] / lx, p2 = 2 * kPi * x[1] / lx, p3 = kPi * x[2] / L;
    switch (id) {
      case 0: return 0.3 * std::cos(p1) * chi(0, v) + 0.1 * std::cos(p3) * chi(4, v);
      case 1: return 0.3 * std::sin(p3) * chi(3, v) + 0.2 * std::cos(p2) * chi(1, v) + 0.1 * burnett_A(0, v);
      default:
        return 0.2 * std::cos(p3) * chi(0, v) + 0.2 * std::cos(p1) * burnett_B(0, 1, v) +
               0.1 * std::sin(p2) * chi(4, v);
    }
  });
}

DiffusionOptions diffusion_options(DiffusionMode m) {
  DiffusionOptions o;
  o.mode = m;
  return o;
}

std::string run_tag(double eps, double a, int n) {
  return "eps" + tag_num(eps) + "_a" + tag_num(a) + "_n" + std::to_string(n);
}

// quadratic p(v) = v^T H v / 2 + g.v + c with Laplacian tr(S^T H S) after standardizing
double q_exactness(const CutoffFamily& fam, std::mt19937_64& rng, int samples) {
  std::normal_distribution<double> N(0.0, 1.0);
  BumpKernel ker(16);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Mat3d H;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j <= i; ++j) H(i, j) = H(j, i) = N(rng);
    Vec3d g(N(rng), N(rng), N(rng));
    double c = N(rng);
    QepsOptions opt;
    if (s % 2) {
      Mat3d S = Mat3d::Identity();
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < i; ++j) S(i, j) = 0.3 * N(rng);
      S.diagonal() = Vec3d(1.0 + 0.2 * std::abs(N(rng)), 0.8, 1.1);
      opt.S = S;
    }
    Vec3d v(N(rng), N(rng), N(rng));
    auto p = [&](const Vec3d& w) { return 0.5 * w.dot(H * w) + g.dot(w) + c; };
    double q = q_eps(fam, ker, p, v, opt);
    double lap = (opt.S.transpose() * H * opt.S).trace();
    worst = std::max(worst, std::abs(q - lap) / std::max(1.0, std::abs(lap)));
  }
  return worst;
}

}  // namespace

void scenario_solve(const RunConfig& cfg, RunReport& rep, const std::string& dir) {
  SolverSchedule sched = cfg.solver_schedule();
  Setup su(cfg, cfg.grid.n_x, cfg.grid.n_x3, cfg.grid.n_v, cfg.grid.v_max);
  const PhaseGrid& g = *su.grid;
  Eigen::VectorXd f0 = forward_datum(g);
  const double f0_inf = f0.cwiseAbs().maxCoeff();
  std::mt19937_64 rng(cfg.seed);

  for (double eps : cfg.schedule.epsilon_list) {
    CutoffFamily fam(eps);
    VelocityDiffusion Q(g, fam, *su.coeffs, diffusion_options(cfg.schedule.diffusion));
    WindowPlan wp = plan_windows(sched, eps, cfg.schedule.T);
    const std::string etag = "eps" + tag_num(eps);

    // Q exactness on quadratics and the mean-zero column sums of the matrix
    double qerr = q_exactness(fam, rng, 200);
    rep.add("q_quadratic_exactness[" + etag + "]", family::qeps, qerr, "<=", 1e-9);
    double mean_worst = 0.0;
    {
      const auto& M = Q.matrix(0);
      const VGrid& vg = g.v;
      std::uniform_real_distribution<double> U(-1.0, 1.0);
      for (int r = 0; r < 10; ++r) {
        Eigen::VectorXd psi(vg.size());
        for (std::int64_t i = 0; i < vg.size(); ++i) psi[i] = U(rng) * std::exp(-0.1 * vg.v(i).squaredNorm());
        Eigen::VectorXd qa = M.transpose() * psi, qb = M * psi;
        double l1 = psi.cwiseAbs().sum() * vg.cell();
        double sa = std::abs(pairwise_sum(qa.data(), qa.size())) * vg.cell();
        double sb = std::abs(pairwise_sum(qb.data(), qb.size())) * vg.cell();
        mean_worst = std::max({mean_worst, sa / l1, sb / l1});
      }
    }
    rep.add("q_mean_zero[" + etag + "]", family::qeps, mean_worst, "<=", 1e-10,
            "grid sum of Q psi and Q^T psi over |psi|_1");

    // Jacobian of the characteristics on the slab geometry
    {
      VelocityForcing B;
      const double lx = g.x.lx;
      B.field = [lx](double, const Vec3d& x, const Vec3d& v) { return Vec3d(0.3 * std::cos(2 * kPi * x[0] / lx) * v); };
      B.div = [lx](double, const Vec3d& x, const Vec3d&) { return 0.9 * std::cos(2 * kPi * x[0] / lx); };
      std::uniform_real_distribution<double> U(0.0, 1.0);
      std::normal_distribution<double> N(0.0, 1.5);
      std::vector<Trajectory> trs;
      double max_tr = 0.0;
      for (int k = 0; k < cfg.checks.jacobian_anchors; ++k) {
        Vec3d x(U(rng) * lx, U(rng) * lx, (0.001 + 0.998 * U(rng)) * g.x.L);
        Vec3d v(N(rng), N(rng), N(rng));
        trs.push_back(integrate_backward(fam, g.domain, B, cfg.schedule.T, x, v));
        max_tr = std::max(max_tr, trs.back().max_abs_trace);
      }
      const double C = 1.1 * max_tr, e3 = eps * eps * eps;
      double viol = -HUGE_VAL, at_t = 0.0;
      for (const auto& tr : trs) {
        auto J = jacobian(tr);
        at_t = std::max(at_t, std::abs(J.front() - 1.0));
        for (std::size_t i = 0; i < J.size(); ++i) {
          double b = C * (1.0 + e3) * std::abs(tr.t1 - tr.samples[i].s);
          double lj = std::log(J[i]);
          viol = std::max(viol, std::max(lj - b, -b - lj));
        }
      }
      rep.add("jacobian_two_sided[" + etag + "]", family::jacobian, viol, "<=", 0.0,
              "max of |log J| - C(1+eps^3)|t-s|, C = " + sci(C));
      rep.add("jacobian_at_anchor[" + etag + "]", family::jacobian, at_t, "<=", 0.0, "|J(t) - 1|");
    }

    for (double a : cfg.schedule.a_list) {
      ApproxSolver s(g, fam, Q, a, wp.dt, sched);

      // Lipschitz ratio of the mild map on random pairs
      {
        Predicted p = s.predict(f0, InflowMode::self, nullptr);
        std::uniform_real_distribution<double> U(-1.0, 1.0);
        double worst = 0.0;
        for (int k = 0; k < cfg.checks.lipschitz_pairs; ++k) {
          Eigen::VectorXd g1(g.size()), g2(g.size());
          for (std::int64_t i = 0; i < g.size(); ++i) g1[i] = U(rng), g2[i] = U(rng);
          double num = (s.mild_map(p, g1) - s.mild_map(p, g2)).cwiseAbs().maxCoeff();
          worst = std::max(worst, num / (g1 - g2).cwiseAbs().maxCoeff());
        }
        std::string t = etag + "_a" + tag_num(a);
        rep.add("mild_map_lipschitz[" + t + "]", family::contraction, worst, "<=",
                s.window_ratio() + 1e-10, "4 T1 / eps^2 = " + sci(s.window_ratio()));
      }

      for (int n : cfg.schedule.n_list) {
        const std::string tag = run_tag(eps, a, n);
        ForwardResult r = s.forward(f0, n, wp.steps);
        rep.add("max_principle[" + tag + "]", family::max_principle, r.linf_ratio, "<=", 1.0 + 1e-6);
        rep.add("l1_contraction[" + tag + "]", family::l1, r.l1_ratio, "<=", 1.0 + 1e-6);
        rep.add("positivity[" + tag + "]", family::positivity, r.positivity_min, ">=", -1e-8,
                "min of mu + sqrt(mu) f");
        double bound = std::exp(4.0 * cfg.schedule.T / (eps * eps)) * f0_inf;
        rep.add("trace_sup_ratio[" + tag + "]", family::trace, r.trace_sup / bound, "<=", 1.0,
                "outgoing trace sup over e^(4T/eps^2) |f0|_inf");
        rep.add("reflection_mismatch_last[" + tag + "]", family::info, r.mismatch.back(), "info", 0.0);
        rep.add("reflection_converged_n[" + tag + "]", family::info, r.converged_n, "info", 0.0);
        rep.add("picard_iterations_max[" + tag + "]", family::info, r.picard_max, "info", 0.0);
        auto [m0, e0] = conservation_moments(g, r.series.front().values);
        auto [m1, e1] = conservation_moments(g, r.series.back().values);
        rep.add("mass_drift[" + tag + "]", family::info, std::abs(m1 - m0), "info", 0.0);
        rep.add("energy_drift[" + tag + "]", family::info, std::abs(e1 - e0), "info", 0.0);

        if (dir.empty()) continue;
        CsvTable t{{"t", "linf", "l1", "l2", "mass", "energy", "trace_sup", "positivity_min", "picard"}, {}};
        SvgSeries sl{"|F|_inf", {}, {}}, s1{"|F|_1", {}, {}}, s2{"|F|_2", {}, {}};
        for (const auto& row : r.rows) {
          t.rows.push_back({row.t, row.linf, row.l1, row.l2, row.mass, row.energy, row.trace_sup,
                            row.positivity_min, double(row.picard)});
          sl.x.push_back(row.t), sl.y.push_back(row.linf);
          s1.x.push_back(row.t), s1.y.push_back(row.l1);
          s2.x.push_back(row.t), s2.y.push_back(row.l2);
        }
        write_csv(join(dir, "solve_" + tag + ".csv"), t);
        CsvTable mt{{"n", "mismatch"}, {}};
        SvgSeries ms{"mismatch", {}, {}};
        for (std::size_t i = 0; i < r.mismatch.size(); ++i) {
          mt.rows.push_back({double(i + 1), r.mismatch[i]});
          ms.x.push_back(i + 1), ms.y.push_back(r.mismatch[i]);
        }
        write_csv(join(dir, "mismatch_" + tag + ".csv"), mt);
        write_svg_lines(join(dir, "solve_" + tag + ".svg"), "norms, " + tag, "t", "norm", {sl, s1, s2});
        write_svg_lines(join(dir, "mismatch_" + tag + ".svg"), "boundary mismatch, " + tag, "n",
                        "mismatch", {ms}, true);
        write_field(join(dir, "solve_" + tag + "_final.f64"), r.series.back().values);
      }
    }
  }
}

void scenario_adjoint(const RunConfig& cfg, RunReport& rep, const std::string& dir) {
  SolverSchedule sched = cfg.solver_schedule();
  Setup su(cfg, cfg.grid.n_x, cfg.grid.n_x3, cfg.grid.n_v, cfg.grid.v_max);
  const PhaseGrid& g = *su.grid;
  Eigen::VectorXd psiT = adjoint_datum(g);
  const double psi_max = psiT.cwiseAbs().maxCoeff();
  for (double eps : cfg.schedule.epsilon_list) {
    CutoffFamily fam(eps);
    VelocityDiffusion Q(g, fam, *su.coeffs, diffusion_options(cfg.schedule.diffusion));
    WindowPlan wp = plan_windows(sched, eps, cfg.schedule.T);
    for (double a : cfg.schedule.a_list) {
      const std::string tag = "eps" + tag_num(eps) + "_a" + tag_num(a);
      ApproxSolver s(g, fam, Q, a, wp.dt, sched);
      AdjointResult r = s.adjoint(psiT, wp.steps, cfg.schedule.compat_delta);
      rep.add("adjoint_min[" + tag + "]", family::adjoint, r.min_value, ">=", -1e-10);
      rep.add("adjoint_max_rel[" + tag + "]", family::adjoint, (r.max_abs - psi_max) / psi_max, "<=", 1e-8,
              "(max |psi| - max |psi_T|) / max |psi_T|");
      rep.add("adjoint_integral_growth[" + tag + "]", family::adjoint, r.integral_0 - r.integral_T, "<=", 1e-8,
              "int psi(0) - int psi(T)");
      if (dir.empty()) continue;
      CsvTable t{{"t", "integral", "max", "min"}, {}};
      SvgSeries si{"int psi", {}, {}}, sm{"max psi", {}, {}};
      for (std::size_t k = 0; k < r.series.size(); ++k) {
        const auto& f = r.series[k];
        double mx = f.values.maxCoeff(), mn = f.values.minCoeff(), in = integrate(g, f.values);
        t.rows.push_back({f.time, in, mx, mn});
        si.x.push_back(f.time), si.y.push_back(in);
        sm.x.push_back(f.time), sm.y.push_back(mx);
      }
      write_csv(join(dir, "adjoint_" + tag + ".csv"), t);
      write_svg_lines(join(dir, "adjoint_" + tag + ".svg"), "adjoint, " + tag, "t", "value", {si, sm});
    }
  }
}

void scenario_duality(const RunConfig& cfg, RunReport& rep, const std::string& dir) {
  SolverSchedule sched = cfg.solver_schedule();
  const double eps = cfg.schedule.epsilon_list.front(), a = cfg.schedule.a_list.front();
  CutoffFamily fam(eps);
  WindowPlan wp = plan_windows(sched, eps, cfg.schedule.T);
  const auto& d = cfg.duality;
  struct Level {
    int nx, nx3, nv, steps;
  };
  std::vector<Level> levels{{d.n_x, d.n_x3, d.n_v, wp.steps}};
  if (d.refine) levels.push_back({2 * d.n_x, 2 * d.n_x3, 2 * d.n_v - 1, 2 * wp.steps});
  std::vector<double> res;
  CsvTable t{{"level", "h_x", "h_v", "dt", "residual"}, {}};
  for (std::size_t l = 0; l < levels.size(); ++l) {
    const auto& lv = levels[l];
    Setup su(cfg, lv.nx, lv.nx3, lv.nv, d.v_max);
    const PhaseGrid& g = *su.grid;
    VelocityDiffusion Q(g, fam, *su.coeffs, diffusion_options(cfg.schedule.diffusion));
    double dt = cfg.schedule.T / lv.steps;
    ApproxSolver s(g, fam, Q, a, dt, sched);
    Eigen::VectorXd f0 = forward_datum(g), psiT = adjoint_datum(g);
    Eigen::VectorXd FT = s.propagate(f0, lv.steps);
    AdjointResult ad = s.adjoint(psiT, lv.steps, cfg.schedule.compat_delta);
    res.push_back(duality_certificate(g, f0, FT, ad.series.back().values, psiT));
    t.rows.push_back({double(l), g.x.h(), g.v.h(), dt, res.back()});
  }
  rep.add("duality_residual_base", family::duality, res[0], "<=", 5e-3);
  if (res.size() > 1) {
    rep.add("duality_residual_refined", family::info, res[1], "info", 0.0);
    double ratio = res[1] > 0 ? res[0] / res[1] : HUGE_VAL;
    auto& r = rep.add("duality_refinement_ratio", family::duality, ratio, ">=", 2.0);
    if (!r.pass && res[0] <= d.floor && res[1] <= d.floor) {
      r.pass = true;
      r.note = "both residuals below the converged floor " + sci(d.floor);
    }
  }
  if (!dir.empty()) write_csv(join(dir, "duality.csv"), t);
}

void scenario_macro(const RunConfig& cfg, RunReport& rep, const std::string& dir) {
  const auto& m = cfg.macro;
  SolverSchedule sched = cfg.solver_schedule();

  // orthonormality against the exact Gaussian moments
  {
    VGrid vg(m.coercivity_n_v, m.coercivity_v_max);
    double gram = 0.0;
    for (int a = 0; a < 5; ++a)
      for (int b = a; b < 5; ++b) {
        std::vector<double> t(vg.size());
        for (std::int64_t i = 0; i < vg.size(); ++i) t[i] = chi(a, vg.v(i)) * chi(b, vg.v(i)) * vg.cell();
        gram = std::max(gram, std::abs(pairwise_sum(t.data(), t.size()) - (a == b)));
      }
    rep.add("gram_chi", family::ortho, gram, "<=", 1e-8);
    double oracle = 0.0, grid = 0.0;
    for (int j = 0; j < 3; ++j) {
      GaussPoly p = burnett_A_poly(j);
      oracle = std::max(oracle, std::abs((p * p).expectation() - 1.0));
      std::vector<double> t(vg.size());
      for (std::int64_t i = 0; i < vg.size(); ++i) {
        double v = burnett_A(j, vg.v(i));
        t[i] = v * v * vg.cell();
      }
      grid = std::max(grid, std::abs(pairwise_sum(t.data(), t.size()) - 1.0));
    }
    rep.add("burnett_A_norm_oracle", family::ortho, oracle, "<=", 1e-14);
    rep.add("burnett_A_norm_grid", family::ortho, grid, "<=", 1e-8);

    VConvolver conv(vg);
    auto cr = coercivity_spotcheck(conv, m.coercivity_samples, cfg.seed);
    rep.add("coercivity_delta_min", family::info, cr.delta_min, "info", 0.0,
            std::to_string(cr.samples) + " slices");
  }

  // a = 0, divergence-form diffusion, dense Kbar
  CutoffFamily fam(m.epsilon);
  std::vector<int> levels{m.n_x};
  if (m.refine) levels.push_back(2 * m.n_x);
  std::array<std::vector<double>, 3> cfit;
  for (int n : levels) {
    Setup su(cfg, n, n, m.n_v, m.v_max);
    const PhaseGrid& g = *su.grid;
    VelocityDiffusion Q(g, fam, *su.coeffs, diffusion_options(DiffusionMode::B));
    WindowPlan wp = plan_windows(sched, m.epsilon, m.T);
    int spp = (wp.steps + m.panels - 1) / m.panels;
    double dt = m.T / (spp * m.panels);
    ApproxSolver s(g, fam, Q, 0.0, dt, sched);
    VConvolver conv(g.v);
    Eigen::MatrixXd KM = kbar_matrix(*su.coeffs, conv);
    auto kb = [&](const Eigen::VectorXd& f) { return apply_velocity_matrix(KM, g.x.size(), f); };
    const std::string lt = "nx" + std::to_string(n);
    for (int id = 0; id < 3; ++id) {
      auto du = duhamel_layer(s, macro_datum(g, id), m.panels, spp, kb, cfg.schedule.fixed_point_tol);
      auto mr = macro_control_report(g, du.series, 0.0, m.safety);
      auto dm = decay_monitor(g, du.series, 0.0);
      const std::string tag = "datum" + std::to_string(id) + "_" + lt;
      cfit[id].push_back(mr.c_fit);
      rep.add("macro_margin[" + tag + "]", family::macro, mr.worst_margin, ">=", 0.0,
              "min of rhs - lhs at C = " + sci(mr.c_fit));
      rep.add("macro_c_fit[" + tag + "]", family::info, mr.c_fit, "info", 0.0);
      rep.add("macro_poisson_residual[" + tag + "]", family::info, mr.max_poisson_residual, "info", 0.0);
      rep.add("macro_mean_drift[" + tag + "]", family::info, mr.mean_drift, "info", 0.0);
      rep.add("l2_monotone_violation[" + tag + "]", family::decay, dm.monotone_violation, "<=", 1e-8);
      rep.add("l2_decay_exponent[" + tag + "]", family::info, dm.decay_exponent, "info", 0.0);
      if (dir.empty()) continue;
      CsvTable t{{"t", "eta", "lhs", "micro", "c_needed", "margin", "l2sq"}, {}};
      SvgSeries sl{"lhs", {}, {}}, sr{"rhs", {}, {}};
      for (const auto& r : mr.rows) {
        t.rows.push_back({r.t, r.eta, r.lhs, r.micro, r.c_needed, r.margin, r.l2sq});
        sl.x.push_back(r.t), sl.y.push_back(r.lhs);
        sr.x.push_back(r.t), sr.y.push_back(r.lhs + r.margin);
      }
      write_csv(join(dir, "macro_" + tag + ".csv"), t);
      write_svg_lines(join(dir, "macro_" + tag + ".svg"), "macro-micro sides, " + tag, "t", "value", {sl, sr});
      CsvTable dt_{{"t", "l2", "energy"}, {}};
      SvgSeries s2{"|f|_2", {}, {}};
      for (std::size_t i = 0; i < dm.t.size(); ++i) {
        dt_.rows.push_back({dm.t[i], dm.l2[i], dm.energy[i]});
        s2.x.push_back(dm.t[i]), s2.y.push_back(dm.l2[i]);
      }
      write_csv(join(dir, "decay_" + tag + ".csv"), dt_);
      write_svg_lines(join(dir, "decay_" + tag + ".svg"), "L2 decay, " + tag, "t", "|f|_2", {s2}, true);
    }
  }
  if (levels.size() > 1)
    for (int id = 0; id < 3; ++id) {
      double r = std::max(cfit[id][1] / cfit[id][0], cfit[id][0] / cfit[id][1]);
      rep.add("macro_c_stability[datum" + std::to_string(id) + "]", family::macro, r, "<=", 2.0,
              "fitted C ratio across one x refinement");
    }
}

void scenario_flatten(const RunConfig& cfg, RunReport& rep, const std::string& dir) {
  const auto& fb = cfg.flatten;
  std::vector<std::pair<std::string, BoundaryPatch>> patches;
  auto want = [&](const char* n) { return fb.patch == "all" || fb.patch == n; };
  if (want("flat")) patches.emplace_back("flat", flat_patch());
  if (want("tilted")) patches.emplace_back("tilted", tilted_patch(fb.tilt));
  if (want("paraboloid")) patches.emplace_back("paraboloid", paraboloid_patch());
  if (want("saddle")) patches.emplace_back("saddle", saddle_patch());

  MatrixField sigma = [](const Vec3d&, const Vec3d& v) { return sigma_mu(v); };
  VectorField ag = [](const Vec3d&, const Vec3d& v) { return Vec3d(-sigma_mu(v) * v); };
  auto testf = [](const Vec3d& x, const Vec3d& v) {
    return std::sin(x[0] + 0.3 * x[2]) * std::exp(-0.1 * v.squaredNorm()) * (1.0 + 0.2 * v[0] * v[2] + x[1] * v[1]);
  };
  std::vector<std::string> bar_labels;
  std::vector<double> bar_values;
  CsvTable jt{{"patch", "delta", "aa_jump", "bb_jump"}, {}};
  CsvTable tt{{"patch", "h", "residual", "residual_plus_sign"}, {}};
  std::uint64_t seed = cfg.seed;
  for (std::size_t pi = 0; pi < patches.size(); ++pi) {
    const auto& [name, p] = patches[pi];
    const std::string tag = "[" + name + "]";
    double comm = specular_commutation_check(p, fb.samples, seed + 11 * pi);
    double rt = round_trip_residual(p, fb.samples, seed + 11 * pi + 1);
    auto c = interface_continuity_certificate(p, sigma, ag, fb.continuity_samples, seed + 11 * pi + 2, fb.delta);
    auto ti = transport_invariance(p, testf, fb.transport_samples, seed + 11 * pi + 3, fb.h);
    rep.add("specular_commutation" + tag, family::flatten, comm, "<=", 1e-12);
    rep.add("chart_round_trip" + tag, family::flatten, rt, "<=", 1e-10);
    rep.add("c13_c23_interface" + tag, family::flatten, c.c13_c23, "<=", 1e-12);
    rep.add("A_interface_parity" + tag, family::flatten, c.a_residual, "<=", 1e-12);
    rep.add("lambda_parity" + tag, family::flatten, c.lambda_residual, "<=", 1e-12);
    rep.add("Lambda_parity" + tag, family::flatten, c.Lambda_residual, "<=", 1e-12);
    rep.add("det_closed_form" + tag, family::flatten, c.det_residual, "<=", 1e-12);
    rep.add("adjugate_closed_form" + tag, family::flatten, c.adjugate_residual, "<=", 1e-12);
    rep.add("AA_jump_extrapolated" + tag, family::flatten, c.aa_jump_extrapolated, "<=", 1e-6);
    rep.add("BB_jump_extrapolated" + tag, family::info, c.bb_jump_extrapolated, "info", 0.0,
            "first-order coefficient, not continuous");
    if (ti.residual.back() <= 1e-12)
      rep.add("transport_invariance" + tag, family::flatten, ti.residual.back(), "<=", 1e-12, "exact on this chart");
    else
      rep.add("transport_invariance_order" + tag, family::flatten, ti.order, ">=", 1.8,
              "residual " + sci(ti.residual.front()) + " -> " + sci(ti.residual.back()));
    rep.add("transport_plus_sign_residual" + tag, family::info, ti.residual_plus.back(), "info", 0.0);
    for (std::size_t l = 0; l < c.deltas.size(); ++l) jt.rows.push_back({double(pi), c.deltas[l], c.aa_jump[l], c.bb_jump[l]});
    for (std::size_t l = 0; l < ti.steps.size(); ++l) tt.rows.push_back({double(pi), ti.steps[l], ti.residual[l], ti.residual_plus[l]});
    for (auto [lab, val] : std::vector<std::pair<std::string, double>>{
             {"commutation", comm}, {"c13/c23", c.c13_c23}, {"AA jump extrap", c.aa_jump_extrapolated},
             {"BB jump extrap", c.bb_jump_extrapolated}, {"transport h/4", ti.residual.back()}}) {
      bar_labels.push_back(name + " " + lab);
      bar_values.push_back(val);
    }
  }

  // mirror extension on a small interface grid
  {
    HalfGrid hg;
    hg.n = 4;
    hg.h = 0.1;
    hg.m = 3;
    hg.h3 = 0.05;
    hg.w = VGrid(8, 3.0);
    auto even = [](const Vec3d& y, const Vec3d& w) {
      return std::exp(-w.squaredNorm()) * (1.0 + y[2] + 0.3 * y[2] * w[2]) * (1.0 + 0.2 * std::cos(y[0]));
    };
    auto phi = [](const Vec3d& y, const Vec3d& w) { return std::cos(y[0]) * std::exp(-0.2 * w.squaredNorm()) * (1.0 + w[2]); };
    ExtendedField ef = mirror_extend(hg, even);
    double parity = 0.0;
    for (int i1 = 0; i1 < hg.n; ++i1)
      for (int i2 = 0; i2 < hg.n; ++i2)
        for (int k = 0; k < hg.m; ++k)
          for (std::int64_t wi = 0; wi < hg.w.size(); ++wi)
            parity = std::max(parity, std::abs(ef.values[ef.index(i1, i2, 2 * hg.m - 1 - k, hg.w.mirror3(wi))] -
                                               ef.values[ef.index(i1, i2, k, wi)]));
    rep.add("mirror_parity", family::flatten, parity, "<=", 0.0);
    rep.add("extension_boundary_term", family::flatten, std::abs(extension_boundary_term(ef, phi)), "<=", 1e-8);
    rep.add("extension_boundary_term_one_sided", family::info,
            std::abs(extension_boundary_term(ef, phi, true)), "info", 0.0);
    double raised = 0.0;
    try {
      mirror_extend(hg, [](const Vec3d&, const Vec3d& w) { return w[2] * std::exp(-w.squaredNorm()); });
    } catch (const Error& e) {
      raised = e.code() == Errc::SpecularViolation ? 1.0 : 0.0;
    }
    rep.add("specular_violation_raised", family::flatten, raised, ">=", 1.0);
  }

  if (dir.empty()) return;
  write_csv(join(dir, "flatten_jumps.csv"), jt);
  write_csv(join(dir, "flatten_transport.csv"), tt);
  write_svg_bars(join(dir, "flatten_residuals.svg"), "interface residuals", bar_labels, bar_values);
}

RunReport run_scenario(const RunConfig& cfg, bool write_artifacts) {
  cfg.validate();
  auto t0 = std::chrono::steady_clock::now();
  RunReport rep;
  rep.scenario = to_string(cfg.scenario);
  rep.config_hash = config_hash(cfg);
  rep.code_version = code_version();
  std::string dir = write_artifacts ? cfg.output_dir : "";
  if (!dir.empty()) ensure_directory(dir);
  auto on = [&](Scenario s) { return cfg.scenario == s || cfg.scenario == Scenario::all; };
  if (on(Scenario::solve)) scenario_solve(cfg, rep, dir);
  if (on(Scenario::adjoint)) scenario_adjoint(cfg, rep, dir);
  if (on(Scenario::duality)) scenario_duality(cfg, rep, dir);
  if (on(Scenario::macro)) scenario_macro(cfg, rep, dir);
  if (on(Scenario::flatten)) scenario_flatten(cfg, rep, dir);
  rep.check_unique();
  rep.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (!dir.empty()) {
    write_records_csv(join(dir, "records.csv"), rep);
    // one line per artifact with the config hash; CSV bodies stay numeric
    std::vector<std::string> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != "manifest.csv") files.push_back(e.path().filename().string());
    std::sort(files.begin(), files.end());
    std::ofstream mf(join(dir, "manifest.csv"));
    mf << "file,config_hash\n";
    for (const auto& f : files) mf << f << "," << rep.config_hash << "\n";
    for (const char* f : {"report.json", "config.ini"}) mf << f << "," << rep.config_hash << "\n";
    write_report_json(join(dir, "report.json"), rep);
    std::ofstream c(join(dir, "config.ini"));
    if (!c) throw Error(Errc::IoError, "cannot write " + join(dir, "config.ini"));
    c << "; config hash " << rep.config_hash << "\n" << serialize_config(cfg);
  }
  return rep;
}

double field_file_difference(const std::string& a, const std::string& b) {
  auto load = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary | std::ios::ate);
    if (!in) throw Error(Errc::IoError, "cannot read " + p);
    auto n = static_cast<std::size_t>(in.tellg());
    if (n % sizeof(double)) throw Error(Errc::IoError, p + ": size is not a multiple of 8");
    std::vector<double> v(n / sizeof(double));
    in.seekg(0);
    in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n));
    return v;
  };
  auto va = load(a), vb = load(b);
  if (va.size() != vb.size()) throw Error(Errc::MismatchedSuites, a + " and " + b + " differ in length");
  double d = 0.0;
  for (std::size_t i = 0; i < va.size(); ++i) d = std::max(d, std::abs(va[i] - vb[i]));
  return d;
}

}  // namespace llab
