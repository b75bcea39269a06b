#include "llab/macro.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

namespace llab {

GaussPoly GaussPoly::monomial(int e1, int e2, int e3, double c) {
  GaussPoly p;
  if (c != 0.0) p.terms[{e1, e2, e3}] = c;
  return p;
}

GaussPoly GaussPoly::operator+(const GaussPoly& o) const {
  GaussPoly r = *this;
  for (const auto& [e, c] : o.terms) r.terms[e] += c;
  return r;
}

GaussPoly GaussPoly::operator*(const GaussPoly& o) const {
  GaussPoly r;
  for (const auto& [e, c] : terms)
    for (const auto& [f, d] : o.terms) r.terms[{e[0] + f[0], e[1] + f[1], e[2] + f[2]}] += c * d;
  return r;
}

GaussPoly GaussPoly::operator*(double s) const {
  GaussPoly r = *this;
  for (auto& [e, c] : r.terms) c *= s;
  return r;
}

double GaussPoly::operator()(const Vec3d& v) const {
  double s = 0.0;
  for (const auto& [e, c] : terms) s += c * std::pow(v[0], e[0]) * std::pow(v[1], e[1]) * std::pow(v[2], e[2]);
  return s;
}

double gaussian_moment(int e1, int e2, int e3) {
  auto one = [](int e) {
    if (e % 2) return 0.0;
    double r = 1.0;
    for (int k = e - 1; k > 1; k -= 2) r *= k;
    return r;
  };
  return one(e1) * one(e2) * one(e3);
}

double GaussPoly::expectation() const {
  double s = 0.0;
  for (const auto& [e, c] : terms) s += c * gaussian_moment(e[0], e[1], e[2]);
  return s;
}

namespace {

GaussPoly coord(int i) { return GaussPoly::monomial(i == 0, i == 1, i == 2); }
GaussPoly speed2() { return coord(0) * coord(0) + coord(1) * coord(1) + coord(2) * coord(2); }

// sqrt(mu) with mu the unit Gaussian, so <p sqrt(mu), q sqrt(mu)> = E[pq].
double smu(const Vec3d& v) { return sqrt_maxwellian(v); }

}  // namespace

GaussPoly chi_poly(int k) {
  switch (k) {
    case 0: return GaussPoly::constant(1.0);
    case 1: case 2: case 3: return coord(k - 1);
    case 4: return (speed2() + GaussPoly::constant(-3.0)) * (1.0 / std::sqrt(6.0));
    default: throw Error(Errc::OutOfRange, "collision invariant index must be 0..4");
  }
}

GaussPoly burnett_A_poly(int j) {
  if (j < 0 || j > 2) throw Error(Errc::OutOfRange, "Burnett index must be 0..2");
  return coord(j) * (speed2() + GaussPoly::constant(-5.0)) * (1.0 / std::sqrt(10.0));
}

GaussPoly burnett_B_poly(int k, int l) {
  if (k < 0 || k > 2 || l < 0 || l > 2) throw Error(Errc::OutOfRange, "Burnett index must be 0..2");
  GaussPoly p = coord(k) * coord(l);
  if (k == l) p = p + speed2() * (-1.0 / 3.0);
  return p;
}

double burnett_A(int j, const Vec3d& v) {
  if (j < 0 || j > 2) throw Error(Errc::OutOfRange, "Burnett index must be 0..2");
  return v[j] * (v.squaredNorm() - 5.0) / std::sqrt(10.0) * smu(v);
}

double burnett_B(int k, int l, const Vec3d& v) {
  if (k < 0 || k > 2 || l < 0 || l > 2) throw Error(Errc::OutOfRange, "Burnett index must be 0..2");
  return (v[k] * v[l] - (k == l ? v.squaredNorm() / 3.0 : 0.0)) * smu(v);
}

MacroFields project_P(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  const double dv3 = grid.v.cell();
  Eigen::MatrixXd X(nv, 5);
  for (std::int64_t vi = 0; vi < nv; ++vi)
    for (int k = 0; k < 5; ++k) X(vi, k) = chi(k, grid.v.v(vi));
  Eigen::Map<const Eigen::MatrixXd> F(f.data(), nx, nv);
  Eigen::MatrixXd coef = dv3 * (F * X);  // nx x 5
  MacroFields m;
  m.a = coef.col(0);
  for (int i = 0; i < 3; ++i) m.b[i] = coef.col(1 + i);
  m.c = coef.col(4);
  m.d = f - macro_part(grid, m);
  return m;
}

Eigen::VectorXd macro_part(const PhaseGrid& grid, const MacroFields& m) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  Eigen::VectorXd out(nx * nv);
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = grid.v.v(vi);
    double c0 = chi(0, v), c1 = chi(1, v), c2 = chi(2, v), c3 = chi(3, v), c4 = chi(4, v);
    out.segment(vi * nx, nx) = m.a * c0 + m.b[0] * c1 + m.b[1] * c2 + m.b[2] * c3 + m.c * c4;
  }
  return out;
}

std::string to_string(PoissonBC bc) {
  switch (bc) {
    case PoissonBC::neumann_zero: return "neumann_zero";
    case PoissonBC::mean_zero: return "mean_zero";
    case PoissonBC::tangential: return "tangential";
  }
  return "?";
}

Eigen::VectorXd slab_laplacian(const SlabGrid& xg, const Eigen::VectorXd& phi, bool dirichlet) {
  const int n = xg.n, n3 = xg.n3;
  const double ih2 = 1.0 / (xg.h() * xg.h()), ih3 = 1.0 / (xg.h3() * xg.h3());
  Eigen::VectorXd out(phi.size());
  auto w = [n](int j) { return ((j % n) + n) % n; };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n3; ++k) {
        double c = phi[xg.index(a, b, k)];
        double lat = phi[xg.index(w(a + 1), b, k)] + phi[xg.index(w(a - 1), b, k)] +
                     phi[xg.index(a, w(b + 1), k)] + phi[xg.index(a, w(b - 1), k)] - 4 * c;
        double ghost = dirichlet ? -c : c;
        double lo = k > 0 ? phi[xg.index(a, b, k - 1)] : ghost;
        double hi = k + 1 < n3 ? phi[xg.index(a, b, k + 1)] : ghost;
        out[xg.index(a, b, k)] = lat * ih2 + (lo + hi - 2 * c) * ih3;
      }
  return out;
}

Eigen::VectorXd slab_gradient(const SlabGrid& xg, const Eigen::VectorXd& phi, int axis,
                              bool dirichlet) {
  const int n = xg.n, n3 = xg.n3;
  Eigen::VectorXd out(phi.size());
  auto w = [n](int j) { return ((j % n) + n) % n; };
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n3; ++k) {
        double g;
        if (axis == 0)
          g = (phi[xg.index(w(a + 1), b, k)] - phi[xg.index(w(a - 1), b, k)]) / (2 * xg.h());
        else if (axis == 1)
          g = (phi[xg.index(a, w(b + 1), k)] - phi[xg.index(a, w(b - 1), k)]) / (2 * xg.h());
        else {
          double c = phi[xg.index(a, b, k)];
          double ghost = dirichlet ? -c : c;
          double lo = k > 0 ? phi[xg.index(a, b, k - 1)] : ghost;
          double hi = k + 1 < n3 ? phi[xg.index(a, b, k + 1)] : ghost;
          g = (hi - lo) / (2 * xg.h3());
        }
        out[xg.index(a, b, k)] = g;
      }
  return out;
}

namespace {

using cd = std::complex<double>;

double xl2(const SlabGrid& xg, const Eigen::VectorXd& f) {
  return std::sqrt(xg.h() * xg.h() * xg.h3() * f.squaredNorm());
}

double xint(const SlabGrid& xg, const Eigen::VectorXd& f) {
  return xg.h() * xg.h() * xg.h3() * pairwise_sum(f.data(), f.size());
}

Eigen::VectorXd solve_component(const SlabGrid& xg, const Eigen::VectorXd& rhs, bool dirichlet) {
  const int n = xg.n, n3 = xg.n3;
  const double ih2 = 1.0 / (xg.h() * xg.h()), ih3 = 1.0 / (xg.h3() * xg.h3());
  std::vector<cd> tw(n);
  for (int k = 0; k < n; ++k) tw[k] = std::polar(1.0, -2.0 * kPi * k / n);
  // Forward DFT over (x1, x2) per x3 layer.
  std::vector<cd> hat(std::size_t(n) * n * n3, 0.0);
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2)
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) {
          cd e = tw[(std::int64_t(k1) * a) % n] * tw[(std::int64_t(k2) * b) % n];
          for (int k = 0; k < n3; ++k) hat[xg.index(k1, k2, k)] += e * rhs[xg.index(a, b, k)];
        }
  std::vector<double> lo(n3), di(n3), up(n3);
  std::vector<cd> r(n3), cp(n3), dp(n3);
  for (int k1 = 0; k1 < n; ++k1)
    for (int k2 = 0; k2 < n; ++k2) {
      double lam = (2 - 2 * std::cos(2 * kPi * k1 / n)) * ih2 + (2 - 2 * std::cos(2 * kPi * k2 / n)) * ih2;
      for (int k = 0; k < n3; ++k) {
        lo[k] = k > 0 ? -ih3 : 0.0;
        up[k] = k + 1 < n3 ? -ih3 : 0.0;
        // Ghost closure: phi_ghost = -phi (walls at phi = 0) or +phi.
        double bnd = dirichlet ? 2 * ih3 : 0.0;
        di[k] = lam + (k > 0 ? ih3 : bnd) + (k + 1 < n3 ? ih3 : bnd);
        r[k] = hat[xg.index(k1, k2, k)];
      }
      bool singular = !dirichlet && k1 == 0 && k2 == 0;
      if (singular) {
        // Pin the first cell; the dropped equation holds by solvability.
        di[0] = 1.0;
        up[0] = 0.0;
        r[0] = 0.0;
      }
      // Thomas.
      cp[0] = up[0] / di[0];
      dp[0] = r[0] / di[0];
      for (int k = 1; k < n3; ++k) {
        double m = di[k] - lo[k] * cp[k - 1].real();
        cp[k] = up[k] / m;
        dp[k] = (r[k] - lo[k] * dp[k - 1]) / m;
      }
      for (int k = n3 - 1; k >= 0; --k) {
        cd x = dp[k] - (k + 1 < n3 ? cp[k] * hat[xg.index(k1, k2, k + 1)] : cd(0.0));
        hat[xg.index(k1, k2, k)] = x;
      }
      if (singular) {
        cd mean = 0.0;
        for (int k = 0; k < n3; ++k) mean += hat[xg.index(0, 0, k)];
        mean /= double(n3);
        for (int k = 0; k < n3; ++k) hat[xg.index(0, 0, k)] -= mean;
      }
    }
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(rhs.size());
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int k = 0; k < n3; ++k) {
        cd s = 0.0;
        for (int k1 = 0; k1 < n; ++k1)
          for (int k2 = 0; k2 < n; ++k2)
            s += std::conj(tw[(std::int64_t(k1) * a) % n] * tw[(std::int64_t(k2) * b) % n]) *
                 hat[xg.index(k1, k2, k)];
        phi[xg.index(a, b, k)] = s.real() / (double(n) * n);
      }
  return phi;
}

}  // namespace

PoissonSolution poisson_solve(const SlabGrid& xg, const std::vector<Eigen::VectorXd>& rhs,
                              PoissonBC bc) {
  const std::size_t ncomp = bc == PoissonBC::tangential ? 3 : 1;
  if (rhs.size() != ncomp) throw Error(Errc::OutOfRange, "Poisson right-hand side has the wrong number of components");
  PoissonSolution sol;
  sol.bc = bc;
  double res2 = 0.0, rhs2 = 0.0, h1sq = 0.0, g2 = 0.0;
  for (std::size_t c = 0; c < ncomp; ++c) {
    if (rhs[c].size() != xg.size()) throw Error(Errc::OutOfRange, "Poisson right-hand side size mismatch");
    const bool dirichlet = bc == PoissonBC::tangential && c == 2;
    Eigen::VectorXd r = rhs[c];
    if (!dirichlet) {
      double vol = xg.lx * xg.lx * xg.L;
      double mean = xint(xg, r) / vol;
      double l1 = xg.h() * xg.h() * xg.h3() * r.cwiseAbs().sum();
      if (bc != PoissonBC::mean_zero && std::abs(mean) * vol > 1e-6 * l1)
        throw Error(Errc::SolvabilityViolation,
                    "Neumann problem needs a mean-zero source (relative mean " +
                        sci(std::abs(mean) * vol / l1) + ")");
      r.array() -= mean;
    }
    Eigen::VectorXd phi = solve_component(xg, r, dirichlet);
    Eigen::VectorXd lap = slab_laplacian(xg, phi, dirichlet);
    res2 += std::pow(xl2(xg, lap + r), 2);
    rhs2 += std::pow(xl2(xg, r), 2);
    double gg = 0.0;
    for (int ax = 0; ax < 3; ++ax) gg += std::pow(xl2(xg, slab_gradient(xg, phi, ax, dirichlet)), 2);
    g2 += gg;
    h1sq += gg + std::pow(xl2(xg, phi), 2);
    sol.potential.push_back(std::move(phi));
  }
  sol.residual = rhs2 > 0 ? std::sqrt(res2 / rhs2) : std::sqrt(res2);
  sol.h1 = std::sqrt(h1sq);
  sol.grad_l2 = std::sqrt(g2);
  return sol;
}

std::vector<Eigen::VectorXd> time_derivative(const std::vector<double>& t,
                                             const std::vector<Eigen::VectorXd>& s) {
  const std::size_t m = s.size();
  if (t.size() != m) throw Error(Errc::OutOfRange, "time and series lengths differ");
  std::vector<Eigen::VectorXd> d(m);
  if (m < 2) {
    for (auto& e : d) e = Eigen::VectorXd::Zero(m ? s[0].size() : 0);
    return d;
  }
  if (m == 2) {
    d[0] = d[1] = (s[1] - s[0]) / (t[1] - t[0]);
    return d;
  }
  // Three-point Lagrange derivative on possibly uneven samples.
  auto three = [&](std::size_t i0, double x) {
    double x0 = t[i0], x1 = t[i0 + 1], x2 = t[i0 + 2];
    double l0 = (2 * x - x1 - x2) / ((x0 - x1) * (x0 - x2));
    double l1 = (2 * x - x0 - x2) / ((x1 - x0) * (x1 - x2));
    double l2 = (2 * x - x0 - x1) / ((x2 - x0) * (x2 - x1));
    return Eigen::VectorXd(l0 * s[i0] + l1 * s[i0 + 1] + l2 * s[i0 + 2]);
  };
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t i0 = i == 0 ? 0 : (i + 1 == m ? m - 3 : i - 1);
    d[i] = three(i0, t[i]);
  }
  return d;
}

namespace {

struct MacroState {
  MacroFields m;
  PoissonSolution pa, pb, pc;
  double drift = 0.0;
};

// Removes the mean; returns |int f|.
double remove_mean(const SlabGrid& xg, Eigen::VectorXd& f) {
  double vol = xg.lx * xg.lx * xg.L;
  double total = xint(xg, f);
  f.array() -= total / vol;
  return std::abs(total);
}

MacroState macro_state(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  MacroState s;
  s.m = project_P(grid, f);
  Eigen::VectorXd a = s.m.a, c = s.m.c, b0 = s.m.b[0], b1 = s.m.b[1];
  s.drift = std::max({remove_mean(grid.x, a), remove_mean(grid.x, c), remove_mean(grid.x, b0),
                      remove_mean(grid.x, b1)});
  s.pa = poisson_solve(grid.x, {a}, PoissonBC::neumann_zero);
  s.pc = poisson_solve(grid.x, {c}, PoissonBC::neumann_zero);
  s.pb = poisson_solve(grid.x, {b0, b1, s.m.b[2]}, PoissonBC::tangential);
  return s;
}

Eigen::VectorXd test_function(const PhaseGrid& grid, const MacroState& s) {
  const SlabGrid& xg = grid.x;
  const std::int64_t nx = xg.size(), nv = grid.v.size();
  std::array<Eigen::VectorXd, 3> ga, gc;
  std::array<std::array<Eigen::VectorXd, 3>, 3> gb;  // gb[i][j] = d_j phi_b^i
  for (int j = 0; j < 3; ++j) {
    ga[j] = slab_gradient(xg, s.pa.potential[0], j, false);
    gc[j] = slab_gradient(xg, s.pc.potential[0], j, false);
    for (int i = 0; i < 3; ++i) gb[i][j] = slab_gradient(xg, s.pb.potential[i], j, i == 2);
  }
  Eigen::VectorXd divb = gb[0][0] + gb[1][1] + gb[2][2];
  Eigen::VectorXd psi(nx * nv);
  for (std::int64_t vi = 0; vi < nv; ++vi) {
    Vec3d v = grid.v.v(vi);
    double sm = sqrt_maxwellian(v), v2 = v.squaredNorm();
    auto seg = psi.segment(vi * nx, nx);
    seg.setZero();
    for (int j = 0; j < 3; ++j) {
      seg += (v2 - 10.0) * sm * v[j] * ga[j];
      seg += (v2 - 5.0) * sm * v[j] * gc[j];
      for (int i = 0; i < 3; ++i) seg += v[i] * v[j] * sm * gb[i][j];
    }
    seg -= 0.5 * (v2 - 1.0) * sm * divb;
  }
  return psi;
}

double sigma_sq(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  double s = norms(grid, f, 0.0).sigma;
  return s * s;
}

}  // namespace

Eigen::VectorXd macro_test_function(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  return test_function(grid, macro_state(grid, f));
}

double wall_psi_c_flux(const PhaseGrid& grid, const Eigen::VectorXd& f) {
  const SlabGrid& xg = grid.x;
  const std::int64_t nx = xg.size(), nv = grid.v.size();
  MacroFields m = project_P(grid, f);
  Eigen::VectorXd c = m.c;
  remove_mean(xg, c);
  PoissonSolution pc = poisson_solve(xg, {c}, PoissonBC::neumann_zero);
  Eigen::VectorXd g1 = slab_gradient(xg, pc.potential[0], 0, false);
  Eigen::VectorXd g2 = slab_gradient(xg, pc.potential[0], 1, false);
  std::vector<double> terms;
  terms.reserve(std::size_t(2) * xg.n * xg.n * nv);
  const double w = xg.h() * xg.h() * grid.v.cell();
  for (int wall = 0; wall < 2; ++wall) {
    int k = wall ? xg.n3 - 1 : 0;
    double nrm = wall ? 1.0 : -1.0;
    for (int a = 0; a < xg.n; ++a)
      for (int b = 0; b < xg.n; ++b) {
        std::int64_t xi = xg.index(a, b, k);
        for (std::int64_t vi = 0; vi < nv; ++vi) {
          Vec3d v = grid.v.v(vi);
          // d_3 phi_c = 0 on the wall.
          double psi = (v.squaredNorm() - 5.0) * sqrt_maxwellian(v) * (v[0] * g1[xi] + v[1] * g2[xi]);
          terms.push_back(w * psi * f[vi * nx + xi] * nrm * v[2]);
        }
      }
  }
  return pairwise_sum(terms.data(), terms.size());
}

MacroControlReport macro_control_report(const PhaseGrid& grid, const std::vector<KineticField>& series,
                                        double c_fixed, double safety) {
  MacroControlReport rep;
  const std::size_t m = series.size();
  if (m == 0) return rep;
  std::vector<double> t(m), eta(m), ps(m), ms(m);
  std::vector<Eigen::VectorXd> as(m), bs(m), cs(m);
  std::vector<MacroState> st(m);
  for (std::size_t i = 0; i < m; ++i) {
    const Eigen::VectorXd& f = series[i].values;
    t[i] = series[i].time;
    st[i] = macro_state(grid, f);
    rep.mean_drift = std::max(rep.mean_drift, std::abs(st[i].drift - st[0].drift));
    rep.max_poisson_residual = std::max({rep.max_poisson_residual, st[i].pa.residual, st[i].pb.residual,
                                         st[i].pc.residual});
    eta[i] = -integrate(grid, test_function(grid, st[i]).cwiseProduct(f));
    Eigen::VectorXd pf = macro_part(grid, st[i].m);
    ps[i] = sigma_sq(grid, pf);
    ms[i] = sigma_sq(grid, st[i].m.d);
    double l2 = l2_norm(grid, f);
    MacroControlRow row;
    row.t = t[i];
    row.eta = eta[i];
    row.l2sq = l2 * l2;
    row.mean_a = xint(grid.x, st[i].m.a);
    row.mean_c = xint(grid.x, st[i].m.c);
    if (row.l2sq > 0) rep.c_eta = std::max(rep.c_eta, std::abs(eta[i]) / row.l2sq);
    rep.rows.push_back(row);
  }
  // Cumulative trapezoid integrals.
  std::vector<double> P(m, 0.0), D(m, 0.0);
  for (std::size_t i = 1; i < m; ++i) {
    P[i] = P[i - 1] + 0.5 * (t[i] - t[i - 1]) * (ps[i] + ps[i - 1]);
    D[i] = D[i - 1] + 0.5 * (t[i] - t[i - 1]) * (ms[i] + ms[i - 1]);
  }
  double need = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double lhs = P[j] - P[i], micro = D[j] - D[i], deta = eta[j] - eta[i];
      double gap = lhs - deta;
      if (micro > 0)
        need = std::max(need, gap / micro);
      else if (gap > 0)
        need = std::numeric_limits<double>::infinity();
    }
  rep.c_fit = c_fixed > 0 ? c_fixed : safety * need;
  rep.holds = true;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i + 1; j < m; ++j) {
      double lhs = P[j] - P[i];
      double rhs = eta[j] - eta[i] + rep.c_fit * (D[j] - D[i]);
      double margin = rhs - lhs;
      rep.worst_margin = std::min(rep.worst_margin, margin);
      if (!(margin >= -1e-14 * std::max(1.0, std::abs(lhs)))) rep.holds = false;
    }
  if (m < 2) rep.worst_margin = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    auto& r = rep.rows[i];
    r.lhs = P[i];
    r.micro = D[i];
    double gap = P[i] - (eta[i] - eta[0]);
    r.c_needed = D[i] > 0 ? gap / D[i] : 0.0;
    r.margin = eta[i] - eta[0] + rep.c_fit * D[i] - P[i];
  }
  // Time-derivative Poisson problems and their bound regressions.
  for (std::size_t i = 0; i < m; ++i) {
    as[i] = st[i].m.a;
    cs[i] = st[i].m.c;
    bs[i].resize(3 * grid.x.size());
    for (int k = 0; k < 3; ++k) bs[i].segment(k * grid.x.size(), grid.x.size()) = st[i].m.b[k];
  }
  if (m >= 2) {
    auto da = time_derivative(t, as), db = time_derivative(t, bs), dc = time_derivative(t, cs);
    const std::int64_t nx = grid.x.size();
    // Centred samples only; the end stencils are one-sided.
    const double tiny = 1e-8 * l2_norm(grid, series[0].values);
    for (std::size_t i = 1; i + 1 < m; ++i) {
      Eigen::VectorXd ra = da[i], rc = dc[i];
      std::vector<Eigen::VectorXd> rb(3);
      for (int k = 0; k < 3; ++k) rb[k] = db[i].segment(k * nx, nx);
      remove_mean(grid.x, ra);
      remove_mean(grid.x, rc);
      remove_mean(grid.x, rb[0]);
      remove_mean(grid.x, rb[1]);
      auto Pa = poisson_solve(grid.x, {ra}, PoissonBC::neumann_zero);
      auto Pc = poisson_solve(grid.x, {rc}, PoissonBC::neumann_zero);
      auto Pb = poisson_solve(grid.x, rb, PoissonBC::tangential);
      rep.max_poisson_residual = std::max({rep.max_poisson_residual, Pa.residual, Pb.residual, Pc.residual});
      double nb = 0.0;
      for (int k = 0; k < 3; ++k) nb += std::pow(xl2(grid.x, st[i].m.b[k]), 2);
      nb = std::sqrt(nb);
      double na = xl2(grid.x, st[i].m.a), nc = xl2(grid.x, st[i].m.c), nd = l2_norm(grid, st[i].m.d);
      if (nb > tiny) rep.c_phi_a = std::max(rep.c_phi_a, Pa.grad_l2 / nb);
      if (na + nc + nd > tiny) rep.c_phi_b = std::max(rep.c_phi_b, Pb.grad_l2 / (na + nc + nd));
      if (nb + nd > tiny) rep.c_phi_c = std::max(rep.c_phi_c, Pc.grad_l2 / (nb + nd));
    }
  }
  return rep;
}

CoercivityReport coercivity_spotcheck(const VConvolver& conv, int count, std::uint64_t seed,
                                      const std::vector<Eigen::VectorXd>& extra) {
  const VGrid& vg = conv.vgrid();
  const std::int64_t nv = vg.size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  std::vector<Eigen::VectorXd> family = extra;
  for (int s = 0; s < count; ++s) {
    // Random polynomial of degree <= 3 times sqrt(mu), plus a shifted Gaussian bump.
    std::vector<double> c(20);
    for (double& x : c) x = nd(rng);
    Vec3d u(0.5 * nd(rng), 0.5 * nd(rng), 0.5 * nd(rng));
    double amp = nd(rng);
    Eigen::VectorXd g(nv);
    for (std::int64_t vi = 0; vi < nv; ++vi) {
      Vec3d v = vg.v(vi);
      double p = 0.0;
      int idx = 0;
      for (int e1 = 0; e1 <= 3; ++e1)
        for (int e2 = 0; e1 + e2 <= 3; ++e2)
          for (int e3 = 0; e1 + e2 + e3 <= 3; ++e3)
            p += c[idx++] * std::pow(v[0], e1) * std::pow(v[1], e2) * std::pow(v[2], e3) / (1 + e1 + e2 + e3);
      g[vi] = p * sqrt_maxwellian(v) + amp * std::exp(-0.5 * (v - u).squaredNorm());
    }
    family.push_back(std::move(g));
  }
  CoercivityReport rep;
  rep.delta_min = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd X(nv, 5);
  for (std::int64_t vi = 0; vi < nv; ++vi)
    for (int k = 0; k < 5; ++k) X(vi, k) = chi(k, vg.v(vi));
  for (const auto& g : family) {
    Eigen::VectorXd coef = vg.cell() * (X.transpose() * g);
    Eigen::VectorXd micro = g - X * coef;
    double den = slice_norms(vg, micro, 0.0).sigma;
    den *= den;
    double gn = slice_norms(vg, g, 0.0).sigma;
    if (den <= 1e-10 * gn * gn || den == 0.0) {
      ++rep.excluded;
      continue;
    }
    // equal to <Lg, g> since L vanishes on the macro part; the grid residual of L
    // on the invariants would otherwise dominate
    double num = vg.cell() * apply_L(conv, micro).dot(micro);
    double q = num / den;
    rep.quotients.push_back(q);
    rep.delta_min = std::min(rep.delta_min, q);
    ++rep.samples;
  }
  if (rep.samples == 0) rep.delta_min = 0.0;
  return rep;
}

DecayReport decay_monitor(const PhaseGrid& grid, const std::vector<KineticField>& series,
                          double theta, double slack, int transient) {
  DecayReport rep;
  EnergyAccumulator acc(theta);
  for (const auto& f : series) {
    NormSuite ns = acc.push(grid, f.time, f.values);
    rep.t.push_back(f.time);
    rep.l2.push_back(ns.l2);
    rep.energy.push_back(ns.energy);
  }
  if (series.empty()) return rep;
  double e0 = rep.energy[0];
  for (double e : rep.energy) rep.energy_ratio = std::max(rep.energy_ratio, e0 > 0 ? e / e0 : 0.0);
  for (std::size_t i = std::max<std::size_t>(1, transient + 1); i < rep.l2.size(); ++i)
    rep.monotone_violation = std::max(rep.monotone_violation, rep.l2[i] - rep.l2[i - 1]);
  rep.monotone = rep.monotone_violation <= slack * std::max(rep.l2[0], 1e-300) || rep.l2[0] == 0.0;
  // Least squares slope of log |f|_2 against log(1 + t).
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int k = 0;
  for (std::size_t i = 0; i < rep.l2.size(); ++i) {
    if (rep.l2[i] <= 0) continue;
    double x = std::log1p(rep.t[i]), y = std::log(rep.l2[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++k;
  }
  double den = k * sxx - sx * sx;
  if (k >= 2 && den > 0) rep.decay_exponent = -(k * sxy - sx * sy) / den;
  return rep;
}

}  // namespace llab
