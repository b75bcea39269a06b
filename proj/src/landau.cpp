#include "llab/landau.hpp"

#include "llab/quadrature.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>

namespace llab {

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / kPi);
// int over the unit cube [-1/2, 1/2]^3 of 1/|z|.
constexpr double kCubeInvR = 2.380077363979553;

}  // namespace

RadialPair sigma_mu_eigen(double r) {
  const double c = kSqrt2OverPi;
  RadialPair out;
  if (r < 1e-2) {
    double r2 = r * r, r4 = r2 * r2;
    out.parallel = c * (2.0 / 3.0 - r2 / 5.0 + r4 / 28.0);
    out.perp = c * (2.0 / 3.0 - r2 / 15.0 + r4 / 140.0);
    return out;
  }
  double E = std::erf(r / std::sqrt(2.0));
  double p = c * std::exp(-0.5 * r * r);
  out.parallel = 2.0 * E / (r * r * r) - 2.0 * p / (r * r);
  out.perp = (1.0 - 1.0 / (r * r)) * E / r + p / (r * r);
  return out;
}

Mat3d sigma_mu(const Vec3d& v) {
  double r = v.norm();
  auto ev = sigma_mu_eigen(r);
  if (r == 0.0) return ev.parallel * Mat3d::Identity();
  Vec3d e = v / r;
  Mat3d P = e * e.transpose();
  return ev.parallel * P + ev.perp * (Mat3d::Identity() - P);
}

Vec3d sigma_mu_div(const Vec3d& v) {
  // d_i sigma^{ij} = d_j Laplacian(Psi) with Laplacian(Psi) = 2 erf(r/sqrt2)/r.
  const double c = kSqrt2OverPi;
  double r = v.norm();
  if (r < 1e-2) return 2.0 * c * (-1.0 / 3.0 + r * r / 10.0) * v;
  double E = std::erf(r / std::sqrt(2.0));
  double p = c * std::exp(-0.5 * r * r);
  double dr = 2.0 * p / r - 2.0 * E / (r * r);
  return dr / r * v;
}

double sigma_mu_vec_div(const Vec3d& v) {
  auto ev = sigma_mu_eigen(v.norm());
  return sigma_mu_div(v).dot(v) + ev.parallel + 2.0 * ev.perp;
}

SphereRule SphereRule::half() const {
  SphereRule h = *this;
  h.radial_order = std::max(2, radial_order / 2);
  h.n_theta = std::max(2, n_theta / 2);
  h.n_phi = std::max(4, n_phi / 2);
  return h;
}

namespace {

// Calls body(r, omega, w) with w the full product weight of dr domega. The
// pole points at v so that mass concentrated near the origin sits in a
// narrow polar cap when |v| is large.
template <class Body>
void sphere_walk(const Vec3d& v, const SphereRule& rule, Body&& body) {
  const double R = v.norm();
  const double rmax = rule.rmax + R;
  const double width = (rule.rmax - rule.r0) / rule.panels;
  std::vector<std::pair<double, double>> rsegs{{0.0, rule.r0}};
  int np = std::max(1, static_cast<int>(std::ceil((rmax - rule.r0) / width)));
  double step = (rmax - rule.r0) / np;
  for (int p = 0; p < np; ++p) rsegs.push_back({rule.r0 + p * step, rule.r0 + (p + 1) * step});

  Vec3d e3 = R > 0.5 ? Vec3d(v / R) : Vec3d(0, 0, 1);
  Vec3d e1 = std::abs(e3[0]) < 0.9 ? Vec3d(1, 0, 0) : Vec3d(0, 1, 0);
  e1 = (e1 - e1.dot(e3) * e3).normalized();
  Vec3d e2 = e3.cross(e1);

  std::vector<std::pair<double, double>> tsegs;
  double t1 = R > 0.5 ? std::min(kPi / 2, 6.0 / R) : kPi;
  if (t1 < kPi) {
    tsegs.push_back({0.0, t1 / 3});
    tsegs.push_back({t1 / 3, t1});
    tsegs.push_back({t1, kPi});
  } else {
    tsegs.push_back({0.0, kPi});
  }
  std::vector<Vec3d> om;
  std::vector<double> ow;
  for (const auto& ts : tsegs) {
    Rule1d gt = gauss_legendre(rule.n_theta, ts.first, ts.second);
    for (int a = 0; a < rule.n_theta; ++a) {
      double th = gt.x[a], st = std::sin(th), ct = std::cos(th);
      for (int b = 0; b < rule.n_phi; ++b) {
        double ph = 2.0 * kPi * b / rule.n_phi;
        om.push_back(st * std::cos(ph) * e1 + st * std::sin(ph) * e2 + ct * e3);
        ow.push_back(gt.w[a] * st * 2.0 * kPi / rule.n_phi);
      }
    }
  }
  for (const auto& sg : rsegs) {
    Rule1d rr = gauss_legendre(rule.radial_order, sg.first, sg.second);
    for (int k = 0; k < rule.radial_order; ++k)
      for (std::size_t m = 0; m < om.size(); ++m) body(rr.x[k], om[m], rr.w[k] * ow[m]);
  }
}

double mat_rel_diff(const Mat3d& a, const Mat3d& b) {
  double s = std::max(a.norm(), 1e-300);
  return (a - b).norm() / s;
}

}  // namespace

std::pair<Mat3d, Vec3d> convolve_sphere(const std::function<double(const Vec3d&)>& u,
                                        const Vec3d& v, const SphereRule& rule) {
  Mat3d M = Mat3d::Zero();
  Vec3d E = Vec3d::Zero();
  sphere_walk(v, rule, [&](double r, const Vec3d& w, double wt) {
    double val = u(v - r * w) * wt;
    if (val == 0.0) return;
    // phi(z) r^2 = r (I - w w^T); z/|z|^3 r^2 = w.
    M += (r * val) * (Mat3d::Identity() - w * w.transpose());
    E += val * w;
  });
  return {M, E};
}

std::pair<Mat3d, Vec3d> convolve_sphere_checked(const std::function<double(const Vec3d&)>& u,
                                                const Vec3d& v, const SphereRule& rule,
                                                double rel_tol) {
  auto hi = convolve_sphere(u, v, rule);
  auto lo = convolve_sphere(u, v, rule.half());
  double scale = std::max(hi.first.norm(), 1e-300);
  double d = std::max(mat_rel_diff(hi.first, lo.first), (hi.second - lo.second).norm() / scale);
  if (d > rel_tol)
    throw Error(Errc::QuadratureFail, "two-resolution convolution mismatch " + sci(d));
  return hi;
}

double BackgroundG::sup_bound() const {
  double s = 0.0;
  for (const auto& m : modes) s += std::abs(m.amp);
  return s;
}

double BackgroundG::spatial(std::size_t k, const Vec3d& x) const {
  const auto& m = modes[k];
  return m.amp * std::cos(m.kx.dot(x) + m.phase);
}

double BackgroundG::profile(std::size_t k, const Vec3d& v) const {
  return std::exp(-0.25 * (v - modes[k].u).squaredNorm());
}

Vec3d BackgroundG::profile_grad(std::size_t k, const Vec3d& v) const {
  return -0.5 * (v - modes[k].u) * profile(k, v);
}

double BackgroundG::value(const Vec3d& x, const Vec3d& v) const {
  double s = 0.0;
  for (std::size_t k = 0; k < modes.size(); ++k) s += spatial(k, x) * profile(k, v);
  return s;
}

Vec3d BackgroundG::grad_v(const Vec3d& x, const Vec3d& v) const {
  Vec3d s = Vec3d::Zero();
  for (std::size_t k = 0; k < modes.size(); ++k) s += spatial(k, x) * profile_grad(k, v);
  return s;
}

Vec3d weight_log_grad(const Vec3d& v, double theta) {
  double r = v.norm();
  if (theta == 0.0 || r == 0.0) return Vec3d::Zero();
  return theta / ((1.0 + r) * r) * v;
}

namespace {

struct ModeMoments {
  Mat3d sigma = Mat3d::Zero();
  Vec3d div = Vec3d::Zero();
  Vec3d alpha = Vec3d::Zero();
  double kappa = 0.0;
};

// All convolutions of one background mode at v in a single spherical walk.
ModeMoments mode_moments(const BackgroundG& g, std::size_t k, const Vec3d& v,
                         const SphereRule& rule) {
  ModeMoments m;
  sphere_walk(v, rule, [&](double r, const Vec3d& om, double wt) {
    Vec3d w = v - r * om;
    if (w.squaredNorm() > 100.0) return;
    double sm = sqrt_maxwellian(w);
    double h = sm * g.profile(k, w);
    Vec3d dg = sm * g.profile_grad(k, w);
    Mat3d P = r * (Mat3d::Identity() - om * om.transpose());
    m.sigma += (wt * h) * P;
    m.div -= (2.0 * wt * h) * om;
    m.alpha -= wt * (P * (0.5 * w * h + dg));
    m.kappa += wt * (2.0 * om.dot(dg) + 0.5 * w.dot(P * dg));
  });
  return m;
}

ModeMoments checked_moments(const BackgroundG& g, std::size_t k, const Vec3d& v,
                            const SphereRule& rule) {
  ModeMoments hi = mode_moments(g, k, v, rule);
  ModeMoments lo = mode_moments(g, k, v, rule.half());
  double scale = hi.sigma.norm() + 1e-300;
  double d = std::max({(hi.sigma - lo.sigma).norm() / scale,
                       (hi.alpha - lo.alpha).norm() / (hi.alpha.norm() + scale),
                       std::abs(hi.kappa - lo.kappa) / (std::abs(hi.kappa) + scale)});
  if (d > 1e-4) throw Error(Errc::QuadratureFail, "two-resolution mismatch " + sci(d));
  return hi;
}

}  // namespace

Mat3d sigma_of(const BackgroundG& g, const Vec3d& x, const Vec3d& v, const SphereRule& rule) {
  Mat3d s = sigma_mu(v);
  for (std::size_t k = 0; k < g.modes.size(); ++k)
    s += g.spatial(k, x) * checked_moments(g, k, v, rule).sigma;
  return 0.5 * (s + s.transpose());
}

Vec3d a_g_of(const BackgroundG& g, const Vec3d& x, const Vec3d& v, double theta,
             const SphereRule& rule) {
  Vec3d a = Vec3d::Zero();
  for (std::size_t k = 0; k < g.modes.size(); ++k)
    a += g.spatial(k, x) * checked_moments(g, k, v, rule).alpha;
  if (theta != 0.0) a -= 2.0 * sigma_of(g, x, v, rule) * weight_log_grad(v, theta);
  return a;
}

CollisionCoefficients::CollisionCoefficients(const VGrid& vg, const BackgroundG& g, double theta,
                                             const SphereRule& rule)
    : vg_(vg), g_(g), theta_(theta) {
  std::int64_t nv = vg.size();
  sig_mu_.resize(nv);
  k0_.resize(nv);
  for (std::int64_t i = 0; i < nv; ++i) {
    Vec3d v = vg.v(i);
    sig_mu_[i] = sigma_mu(v);
    k0_[i] = 0.5 * sigma_mu_vec_div(v) - 0.25 * v.dot(sig_mu_[i] * v);
  }
  std::size_t nm = g.modes.size();
  sig_k_.assign(nm, std::vector<Mat3d>(nv));
  div_k_.assign(nm, std::vector<Vec3d>(nv));
  alpha_k_.assign(nm, std::vector<Vec3d>(nv));
  kappa_k_.assign(nm, std::vector<double>(nv));
  SphereRule coarse = rule.half();
  for (std::size_t k = 0; k < nm; ++k) {
    std::vector<double> worst(nv, 0.0);
    parallel_for(nv, [&](std::int64_t i) {
      Vec3d v = vg.v(i);
      ModeMoments hi = mode_moments(g, k, v, rule);
      ModeMoments lo = mode_moments(g, k, v, coarse);
      double scale = hi.sigma.norm() + 1e-300;
      worst[i] = std::max({(hi.sigma - lo.sigma).norm() / scale,
                           (hi.alpha - lo.alpha).norm() / (hi.alpha.norm() + scale),
                           std::abs(hi.kappa - lo.kappa) / (std::abs(hi.kappa) + scale)});
      sig_k_[k][i] = 0.5 * (hi.sigma + hi.sigma.transpose());
      div_k_[k][i] = hi.div;
      alpha_k_[k][i] = hi.alpha;
      kappa_k_[k][i] = hi.kappa;
    });
    double w = *std::max_element(worst.begin(), worst.end());
    if (w > 1e-4)
      throw Error(Errc::QuadratureFail, "two-resolution coefficient mismatch " + sci(w));
  }
}

Mat3d CollisionCoefficients::sigma_G(const Vec3d& x, std::int64_t vi) const {
  Mat3d s = sig_mu_[vi];
  for (std::size_t k = 0; k < sig_k_.size(); ++k) s += g_.spatial(k, x) * sig_k_[k][vi];
  return 0.5 * (s + s.transpose());
}

Vec3d CollisionCoefficients::a_g(const Vec3d& x, std::int64_t vi) const {
  Vec3d a = Vec3d::Zero();
  for (std::size_t k = 0; k < alpha_k_.size(); ++k) a += g_.spatial(k, x) * alpha_k_[k][vi];
  if (theta_ != 0.0) a -= 2.0 * sigma_G(x, vi) * weight_log_grad(vg_.v(vi), theta_);
  return a;
}

Vec3d CollisionCoefficients::sigma_G_div(const Vec3d& x, std::int64_t vi) const {
  Vec3d d = sigma_mu_div(vg_.v(vi));
  for (std::size_t k = 0; k < div_k_.size(); ++k) d += g_.spatial(k, x) * div_k_[k][vi];
  return d;
}

double CollisionCoefficients::kbar_g_coef(const Vec3d& x, std::int64_t vi) const {
  double s = 0.0;
  for (std::size_t k = 0; k < kappa_k_.size(); ++k) s += g_.spatial(k, x) * kappa_k_[k][vi];
  return s;
}

// ---------------------------------------------------------------------------
// FFT convolution on the velocity grid.

struct VConvolver::Impl {
  int n = 0, M = 0;
  double h = 0.0;
  mutable Eigen::FFT<double> fft;
  std::array<std::vector<std::complex<double>>, 6> phi_hat;
  std::array<std::vector<std::complex<double>>, 3> coul_hat;

  std::size_t at(int a, int b, int c) const { return (std::size_t(a) * M + b) * M + c; }

  void transform(std::vector<std::complex<double>>& data, bool inverse) const {
    std::vector<std::complex<double>> line(M), out(M);
    for (int axis = 0; axis < 3; ++axis) {
      for (int p = 0; p < M; ++p)
        for (int q = 0; q < M; ++q) {
          for (int s = 0; s < M; ++s) {
            std::size_t id = axis == 0 ? at(s, p, q) : axis == 1 ? at(p, s, q) : at(p, q, s);
            line[s] = data[id];
          }
          if (inverse)
            fft.inv(out, line);
          else
            fft.fwd(out, line);
          for (int s = 0; s < M; ++s) {
            std::size_t id = axis == 0 ? at(s, p, q) : axis == 1 ? at(p, s, q) : at(p, q, s);
            data[id] = out[s];
          }
        }
    }
  }

  std::vector<std::complex<double>> forward(const Eigen::VectorXd& u) const {
    std::vector<std::complex<double>> d(std::size_t(M) * M * M, 0.0);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) d[at(a, b, c)] = u[(std::int64_t(a) * n + b) * n + c];
    transform(d, false);
    return d;
  }

  Eigen::VectorXd back(const std::vector<std::complex<double>>& uh,
                       const std::vector<std::complex<double>>& kh) const {
    std::vector<std::complex<double>> d(uh.size());
    for (std::size_t i = 0; i < d.size(); ++i) d[i] = uh[i] * kh[i];
    transform(d, true);
    Eigen::VectorXd out(std::int64_t(n) * n * n);
    for (int a = 0; a < n; ++a)
      for (int b = 0; b < n; ++b)
        for (int c = 0; c < n; ++c) out[(std::int64_t(a) * n + b) * n + c] = d[at(a, b, c)].real();
    return out;
  }
};

VConvolver::VConvolver(const VGrid& vg) : vg_(vg), impl_(std::make_unique<Impl>()) {
  auto& I = *impl_;
  I.n = vg.n;
  I.M = 2 * vg.n;
  I.h = vg.h();
  const double h = I.h, h3 = h * h * h;
  std::size_t total = std::size_t(I.M) * I.M * I.M;
  for (auto& k : I.phi_hat) k.assign(total, 0.0);
  for (auto& k : I.coul_hat) k.assign(total, 0.0);
  for (int a = -(I.n - 1); a <= I.n - 1; ++a)
    for (int b = -(I.n - 1); b <= I.n - 1; ++b)
      for (int c = -(I.n - 1); c <= I.n - 1; ++c) {
        std::size_t id = I.at((a + I.M) % I.M, (b + I.M) % I.M, (c + I.M) % I.M);
        Vec3d z(a * h, b * h, c * h);
        Mat3d P;
        Vec3d E;
        if (a == 0 && b == 0 && c == 0) {
          // Cell average of phi over the self cell; the odd kernel averages to 0.
          P = (2.0 / 3.0) * kCubeInvR / h * Mat3d::Identity();
          E.setZero();
        } else {
          P = phi_kernel(z);
          double r = z.norm();
          E = z / (r * r * r);
        }
        for (int i = 0; i < 3; ++i)
          for (int j = i; j < 3; ++j) I.phi_hat[sym_index(i, j)][id] = P(i, j) * h3;
        for (int i = 0; i < 3; ++i) I.coul_hat[i][id] = E[i] * h3;
      }
  for (auto& k : I.phi_hat) I.transform(k, false);
  for (auto& k : I.coul_hat) I.transform(k, false);
}

VConvolver::~VConvolver() = default;

std::array<Eigen::VectorXd, 6> VConvolver::phi(const Eigen::VectorXd& u) const {
  auto uh = impl_->forward(u);
  std::array<Eigen::VectorXd, 6> out;
  for (int c = 0; c < 6; ++c) out[c] = impl_->back(uh, impl_->phi_hat[c]);
  return out;
}

void VConvolver::landau_flux(const Eigen::VectorXd& h, const std::array<Eigen::VectorXd, 3>& vh,
                             std::array<Eigen::VectorXd, 3>& c, Eigen::VectorXd& d) const {
  const auto& I = *impl_;
  auto hh = I.forward(h);
  std::array<std::vector<std::complex<double>>, 3> vhh;
  for (int j = 0; j < 3; ++j) vhh[j] = I.forward(vh[j]);
  const std::size_t total = hh.size();
  std::vector<std::complex<double>> acc(total), one(total, 1.0);
  for (int i = 0; i < 3; ++i) {
    for (std::size_t k = 0; k < total; ++k) {
      std::complex<double> s = -2.0 * I.coul_hat[i][k] * hh[k];
      for (int j = 0; j < 3; ++j) s += I.phi_hat[sym_index(i, j)][k] * vhh[j][k];
      acc[k] = s;
    }
    c[i] = I.back(acc, one);
  }
  for (std::size_t k = 0; k < total; ++k)
    acc[k] = I.coul_hat[0][k] * vhh[0][k] + I.coul_hat[1][k] * vhh[1][k] + I.coul_hat[2][k] * vhh[2][k];
  d = I.back(acc, one);
}

std::array<Eigen::VectorXd, 3> VConvolver::coulomb(const Eigen::VectorXd& u) const {
  auto uh = impl_->forward(u);
  std::array<Eigen::VectorXd, 3> out;
  for (int c = 0; c < 3; ++c) out[c] = impl_->back(uh, impl_->coul_hat[c]);
  return out;
}

Eigen::VectorXd dv(const VGrid& vg, const Eigen::VectorXd& f, int axis) {
  const int n = vg.n;
  const double h = vg.h();
  Eigen::VectorXd out(f.size());
  std::int64_t stride = axis == 0 ? std::int64_t(n) * n : axis == 1 ? n : 1;
  for (std::int64_t id = 0; id < f.size(); ++id) {
    int i = vg.multi(id)[axis];
    if (i == 0)
      out[id] = (-3 * f[id] + 4 * f[id + stride] - f[id + 2 * stride]) / (2 * h);
    else if (i == n - 1)
      out[id] = (3 * f[id] - 4 * f[id - stride] + f[id - 2 * stride]) / (2 * h);
    else
      out[id] = (f[id + stride] - f[id - stride]) / (2 * h);
  }
  return out;
}

namespace {

Eigen::VectorXd sample(const VGrid& vg, const std::function<double(const Vec3d&)>& fn) {
  Eigen::VectorXd out(vg.size());
  for (std::int64_t i = 0; i < vg.size(); ++i) out[i] = fn(vg.v(i));
  return out;
}

Eigen::VectorXd vcomp(const VGrid& vg, int j) {
  return sample(vg, [j](const Vec3d& v) { return v[j]; });
}

// sum_ij d_i (M^{ij} d_j f) with M packed symmetric.
Eigen::VectorXd div_flux(const VGrid& vg, const std::array<Eigen::VectorXd, 6>& M,
                         const Eigen::VectorXd& f) {
  std::array<Eigen::VectorXd, 3> g{dv(vg, f, 0), dv(vg, f, 1), dv(vg, f, 2)};
  Eigen::VectorXd out = Eigen::VectorXd::Zero(f.size());
  for (int i = 0; i < 3; ++i) {
    Eigen::VectorXd q = Eigen::VectorXd::Zero(f.size());
    for (int j = 0; j < 3; ++j) q.array() += M[sym_index(i, j)].array() * g[j].array();
    out += dv(vg, q, i);
  }
  return out;
}

}  // namespace

Eigen::VectorXd apply_K(const VConvolver& conv, const Eigen::VectorXd& f) {
  const VGrid& vg = conv.vgrid();
  Eigen::VectorXd sm = sample(vg, [](const Vec3d& v) { return sqrt_maxwellian(v); });
  Eigen::VectorXd h = sm.cwiseProduct(f);
  std::array<Eigen::VectorXd, 3> vj{vcomp(vg, 0), vcomp(vg, 1), vcomp(vg, 2)};
  std::array<Eigen::VectorXd, 3> vh, c;
  for (int j = 0; j < 3; ++j) vh[j] = vj[j].cwiseProduct(h);
  // mu^{1/2} (d_j f + v_j f / 2) = d_j h + v_j h, so
  // c^i = -2 (z_i/|z|^3)*h + phi^{ij}*(v_j h)
  // div c = -8 pi h - 2 sum_j (z_j/|z|^3)*(v_j h)
  Eigen::VectorXd d;
  conv.landau_flux(h, vh, c, d);
  Eigen::VectorXd divc = -8.0 * kPi * h - 2.0 * d;
  Eigen::VectorXd vc = Eigen::VectorXd::Zero(f.size());
  for (int i = 0; i < 3; ++i) vc += vj[i].cwiseProduct(c[i]);
  return -sm.cwiseProduct(divc - vc);
}

Eigen::VectorXd apply_A(const VGrid& vg, const Eigen::VectorXd& f) {
  std::array<Eigen::VectorXd, 6> S;
  for (auto& s : S) s.resize(vg.size());
  Eigen::VectorXd zero_order(vg.size());
  for (std::int64_t id = 0; id < vg.size(); ++id) {
    Vec3d v = vg.v(id);
    Mat3d s = sigma_mu(v);
    for (int i = 0; i < 3; ++i)
      for (int j = i; j < 3; ++j) S[sym_index(i, j)][id] = s(i, j);
    zero_order[id] = 0.5 * sigma_mu_vec_div(v) - 0.25 * v.dot(s * v);
  }
  return div_flux(vg, S, f) + zero_order.cwiseProduct(f);
}

Eigen::VectorXd apply_L(const VConvolver& conv, const Eigen::VectorXd& f) {
  return -apply_A(conv.vgrid(), f) - apply_K(conv, f);
}

namespace {

// Terms of Gamma and K-bar_g that depend on g, expanded so both use the same
// discrete pieces.
struct GTerms {
  std::array<Eigen::VectorXd, 6> phi_g;    // phi * (mu^{1/2} g)
  std::array<Eigen::VectorXd, 3> drift;    // phi^{ij} * (v_j mu^{1/2} g) / 2 + phi^{ij} * (mu^{1/2} d_j g)
  Eigen::VectorXd zeroth;                  // -d_i{phi^{ij} * [mu^{1/2} d_j g]} + phi^{ij} * [v_i mu^{1/2} d_j g] / 2
};

GTerms g_terms(const VConvolver& conv, const Eigen::VectorXd& g) {
  const VGrid& vg = conv.vgrid();
  Eigen::VectorXd sm = sample(vg, [](const Vec3d& v) { return sqrt_maxwellian(v); });
  GTerms t;
  Eigen::VectorXd hg = sm.cwiseProduct(g);
  t.phi_g = conv.phi(hg);
  for (auto& d : t.drift) d = Eigen::VectorXd::Zero(g.size());
  t.zeroth = Eigen::VectorXd::Zero(g.size());
  for (int j = 0; j < 3; ++j) {
    Eigen::VectorXd vj = vcomp(vg, j);
    Eigen::VectorXd dg = sm.cwiseProduct(dv(vg, g, j));
    auto Pv = conv.phi(vj.cwiseProduct(hg));
    auto Pd = conv.phi(dg);
    for (int i = 0; i < 3; ++i) t.drift[i] += 0.5 * Pv[sym_index(i, j)] + Pd[sym_index(i, j)];
    // (d_i phi^{ij}) * h = -2 (z_j/|z|^3) * h
    t.zeroth += 2.0 * conv.coulomb(dg)[j];
    for (int i = 0; i < 3; ++i) {
      Eigen::VectorXd vi = vcomp(vg, i);
      t.zeroth += 0.5 * conv.phi(vi.cwiseProduct(dg))[sym_index(i, j)];
    }
  }
  return t;
}

}  // namespace

Eigen::VectorXd gamma_bilinear(const VConvolver& conv, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& f) {
  const VGrid& vg = conv.vgrid();
  GTerms t = g_terms(conv, g);
  Eigen::VectorXd out = div_flux(vg, t.phi_g, f);
  for (int i = 0; i < 3; ++i) out -= t.drift[i].cwiseProduct(dv(vg, f, i));
  out += t.zeroth.cwiseProduct(f);
  return out;
}

Eigen::VectorXd apply_full(const VConvolver& conv, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& f) {
  const VGrid& vg = conv.vgrid();
  Eigen::VectorXd mu = sample(vg, [](const Vec3d& v) { return maxwellian(v); });
  Eigen::VectorXd sm = sample(vg, [](const Vec3d& v) { return sqrt_maxwellian(v); });
  auto sigG = conv.phi(mu + sm.cwiseProduct(g));
  GTerms t = g_terms(conv, g);
  Eigen::VectorXd Abar = div_flux(vg, sigG, f);
  for (int i = 0; i < 3; ++i) Abar -= t.drift[i].cwiseProduct(dv(vg, f, i));
  auto sig0 = conv.phi(mu);
  // K-bar_0 f = K f + (A f - div(sigma grad f)), with the FFT sigma so that the
  // g = 0 parts cancel exactly against A-bar_0.
  Eigen::VectorXd Kbar0 = apply_K(conv, f) + apply_A(vg, f) - div_flux(vg, sig0, f);
  return Abar + Kbar0 + t.zeroth.cwiseProduct(f);
}

KineticField kbar_apply(const PhaseGrid& grid, const CollisionCoefficients& coeffs,
                        const VConvolver& conv, const KineticField& f, double kcoef) {
  KineticField out(grid.size(), f.time);
  out.theta = coeffs.theta();
  if (kcoef == 0.0) return out;
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  const double th = coeffs.theta();
  std::vector<Eigen::VectorXd> slices(nx);
  parallel_for(nx, [&](std::int64_t xi) {
    Eigen::VectorXd s(nv);
    for (std::int64_t vi = 0; vi < nv; ++vi) s[vi] = f.values[vi * nx + xi];
    Eigen::VectorXd k = apply_K(conv, s);
    Vec3d x = grid.x.x(xi);
    for (std::int64_t vi = 0; vi < nv; ++vi) {
      Vec3d v = grid.v.v(vi);
      double val = k[vi] + (coeffs.kbar_0_coef(vi) + coeffs.kbar_g_coef(x, vi)) * s[vi];
      if (th != 0.0) {
        double r = v.norm(), w = 1.0 + r, wt = std::pow(w, th);
        double extra = 0.0;
        if (r > 0.0) {
          Mat3d sg = coeffs.sigma_G(x, vi);
          Vec3d e = v / r;
          Vec3d lg = weight_log_grad(v, th);
          Mat3d hess = th * (th - 1.0) / (w * w) * e * e.transpose() +
                       th / (w * r) * (Mat3d::Identity() - e * e.transpose());
          double t1 = 2.0 * lg.dot(sg * lg);
          double t2 = (hess.cwiseProduct(sg)).sum();
          double t3 = lg.dot(coeffs.sigma_G_div(x, vi));
          double t4 = lg.dot(coeffs.a_g(x, vi));
          extra = t1 - t2 - t3 - t4;
        }
        val = wt * val + extra * wt * s[vi];
      }
      s[vi] = kcoef * val;
    }
    slices[xi] = std::move(s);
  });
  for (std::int64_t xi = 0; xi < nx; ++xi)
    for (std::int64_t vi = 0; vi < nv; ++vi) out.values[vi * nx + xi] = slices[xi][vi];
  return out;
}

Eigen::MatrixXd kbar_matrix(const CollisionCoefficients& coeffs, const VConvolver& conv) {
  if (!coeffs.background().zero() || coeffs.theta() != 0.0)
    throw Error(Errc::ConfigError, "dense K-bar needs g = 0 and theta = 0");
  const std::int64_t nv = conv.vgrid().size();
  Eigen::MatrixXd M(nv, nv);
  parallel_for(nv, [&](std::int64_t j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(nv);
    e[j] = 1.0;
    Eigen::VectorXd col = apply_K(conv, e);
    col[j] += coeffs.kbar_0_coef(j);
    M.col(j) = col;
  });
  return M;
}

Eigen::VectorXd apply_velocity_matrix(const Eigen::MatrixXd& M, std::int64_t nx,
                                      const Eigen::VectorXd& f) {
  const std::int64_t nv = M.rows();
  if (f.size() != nx * nv) throw Error(Errc::OutOfRange, "field size does not match the velocity matrix");
  Eigen::VectorXd out(f.size());
  Eigen::Map<const Eigen::MatrixXd> F(f.data(), nx, nv);
  Eigen::Map<Eigen::MatrixXd> O(out.data(), nx, nv);
  O.noalias() = F * M.transpose();
  return out;
}

double chi(int k, const Vec3d& v) {
  double s = sqrt_maxwellian(v);
  switch (k) {
    case 0: return s;
    case 1: case 2: case 3: return v[k - 1] * s;
    case 4: return (v.squaredNorm() - 3.0) / std::sqrt(6.0) * s;
    default: throw Error(Errc::OutOfRange, "collision invariant index must be 0..4");
  }
}

std::array<double, 5> collision_invariant_residual(const PhaseGrid& grid, const VConvolver& conv,
                                                   const Eigen::VectorXd& g,
                                                   const Eigen::VectorXd& f) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  std::vector<std::array<double, 5>> per_x(nx);
  parallel_for(nx, [&](std::int64_t xi) {
    Eigen::VectorXd gs(nv), fs(nv);
    for (std::int64_t vi = 0; vi < nv; ++vi) {
      gs[vi] = g.size() ? g[vi * nx + xi] : 0.0;
      fs[vi] = f[vi * nx + xi];
    }
    Eigen::VectorXd r = gamma_bilinear(conv, gs, fs) - apply_L(conv, fs);
    std::array<double, 5> acc{};
    std::vector<double> tmp(nv);
    for (int k = 0; k < 5; ++k) {
      for (std::int64_t vi = 0; vi < nv; ++vi) tmp[vi] = r[vi] * chi(k, grid.v.v(vi));
      acc[k] = grid.v.cell() * pairwise_sum(tmp.data(), tmp.size()) * grid.x.weight(xi);
    }
    per_x[xi] = acc;
  });
  std::array<double, 5> out{};
  std::vector<double> tmp(nx);
  for (int k = 0; k < 5; ++k) {
    for (std::int64_t xi = 0; xi < nx; ++xi) tmp[xi] = per_x[xi][k];
    out[k] = pairwise_sum(tmp.data(), tmp.size());
  }
  return out;
}

namespace {

// Per velocity node: w^{2 theta}, and the sigma-norm density of a slice.
Eigen::VectorXd sigma_density(const VGrid& vg, const Eigen::VectorXd& f, double theta) {
  std::array<Eigen::VectorXd, 3> g{dv(vg, f, 0), dv(vg, f, 1), dv(vg, f, 2)};
  Eigen::VectorXd d(f.size());
  for (std::int64_t id = 0; id < f.size(); ++id) {
    Vec3d v = vg.v(id);
    Mat3d s = sigma_mu(v);
    Vec3d gr(g[0][id], g[1][id], g[2][id]);
    double w2 = std::pow(1.0 + v.norm(), 2.0 * theta);
    d[id] = w2 * (gr.dot(s * gr) + v.dot(s * v) * f[id] * f[id]);
  }
  return d;
}

}  // namespace

NormSuite slice_norms(const VGrid& vg, const Eigen::VectorXd& f, double theta) {
  NormSuite ns;
  ns.theta = theta;
  std::vector<double> l2(f.size());
  for (std::int64_t id = 0; id < f.size(); ++id) {
    double w = std::pow(1.0 + vg.v(id).norm(), theta);
    l2[id] = w * w * f[id] * f[id];
    ns.linf = std::max(ns.linf, w * std::abs(f[id]));
  }
  ns.l2 = std::sqrt(vg.cell() * pairwise_sum(l2.data(), l2.size()));
  Eigen::VectorXd sd = sigma_density(vg, f, theta);
  ns.sigma = std::sqrt(vg.cell() * pairwise_sum(sd.data(), sd.size()));
  ns.energy = ns.l2 * ns.l2;
  return ns;
}

NormSuite norms(const PhaseGrid& grid, const Eigen::VectorXd& f, double theta) {
  const std::int64_t nx = grid.x.size(), nv = grid.v.size();
  std::vector<double> l2(nx), sg(nx), li(nx);
  parallel_for(nx, [&](std::int64_t xi) {
    Eigen::VectorXd s(nv);
    for (std::int64_t vi = 0; vi < nv; ++vi) s[vi] = f[vi * nx + xi];
    NormSuite n = slice_norms(grid.v, s, theta);
    double w = grid.x.weight(xi);
    l2[xi] = w * n.l2 * n.l2;
    sg[xi] = w * n.sigma * n.sigma;
    li[xi] = n.linf;
  });
  NormSuite ns;
  ns.theta = theta;
  ns.l2 = std::sqrt(pairwise_sum(l2.data(), l2.size()));
  ns.sigma = std::sqrt(pairwise_sum(sg.data(), sg.size()));
  ns.linf = nx ? *std::max_element(li.begin(), li.end()) : 0.0;
  ns.energy = ns.l2 * ns.l2;
  return ns;
}

NormSuite EnergyAccumulator::push(const PhaseGrid& grid, double t, const Eigen::VectorXd& f) {
  NormSuite ns = norms(grid, f, theta_);
  double s2 = ns.sigma * ns.sigma;
  if (started_) integral_ += 0.5 * (t - last_t_) * (s2 + last_sig2_);
  started_ = true;
  last_t_ = t;
  last_sig2_ = s2;
  ns.dissipation = integral_;
  ns.energy = ns.l2 * ns.l2 + integral_;
  return ns;
}

}  // namespace llab
