#pragma once

#include "llab/common.hpp"
#include "llab/grid.hpp"

#include <array>
#include <complex>
#include <memory>
#include <vector>

namespace llab {

inline double maxwellian(const Vec3d& v) {
  return std::pow(2.0 * kPi, -1.5) * std::exp(-0.5 * v.squaredNorm());
}
inline double sqrt_maxwellian(const Vec3d& v) {
  return std::pow(2.0 * kPi, -0.75) * std::exp(-0.25 * v.squaredNorm());
}

/// (I - z z^T / |z|^2) / |z|.
template <class Derived>
Mat3<typename Derived::Scalar> phi_kernel(const Eigen::MatrixBase<Derived>& z) {
  using S = typename Derived::Scalar;
  S r = z.norm();
  if (r == S(0)) throw Error(Errc::SingularPoint, "phi kernel at z = 0");
  Vec3<S> e = z / r;
  return (Mat3<S>::Identity() - e * e.transpose()) / r;
}

/// Eigenvalues of sigma_mu(v): along v and across v.
struct RadialPair {
  double parallel = 0.0;
  double perp = 0.0;
};
RadialPair sigma_mu_eigen(double r);

/// sigma_mu(v) = phi * mu in closed form.
Mat3d sigma_mu(const Vec3d& v);
/// Column divergence d_i sigma_mu^{ij}.
Vec3d sigma_mu_div(const Vec3d& v);
/// d_i (sigma^{ij} v_j).
double sigma_mu_vec_div(const Vec3d& v);

/// Spherical product rule for convolutions centred at v: radial Gauss-Legendre
/// panels with a near panel [0, r0], Gauss-Legendre polar panels about the
/// direction of v, trapezoid in the azimuth. rmax is added to |v|.
struct SphereRule {
  int radial_order = 12;
  int panels = 6;
  double r0 = 0.5;
  double rmax = 10.0;
  int n_theta = 16;
  int n_phi = 24;

  SphereRule half() const;
};

/// Integrates K(r, omega) u(v - r omega) r^2 dr domega for the kernels used here:
/// out.first  = int phi(z) u(v - z) dz
/// out.second = int z/|z|^3 u(v - z) dz
std::pair<Mat3d, Vec3d> convolve_sphere(const std::function<double(const Vec3d&)>& u,
                                        const Vec3d& v, const SphereRule& rule);

/// Same with a two-resolution self-check (QuadratureFail above rel_tol).
std::pair<Mat3d, Vec3d> convolve_sphere_checked(const std::function<double(const Vec3d&)>& u,
                                                const Vec3d& v, const SphereRule& rule,
                                                double rel_tol = 1e-4);

/// Frozen background g(x, v) = sum_k amp_k cos(k_k . x + phase_k) exp(-|v - u_k|^2 / 4).
struct GMode {
  double amp = 0.0;
  Vec3d kx = Vec3d::Zero();
  double phase = 0.0;
  Vec3d u = Vec3d::Zero();
};

struct BackgroundG {
  std::vector<GMode> modes;

  bool zero() const { return modes.empty(); }
  double sup_bound() const;
  double spatial(std::size_t k, const Vec3d& x) const;
  double profile(std::size_t k, const Vec3d& v) const;
  Vec3d profile_grad(std::size_t k, const Vec3d& v) const;
  double value(const Vec3d& x, const Vec3d& v) const;
  Vec3d grad_v(const Vec3d& x, const Vec3d& v) const;
};

/// sigma_G = phi * (mu + mu^{1/2} g) at (x, v).
Mat3d sigma_of(const BackgroundG& g, const Vec3d& x, const Vec3d& v, const SphereRule& rule = {});
/// a_g, or a_g^theta = a_g - 2 (grad w^theta / w^theta) sigma_G for theta != 0.
Vec3d a_g_of(const BackgroundG& g, const Vec3d& x, const Vec3d& v, double theta,
             const SphereRule& rule = {});

/// grad w^theta / w^theta for w = 1 + |v|; zero at v = 0.
Vec3d weight_log_grad(const Vec3d& v, double theta);

/// Per-velocity-node tables for sigma_G, a_g and the zeroth-order K-bar
/// coefficients of a separable background.
class CollisionCoefficients {
 public:
  CollisionCoefficients(const VGrid& vg, const BackgroundG& g, double theta = 0.0,
                        const SphereRule& rule = {});

  const VGrid& vgrid() const { return vg_; }
  const BackgroundG& background() const { return g_; }
  double theta() const { return theta_; }
  Mat3d sigma_G(const Vec3d& x, std::int64_t vi) const;
  Vec3d a_g(const Vec3d& x, std::int64_t vi) const;
  /// d_i sigma_G^{ij}.
  Vec3d sigma_G_div(const Vec3d& x, std::int64_t vi) const;
  /// -d_i{phi^{ij} * [mu^{1/2} d_j g]} + phi^{ij} * [v_i mu^{1/2} d_j g] / 2.
  double kbar_g_coef(const Vec3d& x, std::int64_t vi) const;
  /// d_i sigma^i / 2 - sigma^{ij} v_i v_j / 4.
  double kbar_0_coef(std::int64_t vi) const { return k0_[vi]; }

 private:
  VGrid vg_;
  BackgroundG g_;
  double theta_;
  std::vector<Mat3d> sig_mu_;
  std::vector<double> k0_;
  // [mode][v node]
  std::vector<std::vector<Mat3d>> sig_k_;
  std::vector<std::vector<Vec3d>> div_k_;
  std::vector<std::vector<Vec3d>> alpha_k_;
  std::vector<std::vector<double>> kappa_k_;
};

/// FFT convolutions on a velocity grid with the phi kernel and z/|z|^3.
class VConvolver {
 public:
  explicit VConvolver(const VGrid& vg);
  ~VConvolver();
  VConvolver(const VConvolver&) = delete;
  VConvolver& operator=(const VConvolver&) = delete;

  const VGrid& vgrid() const { return vg_; }
  /// Components 11, 12, 13, 22, 23, 33 of phi * u.
  std::array<Eigen::VectorXd, 6> phi(const Eigen::VectorXd& u) const;
  /// (z/|z|^3) * u.
  std::array<Eigen::VectorXd, 3> coulomb(const Eigen::VectorXd& u) const;
  /// c_i = -2 (z_i/|z|^3)*h + phi^{ij}*vh_j and d = (z_j/|z|^3)*vh_j, combined
  /// in Fourier space.
  void landau_flux(const Eigen::VectorXd& h, const std::array<Eigen::VectorXd, 3>& vh,
                   std::array<Eigen::VectorXd, 3>& c, Eigen::VectorXd& d) const;

 private:
  struct Impl;
  VGrid vg_;
  std::unique_ptr<Impl> impl_;
};

/// Component (i, j) of the packed symmetric array returned by VConvolver::phi.
inline int sym_index(int i, int j) {
  static constexpr int t[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return t[i][j];
}

/// Centered velocity derivative (one-sided at the box edges).
Eigen::VectorXd dv(const VGrid& vg, const Eigen::VectorXd& f, int axis);

/// K f = -mu^{-1/2} d_i { mu [phi^{ij} * (mu^{1/2} (d_j f + v_j f / 2))] } on a velocity slice.
/// The halves come from d_j mu^{1/2} = -v_j mu^{1/2} / 2 for mu = e^{-|v|^2/2} / (2 pi)^{3/2}.
Eigen::VectorXd apply_K(const VConvolver& conv, const Eigen::VectorXd& f);
/// A f = d_i(sigma^{ij} d_j f) - sigma^{ij} v_i v_j f / 4 + d_i sigma^i f / 2, sigma = sigma_mu.
Eigen::VectorXd apply_A(const VGrid& vg, const Eigen::VectorXd& f);
/// L = -A - K.
Eigen::VectorXd apply_L(const VConvolver& conv, const Eigen::VectorXd& f);
/// Gamma[g, f] on a velocity slice.
Eigen::VectorXd gamma_bilinear(const VConvolver& conv, const Eigen::VectorXd& g,
                               const Eigen::VectorXd& f);
/// A-bar_g f + K-bar_g f for a general slice g (equals -L f + Gamma[g, f]).
Eigen::VectorXd apply_full(const VConvolver& conv, const Eigen::VectorXd& g,
                           const Eigen::VectorXd& f);

/// K-bar_g^theta applied to a phase field (zeroth order in f).
KineticField kbar_apply(const PhaseGrid& grid, const CollisionCoefficients& coeffs,
                        const VConvolver& conv, const KineticField& f, double kcoef = 1.0);

/// Dense velocity matrix of K-bar for an x-independent background (g = 0),
/// built column by column; row-major use: Kbar F = F * M^T for an nx x nv field.
Eigen::MatrixXd kbar_matrix(const CollisionCoefficients& coeffs, const VConvolver& conv);
/// Applies a dense velocity matrix to every x slice of a phase field.
Eigen::VectorXd apply_velocity_matrix(const Eigen::MatrixXd& M, std::int64_t nx,
                                      const Eigen::VectorXd& f);

/// Collision invariants chi_0..chi_4.
double chi(int k, const Vec3d& v);

/// <Gamma[g, f] - L f, chi_k> integrated over x.
std::array<double, 5> collision_invariant_residual(const PhaseGrid& grid, const VConvolver& conv,
                                                   const Eigen::VectorXd& g,
                                                   const Eigen::VectorXd& f);

struct NormSuite {
  double theta = 0.0;
  double l2 = 0.0;
  double linf = 0.0;
  double sigma = 0.0;
  /// Running E_theta = |f(t)|_{2,theta}^2 + int_0^t |f|_{sigma,theta}^2.
  double energy = 0.0;
  double dissipation = 0.0;
};

/// Norms of a phase field; sigma = sigma_mu, velocity gradients by centered differences.
NormSuite norms(const PhaseGrid& grid, const Eigen::VectorXd& f, double theta);
/// Same for a single velocity slice (no x integration).
NormSuite slice_norms(const VGrid& vg, const Eigen::VectorXd& f, double theta);

/// Accumulates E_theta along a time series (trapezoid in time).
class EnergyAccumulator {
 public:
  explicit EnergyAccumulator(double theta) : theta_(theta) {}
  NormSuite push(const PhaseGrid& grid, double t, const Eigen::VectorXd& f);

 private:
  double theta_;
  double last_t_ = 0.0, last_sig2_ = 0.0, integral_ = 0.0;
  bool started_ = false;
};

}  // namespace llab
