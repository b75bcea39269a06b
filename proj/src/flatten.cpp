#include "llab/flatten.hpp"

#include "llab/landau.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace llab {

namespace {

const Mat3d kR = Vec3d(1.0, 1.0, -1.0).asDiagonal();

Mat3d a_inv_of(const RhoJet<double>& j, double y3) {
  Mat3d m;
  m << 1.0 - y3 * j.r11, -y3 * j.r12, -j.r1,
       -y3 * j.r12, 1.0 - y3 * j.r22, -j.r2,
       j.r1, j.r2, 1.0;
  return m;
}

// d A_inv / d y_k
Mat3d a_inv_deriv(const RhoJet<double>& j, double y3, int k) {
  Mat3d m = Mat3d::Zero();
  if (k == 0) {
    m << -y3 * j.r111, -y3 * j.r112, -j.r11,
         -y3 * j.r112, -y3 * j.r122, -j.r12,
         j.r11, j.r12, 0.0;
  } else if (k == 1) {
    m << -y3 * j.r112, -y3 * j.r122, -j.r12,
         -y3 * j.r122, -y3 * j.r222, -j.r22,
         j.r12, j.r22, 0.0;
  } else {
    m << -j.r11, -j.r12, 0.0,
         -j.r12, -j.r22, 0.0,
         0.0, 0.0, 0.0;
  }
  return m;
}

double max_abs(const Mat3d& m) { return m.cwiseAbs().maxCoeff(); }

Vec3d random_chart_point(const BoundaryPatch& p, std::mt19937_64& rng, double y3_lo, double y3_hi,
                         double shrink = 1.0) {
  auto box = sample_box(p);
  for (double& b : box) b *= shrink;
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int guard = 0; guard < 1000; ++guard) {
    double y1 = box[0] + (box[1] - box[0]) * U(rng);
    double y2 = box[2] + (box[3] - box[2]) * U(rng);
    if (p.contains(y1, y2)) return Vec3d(y1, y2, y3_lo + (y3_hi - y3_lo) * U(rng));
  }
  throw Error(Errc::ChartMiss, "no valid chart point found in sample box");
}

Vec3d random_velocity(std::mt19937_64& rng, double scale = 2.0) {
  std::normal_distribution<double> N(0.0, 1.0);
  return scale * Vec3d(N(rng), N(rng), N(rng));
}

BoundaryPatch poly_patch(const PolyCoeffs& c) {
  BoundaryPatch p;
  p.rho = [c](double y1, double y2) { return poly_jet(c, y1, y2); };
  p.box_lo = {-1.0, -1.0};
  p.box_hi = {1.0, 1.0};
  return p;
}

}  // namespace

Mat3d FlattenFrame::B(const Vec3d& w) const {
  Mat3d b;
  for (int k = 0; k < 3; ++k) b.col(k) = a_inv_deriv(jet, y[2], k) * w;
  return b;
}

FlattenFrame frame_at(const BoundaryPatch& patch, const Vec3d& y) {
  if (!patch.contains(y[0], y[1]))
    throw Error(Errc::ChartDegenerate, "point outside the chart box");
  FlattenFrame f;
  f.y = y;
  f.jet = patch.rho(y[0], y[1]);
  f.A_inv = a_inv_of(f.jet, y[2]);
  f.det_A_inv = f.A_inv.determinant();
  if (!(f.det_A_inv > 1e-10))
    throw Error(Errc::ChartDegenerate, "det of the flattening Jacobian is " +
                                           sci(f.det_A_inv));
  f.A = f.A_inv.inverse();
  f.C = f.A_inv.transpose() * f.A_inv;
  f.C_inv = f.A * f.A.transpose();
  return f;
}

double det_closed_form(const RhoJet<double>& j, double y3) {
  return y3 * y3 * (j.r11 * j.r22 - j.r12 * j.r12) +
         y3 * (2 * j.r1 * j.r2 * j.r12 - j.r2 * j.r2 * j.r11 - j.r1 * j.r1 * j.r22 - j.r11 - j.r22) +
         (j.r1 * j.r1 + j.r2 * j.r2 + 1.0);
}

Mat3d A_closed_form(const RhoJet<double>& j, double y3) {
  double p1 = j.r1, p2 = j.r2, a = 1.0 - y3 * j.r11, b = -y3 * j.r12, d = 1.0 - y3 * j.r22;
  Mat3d adj;
  adj << d + p2 * p2, -(b + p1 * p2), p1 * d - b * p2,
         -(b + p1 * p2), a + p1 * p1, a * p2 - b * p1,
         b * p2 - d * p1, b * p1 - a * p2, a * d - b * b;
  return adj / det_closed_form(j, y3);
}

Mat3d C_closed_form(const RhoJet<double>& j, double y3) {
  double p1 = j.r1, p2 = j.r2, a = 1.0 - y3 * j.r11, b = -y3 * j.r12, d = 1.0 - y3 * j.r22;
  Mat3d c;
  c(0, 0) = a * a + b * b + p1 * p1;
  c(1, 1) = b * b + d * d + p2 * p2;
  c(2, 2) = p1 * p1 + p2 * p2 + 1.0;
  c(0, 1) = c(1, 0) = a * b + b * d + p1 * p2;
  c(0, 2) = c(2, 0) = -a * p1 - b * p2 + p1;
  c(1, 2) = c(2, 1) = -b * p1 - d * p2 + p2;
  return c;
}

Vec3d flatten_inverse(const BoundaryPatch& patch, const Vec3d& y) {
  auto j = patch.rho(y[0], y[1]);
  return Vec3d(y[0] - y[2] * j.r1, y[1] - y[2] * j.r2, j.r + y[2]);
}

std::pair<Vec3d, Vec3d> push_phase(const BoundaryPatch& patch, const Vec3d& x, const Vec3d& v) {
  Vec3d xl = patch.to_local(x);
  Vec3d vl = patch.frame.transpose() * v;
  if (!patch.contains(xl[0], xl[1]))
    throw Error(Errc::ChartDegenerate, "start point outside the chart box");
  Vec3d y(xl[0], xl[1], xl[2] - patch.rho(xl[0], xl[1]).r);
  double scale = 1.0 + xl.cwiseAbs().maxCoeff();
  for (int it = 0; it < 60; ++it) {
    Vec3d r = flatten_inverse(patch, y) - xl;
    if (r.cwiseAbs().maxCoeff() <= 1e-15 * scale) break;
    FlattenFrame fr = frame_at(patch, y);
    y -= fr.A * r;
    if (it == 59) throw Error(Errc::ChartDegenerate, "Newton inversion of the chart did not converge");
  }
  FlattenFrame fr = frame_at(patch, y);
  return {y, fr.A * vl};
}

std::pair<Vec3d, Vec3d> pull_phase(const BoundaryPatch& patch, const Vec3d& y, const Vec3d& w) {
  FlattenFrame fr = frame_at(patch, y);
  Vec3d xl = flatten_inverse(patch, y);
  return {patch.to_ambient(xl), patch.frame * (fr.A_inv * w)};
}

std::array<double, 4> sample_box(const BoundaryPatch& p) {
  return {std::max(p.box_lo[0], -1.0), std::min(p.box_hi[0], 1.0), std::max(p.box_lo[1], -1.0),
          std::min(p.box_hi[1], 1.0)};
}

double specular_commutation_check(const BoundaryPatch& patch, int samples, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec3d y = random_chart_point(patch, rng, 0.0, 0.0);
    Vec3d w = random_velocity(rng);
    FlattenFrame fr = frame_at(patch, y);
    Vec3d n = fr.normal().normalized();
    Mat3d Rx = Mat3d::Identity() - 2.0 * n * n.transpose();
    Vec3d lhs = fr.A_inv * (kR * w);
    Vec3d rhs = Rx * (fr.A_inv * w);
    worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
  }
  return worst;
}

double round_trip_residual(const BoundaryPatch& patch, int samples, std::uint64_t seed,
                           double y3_max) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int s = 0; s < samples; ++s) {
    Vec3d y = random_chart_point(patch, rng, -y3_max, y3_max, 0.8);
    Vec3d w = random_velocity(rng);
    auto [x, v] = pull_phase(patch, y, w);
    auto [y2, w2] = push_phase(patch, x, v);
    auto [x3, v3] = pull_phase(patch, y2, w2);
    double r = std::max({(y2 - y).cwiseAbs().maxCoeff(), (w2 - w).cwiseAbs().maxCoeff(),
                         (x3 - x).cwiseAbs().maxCoeff(), (v3 - v).cwiseAbs().maxCoeff()});
    worst = std::max(worst, r);
  }
  return worst;
}

double ExtendedField::interface_value(int i1, int i2, std::int64_t wi) const {
  return 0.5 * (values[index(i1, i2, grid.m - 1, wi)] + values[index(i1, i2, grid.m, wi)]);
}

ExtendedField mirror_extend(const HalfGrid& grid,
                            const std::function<double(const Vec3d&, const Vec3d&)>& tilde_f,
                            double tol) {
  ExtendedField out;
  out.grid = grid;
  out.values = Eigen::VectorXd::Zero(grid.size());
  const std::int64_t nw = grid.w.size();
  for (int i1 = 0; i1 < grid.n; ++i1)
    for (int i2 = 0; i2 < grid.n; ++i2) {
      double y1 = grid.lo[0] + i1 * grid.h, y2 = grid.lo[1] + i2 * grid.h;
      for (std::int64_t wi = 0; wi < nw; ++wi) {
        Vec3d w = grid.w.v(wi);
        double d = std::abs(tilde_f(Vec3d(y1, y2, 0.0), w) - tilde_f(Vec3d(y1, y2, 0.0), kR * w));
        if (d > tol)
          throw Error(Errc::SpecularViolation,
                      "f(y, w) - f(y, Rw) = " + sci(d) + " on the interface");
      }
      for (int k = 0; k < grid.m; ++k) {
        Vec3d y(y1, y2, out.y3(k));
        for (std::int64_t wi = 0; wi < nw; ++wi)
          out.values[out.index(i1, i2, k, wi)] = tilde_f(y, grid.w.v(wi));
      }
      for (int k = grid.m; k < 2 * grid.m; ++k) {
        int kl = 2 * grid.m - 1 - k;
        for (std::int64_t wi = 0; wi < nw; ++wi)
          out.values[out.index(i1, i2, k, wi)] = out.values[out.index(i1, i2, kl, grid.w.mirror3(wi))];
      }
    }
  return out;
}

double extension_boundary_term(const ExtendedField& f,
                               const std::function<double(const Vec3d&, const Vec3d&)>& phi,
                               bool one_sided) {
  const auto& g = f.grid;
  const std::int64_t nw = g.w.size();
  double lower = 0.0, upper = 0.0;
  for (int i1 = 0; i1 < g.n; ++i1)
    for (int i2 = 0; i2 < g.n; ++i2) {
      Vec3d y(g.lo[0] + i1 * g.h, g.lo[1] + i2 * g.h, 0.0);
      for (std::int64_t wi = 0; wi < nw; ++wi) {
        Vec3d w = g.w.v(wi);
        double p = phi(y, w) * w[2];
        double below = one_sided ? f.values[f.index(i1, i2, g.m - 1, wi)] : f.interface_value(i1, i2, wi);
        double above = one_sided ? f.values[f.index(i1, i2, g.m, wi)] : below;
        lower += below * p;
        upper -= above * p;
      }
    }
  double cell = g.h * g.h * g.w.cell();
  return (lower + upper) * cell;
}

TransformedCoefficients transformed_coefficients(const BoundaryPatch& patch, const Vec3d& yp,
                                                 const Vec3d& wp, const MatrixField& sigma,
                                                 const VectorField& a, bool upper) {
  Vec3d y = upper ? Vec3d(kR * yp) : yp;
  Vec3d w = upper ? Vec3d(kR * wp) : wp;
  FlattenFrame fr = frame_at(patch, y);
  Vec3d x = flatten_inverse(patch, y);
  Vec3d v = fr.A_inv * w;
  TransformedCoefficients c;
  c.AA = fr.A * sigma(x, v) * fr.A.transpose();
  c.BB = fr.A * (fr.B(w) * w) + fr.A * a(x, v);
  if (upper) {
    c.AA = kR * c.AA * kR;
    c.BB = kR * c.BB;
  }
  return c;
}

ContinuityReport interface_continuity_certificate(const BoundaryPatch& patch,
                                                  const MatrixField& sigma, const VectorField& a,
                                                  int samples, std::uint64_t seed, double delta0) {
  ContinuityReport rep;
  rep.deltas = {delta0, 0.5 * delta0, 0.25 * delta0};
  rep.aa_jump.assign(3, 0.0);
  rep.bb_jump.assign(3, 0.0);
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec3d y0 = random_chart_point(patch, rng, 0.0, 0.0);
    Vec3d w = random_velocity(rng, 1.5);
    FlattenFrame f0 = frame_at(patch, y0);

    // upper side sees R A R_x once the velocity is reflected; equal to A on y3 = 0
    Vec3d n = f0.normal().normalized();
    Mat3d Rx = Mat3d::Identity() - 2.0 * n * n.transpose();
    rep.a_residual = std::max(rep.a_residual, max_abs(kR * f0.A * Rx - f0.A));

    double lam_lo = w.dot(f0.C * w);
    double lam_hi = (kR * w).dot(f0.C * (kR * w));
    rep.lambda_residual = std::max(rep.lambda_residual, std::abs(lam_lo - lam_hi));
    rep.Lambda_residual = std::max(rep.Lambda_residual, max_abs(kR * f0.C_inv * kR - f0.C_inv));
    rep.c13_c23 = std::max({rep.c13_c23, std::abs(f0.C(0, 2)), std::abs(f0.C(1, 2)),
                            std::abs(f0.C(2, 0)), std::abs(f0.C(2, 1))});

    for (double y3 : {0.0, -0.5 * delta0}) {
      FlattenFrame fr = frame_at(patch, Vec3d(y0[0], y0[1], y3));
      rep.det_residual = std::max(rep.det_residual,
                                  std::abs(fr.det_A_inv - det_closed_form(fr.jet, y3)));
      rep.adjugate_residual =
          std::max(rep.adjugate_residual, max_abs(fr.A - A_closed_form(fr.jet, y3)));
    }

    std::array<Mat3d, 3> dA;
    std::array<Vec3d, 3> dB;
    for (int l = 0; l < 3; ++l) {
      double d = rep.deltas[l];
      auto lo = transformed_coefficients(patch, Vec3d(y0[0], y0[1], -d), w, sigma, a, false);
      auto hi = transformed_coefficients(patch, Vec3d(y0[0], y0[1], d), w, sigma, a, true);
      dA[l] = hi.AA - lo.AA;
      dB[l] = hi.BB - lo.BB;
      rep.aa_jump[l] = std::max(rep.aa_jump[l], max_abs(dA[l]));
      rep.bb_jump[l] = std::max(rep.bb_jump[l], dB[l].cwiseAbs().maxCoeff());
    }
    // quadratic Richardson on the jump itself, component-wise
    Mat3d A0 = (8.0 * dA[2] - 6.0 * dA[1] + dA[0]) / 3.0;
    Vec3d B0 = (8.0 * dB[2] - 6.0 * dB[1] + dB[0]) / 3.0;
    rep.aa_jump_extrapolated = std::max(rep.aa_jump_extrapolated, max_abs(A0));
    rep.bb_jump_extrapolated = std::max(rep.bb_jump_extrapolated, B0.cwiseAbs().maxCoeff());
  }
  return rep;
}

TransportInvarianceReport transport_invariance(
    const BoundaryPatch& patch, const std::function<double(const Vec3d&, const Vec3d&)>& f,
    int samples, std::uint64_t seed, double h0) {
  TransportInvarianceReport rep;
  rep.steps = {h0, 0.5 * h0, 0.25 * h0};
  rep.residual.assign(3, 0.0);
  rep.residual_plus.assign(3, 0.0);
  // tf(y, w) = f(x(y), A_inv(y) w), local coordinates throughout
  auto tf = [&](const Vec3d& y, const Vec3d& w) {
    FlattenFrame fr = frame_at(patch, y);
    return f(flatten_inverse(patch, y), fr.A_inv * w);
  };
  std::mt19937_64 rng(seed);
  for (int s = 0; s < samples; ++s) {
    Vec3d y = random_chart_point(patch, rng, -0.2, 0.0, 0.8);
    Vec3d w = random_velocity(rng, 1.0);
    FlattenFrame fr = frame_at(patch, y);
    Vec3d x = flatten_inverse(patch, y);
    Vec3d v = fr.A_inv * w;
    Vec3d drift = fr.A * (fr.B(w) * w);
    for (int l = 0; l < 3; ++l) {
      double h = rep.steps[l];
      double lhs = 0.0, gy = 0.0, gw = 0.0;
      for (int k = 0; k < 3; ++k) {
        Vec3d e = Vec3d::Unit(k) * h;
        lhs += v[k] * (f(x + e, v) - f(x - e, v)) / (2 * h);
        gy += w[k] * (tf(y + e, w) - tf(y - e, w)) / (2 * h);
        gw += drift[k] * (tf(y, w + e) - tf(y, w - e)) / (2 * h);
      }
      rep.residual[l] = std::max(rep.residual[l], std::abs(lhs - (gy - gw)));
      rep.residual_plus[l] = std::max(rep.residual_plus[l], std::abs(lhs - (gy + gw)));
    }
  }
  rep.order = std::log2(rep.residual[1] / rep.residual[2]);
  return rep;
}

BoundaryPatch flat_patch() { return poly_patch({0, 0, 0, 0, 0, 0, 0, 0, 0, 0}); }
BoundaryPatch tilted_patch(double alpha) { return poly_patch({0, alpha, 0, 0, 0, 0, 0, 0, 0, 0}); }
BoundaryPatch paraboloid_patch() { return poly_patch({0, 0, 0, 0.25, 0, 0.25, 0, 0, 0, 0}); }
BoundaryPatch saddle_patch() { return poly_patch({0, 0, 0, 1.0 / 3.0, 0, -1.0 / 3.0, 0, 0, 0, 0}); }

}  // namespace llab
