#include "llab/domain.hpp"

#include <algorithm>
#include <limits>
#include <random>

namespace llab {

RhoJet<double> poly_jet(const PolyCoeffs& c, double y1, double y2) {
  RhoJet<double> j;
  j.r = c[0] + c[1] * y1 + c[2] * y2 + c[3] * y1 * y1 + c[4] * y1 * y2 + c[5] * y2 * y2 +
        c[6] * y1 * y1 * y1 + c[7] * y1 * y1 * y2 + c[8] * y1 * y2 * y2 + c[9] * y2 * y2 * y2;
  j.r1 = c[1] + 2 * c[3] * y1 + c[4] * y2 + 3 * c[6] * y1 * y1 + 2 * c[7] * y1 * y2 +
         c[8] * y2 * y2;
  j.r2 = c[2] + c[4] * y1 + 2 * c[5] * y2 + c[7] * y1 * y1 + 2 * c[8] * y1 * y2 +
         3 * c[9] * y2 * y2;
  j.r11 = 2 * c[3] + 6 * c[6] * y1 + 2 * c[7] * y2;
  j.r12 = c[4] + 2 * c[7] * y1 + 2 * c[8] * y2;
  j.r22 = 2 * c[5] + 2 * c[8] * y1 + 6 * c[9] * y2;
  j.r111 = 6 * c[6];
  j.r112 = 2 * c[7];
  j.r122 = 2 * c[8];
  j.r222 = 6 * c[9];
  return j;
}

namespace {

// rho = s * sqrt(1 - y1^2/p^2 - y2^2/q^2)
RhoJet<double> cap_jet(double s, double p, double q, double y1, double y2) {
  double Q = 1.0 - y1 * y1 / (p * p) - y2 * y2 / (q * q);
  double g = std::sqrt(Q);
  double Qi[2] = {-2 * y1 / (p * p), -2 * y2 / (q * q)};
  double Qij[2][2] = {{-2 / (p * p), 0.0}, {0.0, -2 / (q * q)}};
  double g3 = g * g * g, g5 = g3 * g * g;
  auto d1 = [&](int i) { return Qi[i] / (2 * g); };
  auto d2 = [&](int i, int j) { return Qij[i][j] / (2 * g) - Qi[i] * Qi[j] / (4 * g3); };
  auto d3 = [&](int i, int j, int k) {
    return -(Qij[i][j] * Qi[k] + Qij[i][k] * Qi[j] + Qij[j][k] * Qi[i]) / (4 * g3) +
           3 * Qi[i] * Qi[j] * Qi[k] / (8 * g5);
  };
  RhoJet<double> j;
  j.r = s * g;
  j.r1 = s * d1(0);
  j.r2 = s * d1(1);
  j.r11 = s * d2(0, 0);
  j.r12 = s * d2(0, 1);
  j.r22 = s * d2(1, 1);
  j.r111 = s * d3(0, 0, 0);
  j.r112 = s * d3(0, 0, 1);
  j.r122 = s * d3(0, 1, 1);
  j.r222 = s * d3(1, 1, 1);
  return j;
}

// Six caps of an axis-aligned ellipsoid centred at `center`.
std::vector<BoundaryPatch> ellipsoid_caps(const Vec3d& semi, const Vec3d& center, double frac) {
  std::vector<BoundaryPatch> out;
  for (int k = 0; k < 3; ++k) {
    for (int s : {1, -1}) {
      int i = (k + 1) % 3, m = (k + 2) % 3;
      BoundaryPatch p;
      p.frame.setZero();
      p.frame(i, 0) = 1.0;
      p.frame(m, 1) = s;
      p.frame(k, 2) = s;
      p.origin = center;
      double a = semi[k], pp = semi[i], qq = semi[m];
      p.rho = [a, pp, qq](double y1, double y2) { return cap_jet(a, pp, qq, y1, y2); };
      p.box_lo = {-frac * pp, -frac * qq};
      p.box_hi = {frac * pp, frac * qq};
      p.valid = [pp, qq](double y1, double y2) {
        return y1 * y1 / (pp * pp) + y2 * y2 / (qq * qq) < 0.9;
      };
      out.push_back(std::move(p));
    }
  }
  return out;
}

BoundaryPatch flat_patch(const Mat3d& frame, const Vec3d& origin) {
  BoundaryPatch p;
  p.frame = frame;
  p.origin = origin;
  p.rho = [](double, double) { return RhoJet<double>{}; };
  return p;
}

}  // namespace

DomainSpec make_half_space(double delta0) {
  DomainSpec d;
  d.kind = "half_space";
  d.zeta = [](const Vec3d& x) { return x[2]; };
  d.grad_zeta = [](const Vec3d&) { return Vec3d(0, 0, 1); };
  d.patches.push_back(flat_patch(Mat3d::Identity(), Vec3d::Zero()));
  d.delta0 = delta0;
  d.closest = [](const Vec3d& x) { return Vec3d(x[0], x[1], 0.0); };
  return d;
}

DomainSpec make_slab(double L, double lateral, double delta0) {
  DomainSpec d;
  d.kind = "slab";
  d.zeta = [L](const Vec3d& x) { return x[2] * (x[2] - L); };
  d.grad_zeta = [L](const Vec3d& x) { return Vec3d(0, 0, 2 * x[2] - L); };
  d.patches.push_back(flat_patch(Mat3d::Identity(), Vec3d(0, 0, L)));
  Mat3d flip = Mat3d::Identity();
  flip(1, 1) = -1;
  flip(2, 2) = -1;
  d.patches.push_back(flat_patch(flip, Vec3d::Zero()));
  d.delta0 = delta0;
  d.period = {lateral, lateral, 0.0};
  d.closest = [L](const Vec3d& x) {
    return Vec3d(x[0], x[1], x[2] <= 0.5 * L ? 0.0 : L);
  };
  return d;
}

DomainSpec make_ball(double R, const Vec3d& center, double delta0) {
  DomainSpec d;
  d.kind = "ball";
  d.zeta = [R, center](const Vec3d& x) { return (x - center).squaredNorm() - R * R; };
  d.grad_zeta = [center](const Vec3d& x) { return Vec3d(2 * (x - center)); };
  d.patches = ellipsoid_caps(Vec3d(R, R, R), center, 0.95);
  d.delta0 = delta0;
  d.symmetry_axis = std::make_pair(center, Vec3d(0, 0, 1));
  d.closest = [R, center](const Vec3d& x) -> Vec3d {
    Vec3d r = x - center;
    double n = r.norm();
    if (n < 1e-300) return center + Vec3d(0, 0, R);
    return center + R * r / n;
  };
  return d;
}

DomainSpec make_ellipsoid(double a, double b, double c, double delta0) {
  DomainSpec d;
  d.kind = "ellipsoid";
  Vec3d s(a, b, c);
  d.zeta = [s](const Vec3d& x) {
    return x.cwiseQuotient(s).squaredNorm() - 1.0;
  };
  d.grad_zeta = [s](const Vec3d& x) {
    return Vec3d(2 * x.cwiseQuotient(s.cwiseProduct(s)));
  };
  d.patches = ellipsoid_caps(s, Vec3d::Zero(), 0.95);
  d.delta0 = delta0;
  if (std::abs(b - c) < 1e-15) d.symmetry_axis = std::make_pair(Vec3d::Zero(), Vec3d(1, 0, 0));
  if (std::abs(a - c) < 1e-15) d.symmetry_axis = std::make_pair(Vec3d::Zero(), Vec3d(0, 1, 0));
  if (std::abs(a - b) < 1e-15) d.symmetry_axis = std::make_pair(Vec3d::Zero(), Vec3d(0, 0, 1));
  return d;
}

DomainSpec make_graph_domain(const PolyCoeffs& coeffs, double delta0,
                             const std::vector<std::array<double, 4>>& boxes) {
  DomainSpec d;
  d.kind = "graph";
  d.zeta = [coeffs](const Vec3d& x) { return x[2] - poly_jet(coeffs, x[0], x[1]).r; };
  d.grad_zeta = [coeffs](const Vec3d& x) {
    auto j = poly_jet(coeffs, x[0], x[1]);
    return Vec3d(-j.r1, -j.r2, 1.0);
  };
  std::vector<std::array<double, 4>> bx = boxes;
  if (bx.empty()) bx.push_back({-1.0, -1.0, 1.0, 1.0});
  for (const auto& b : bx) {
    BoundaryPatch p;
    p.rho = [coeffs](double y1, double y2) { return poly_jet(coeffs, y1, y2); };
    p.box_lo = {b[0], b[1]};
    p.box_hi = {b[2], b[3]};
    d.patches.push_back(std::move(p));
  }
  d.delta0 = delta0;
  return d;
}

Vec3d outward_normal(const DomainSpec& spec, const Vec3d& x) {
  double z = spec.zeta(x);
  Vec3d g = spec.grad_zeta(x);
  double gn = g.norm();
  if (gn < 1e-12) throw Error(Errc::DegenerateGradient, "|grad zeta| < 1e-12");
  if (std::abs(z) >= kBoundaryTol) throw Error(Errc::NotOnBoundary, "|zeta(x)| >= 1e-8");
  return g / gn;
}

namespace {

Vec3d newton_to_surface(const DomainSpec& spec, Vec3d y, bool& ok) {
  ok = false;
  for (int it = 0; it < 100; ++it) {
    double z = spec.zeta(y);
    Vec3d g = spec.grad_zeta(y);
    double g2 = g.squaredNorm();
    if (g2 < 1e-24) return y;
    Vec3d step = z * g / g2;
    double sn = step.norm();
    if (sn > 0.5) step *= 0.5 / sn;
    y -= step;
    if (std::abs(z) < 1e-14 && sn < 1e-14) {
      ok = true;
      return y;
    }
  }
  ok = std::abs(spec.zeta(y)) < 1e-10;
  return y;
}

Vec3d chart_search(const DomainSpec& spec, const Vec3d& x, bool& found) {
  found = false;
  double best = std::numeric_limits<double>::infinity();
  Vec3d best_pt = x;
  for (const auto& p : spec.patches) {
    Vec3d xl = p.to_local(x);
    double lo0 = std::max(p.box_lo[0], xl[0] - 4.0), hi0 = std::min(p.box_hi[0], xl[0] + 4.0);
    double lo1 = std::max(p.box_lo[1], xl[1] - 4.0), hi1 = std::min(p.box_hi[1], xl[1] + 4.0);
    if (lo0 > hi0 || lo1 > hi1) continue;
    const int ns = 24;
    double y0 = 0, y1 = 0, dmin = std::numeric_limits<double>::infinity();
    for (int i = 0; i <= ns; ++i) {
      for (int j = 0; j <= ns; ++j) {
        double a = lo0 + (hi0 - lo0) * i / ns, b = lo1 + (hi1 - lo1) * j / ns;
        if (!p.contains(a, b)) continue;
        auto jt = p.rho(a, b);
        double d = (Vec3d(a, b, jt.r) - xl).squaredNorm();
        if (d < dmin) dmin = d, y0 = a, y1 = b;
      }
    }
    if (!std::isfinite(dmin)) continue;
    // Gauss-Newton on the graph parametrisation.
    for (int it = 0; it < 60; ++it) {
      auto jt = p.rho(y0, y1);
      Vec3d r = Vec3d(y0, y1, jt.r) - xl;
      Eigen::Matrix<double, 3, 2> J;
      J << 1, 0, 0, 1, jt.r1, jt.r2;
      Eigen::Vector2d step = (J.transpose() * J).ldlt().solve(J.transpose() * r);
      double n0 = y0 - step[0], n1 = y1 - step[1];
      if (!p.contains(n0, n1)) break;
      y0 = n0, y1 = n1;
      if (step.norm() < 1e-15) break;
    }
    auto jt = p.rho(y0, y1);
    Vec3d cand = p.to_ambient(Vec3d(y0, y1, jt.r));
    double d = (cand - x).norm();
    if (d < best) best = d, best_pt = cand, found = true;
  }
  return best_pt;
}

}  // namespace

Vec3d closest_boundary_point(const DomainSpec& spec, const Vec3d& x) {
  if (spec.closest) return spec.closest(x);
  bool ok = false;
  Vec3d y = newton_to_surface(spec, x, ok);
  if (ok) {
    // Slide along the surface until x - y is normal to it.
    for (int it = 0; it < 400; ++it) {
      Vec3d n = spec.grad_zeta(y).normalized();
      Vec3d d = x - y;
      Vec3d tang = d - d.dot(n) * n;
      if (tang.norm() < 1e-12) return y;
      Vec3d moved = newton_to_surface(spec, y + 0.7 * tang, ok);
      if (!ok) break;
      y = moved;
    }
  }
  bool found = false;
  Vec3d c = chart_search(spec, x, found);
  if (!found) throw Error(Errc::ChartMiss, "no chart contains the closest boundary point");
  return c;
}

NormalCoordinates normal_coordinates(const DomainSpec& spec, const Vec3d& x, const Vec3d& v) {
  NormalCoordinates nc;
  nc.x_hat = closest_boundary_point(spec, x);
  nc.x_perp = (x - nc.x_hat).norm();
  Vec3d g = spec.grad_zeta(nc.x_hat);
  nc.n = g.normalized();
  nc.v_perp = v.dot(nc.n);
  nc.in_bd = nc.x_perp < spec.delta0;
  if (nc.in_bd) {
    bool covered = false;
    for (const auto& p : spec.patches) {
      Vec3d yl = p.to_local(nc.x_hat);
      if (p.contains(yl[0], yl[1]) && std::abs(yl[2] - p.rho(yl[0], yl[1]).r) < 1e-8) {
        covered = true;
        break;
      }
    }
    if (!covered) throw Error(Errc::ChartMiss, "point within delta0 but outside every chart");
  }
  return nc;
}

BoundaryClassification classify(const DomainSpec& spec, const Vec3d& x, const Vec3d& v) {
  double z = spec.zeta(x);
  if (z > kBoundaryTol) throw Error(Errc::OutsideDomain, "zeta(x) > 1e-8");
  BoundaryClassification c;
  if (z < -kBoundaryTol) return c;
  Vec3d g = spec.grad_zeta(x);
  double gn = g.norm();
  if (gn < 1e-12) throw Error(Errc::DegenerateGradient, "|grad zeta| < 1e-12");
  c.n = g / gn;
  c.v_dot_n = v.dot(c.n);
  if (c.v_dot_n > kGrazingTol)
    c.kind = BoundaryKind::outgoing;
  else if (c.v_dot_n < -kGrazingTol)
    c.kind = BoundaryKind::incoming;
  else
    c.kind = BoundaryKind::grazing;
  return c;
}

double rotational_symmetry_residual(const DomainSpec& spec, const Vec3d& x0, const Vec3d& omega,
                                    const std::vector<Vec3d>& samples) {
  Vec3d w = omega.normalized();
  double worst = 0.0;
  for (const auto& b : samples) {
    Vec3d n = spec.grad_zeta(b).normalized();
    worst = std::max(worst, std::abs((b - x0).cross(w).dot(n)));
  }
  return worst;
}

std::vector<Vec3d> sample_boundary(const DomainSpec& spec, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<Vec3d> out;
  out.reserve(count);
  int np = static_cast<int>(spec.patches.size());
  int guard = 0;
  while (static_cast<int>(out.size()) < count && guard++ < 100 * count) {
    const auto& p = spec.patches[static_cast<std::size_t>(U(rng) * np) % np];
    double lo0 = std::max(p.box_lo[0], spec.period[0] > 0 ? 0.0 : -1.0);
    double hi0 = std::min(p.box_hi[0], spec.period[0] > 0 ? spec.period[0] : 1.0);
    double lo1 = std::max(p.box_lo[1], spec.period[1] > 0 ? 0.0 : -1.0);
    double hi1 = std::min(p.box_hi[1], spec.period[1] > 0 ? spec.period[1] : 1.0);
    double y0 = lo0 + (hi0 - lo0) * U(rng), y1 = lo1 + (hi1 - lo1) * U(rng);
    if (!p.contains(y0, y1)) continue;
    out.push_back(p.to_ambient(Vec3d(y0, y1, p.rho(y0, y1).r)));
  }
  return out;
}

int validate_delta0(const DomainSpec& spec, int count, std::uint64_t seed) {
  auto pts = sample_boundary(spec, count, seed);
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int misses = 0;
  for (const auto& b : pts) {
    Vec3d n = spec.grad_zeta(b).normalized();
    Vec3d x = b - 0.999 * spec.delta0 * U(rng) * n;
    try {
      normal_coordinates(spec, x, Vec3d::Zero());
    } catch (const Error& e) {
      if (e.code() != Errc::ChartMiss) throw;
      ++misses;
    }
  }
  return misses;
}

double patch_graph_residual(const DomainSpec& spec, int per_patch, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  double worst = 0.0;
  for (const auto& p : spec.patches) {
    int got = 0, guard = 0;
    while (got < per_patch && guard++ < 100 * per_patch) {
      double lo0 = std::max(p.box_lo[0], -1.0), hi0 = std::min(p.box_hi[0], 1.0);
      double lo1 = std::max(p.box_lo[1], -1.0), hi1 = std::min(p.box_hi[1], 1.0);
      double y0 = lo0 + (hi0 - lo0) * U(rng), y1 = lo1 + (hi1 - lo1) * U(rng);
      if (!p.contains(y0, y1)) continue;
      ++got;
      Vec3d x = p.to_ambient(Vec3d(y0, y1, p.rho(y0, y1).r));
      worst = std::max(worst, std::abs(spec.zeta(x)));
    }
  }
  return worst;
}

}  // namespace llab
