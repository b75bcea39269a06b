#include "llab/diffusion.hpp"

#include <algorithm>
#include <cmath>

namespace llab {

DiffusionMode parse_diffusion_mode(const std::string& s) {
  if (s == "A" || s == "a") return DiffusionMode::A;
  if (s == "B" || s == "b") return DiffusionMode::B;
  if (s == "iso") return DiffusionMode::iso;
  throw Error(Errc::ConfigError, "unknown diffusion mode '" + s + "'");
}

std::string to_string(DiffusionMode m) {
  switch (m) {
    case DiffusionMode::A: return "A";
    case DiffusionMode::B: return "B";
    case DiffusionMode::iso: return "iso";
  }
  return "?";
}

namespace {

struct Entry {
  std::int64_t col;
  double w;
};

// Trilinear deposit of the shifted bump table around node vi. Mass falling
// outside the box is dropped.
std::vector<Entry> deposit(const VGrid& vg, const CutoffFamily& fam, const BumpKernel& ker,
                           std::int64_t vi, const Mat3d& S) {
  const int n = vg.n;
  const double h = vg.h();
  const double eps = fam.epsilon;
  const auto& u = ker.nodes();
  const auto& w = ker.weights();
  const int m = ker.order();
  Vec3d reach = eps * ker.radius() * S.cwiseAbs().rowwise().sum();
  auto base = vg.multi(vi);
  std::array<int, 3> lo, span;
  for (int d = 0; d < 3; ++d) {
    int r = static_cast<int>(std::ceil(reach[d] / h)) + 1;
    lo[d] = base[d] - r;
    span[d] = 2 * r + 2;
  }
  std::vector<double> acc(std::size_t(span[0]) * span[1] * span[2], 0.0);
  Vec3d v = vg.v(vi);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      for (int k = 0; k < m; ++k) {
        Vec3d p = v + eps * (S * Vec3d(u[i], u[j], u[k]));
        double wt = w[i] * w[j] * w[k];
        std::array<int, 3> c;
        std::array<double, 3> t;
        bool out = false;
        for (int d = 0; d < 3; ++d) {
          double q = (p[d] + vg.vmax) / h;
          if (q < -1e-12 || q > n - 1 + 1e-12) {
            out = true;
            break;
          }
          q = std::clamp(q, 0.0, double(n - 1));
          c[d] = std::min(static_cast<int>(std::floor(q)), n - 2);
          t[d] = q - c[d];
        }
        if (out) continue;
        for (int a = 0; a < 2; ++a)
          for (int b = 0; b < 2; ++b)
            for (int e = 0; e < 2; ++e) {
              double cw = (a ? t[0] : 1 - t[0]) * (b ? t[1] : 1 - t[1]) * (e ? t[2] : 1 - t[2]);
              if (cw == 0.0) continue;
              std::size_t id = (std::size_t(c[0] + a - lo[0]) * span[1] + (c[1] + b - lo[1])) *
                                   span[2] +
                               (c[2] + e - lo[2]);
              acc[id] += wt * cw;
            }
      }
  std::vector<Entry> out;
  for (int a = 0; a < span[0]; ++a)
    for (int b = 0; b < span[1]; ++b)
      for (int e = 0; e < span[2]; ++e) {
        double val = acc[(std::size_t(a) * span[1] + b) * span[2] + e];
        if (val != 0.0) out.push_back({vg.index(lo[0] + a, lo[1] + b, lo[2] + e), val});
      }
  return out;
}

double row_abs_max(const SpMat& Q) {
  double m = 0.0;
  for (int r = 0; r < Q.outerSize(); ++r) {
    double s = 0.0;
    for (SpMat::InnerIterator it(Q, r); it; ++it) s += std::abs(it.value());
    m = std::max(m, s);
  }
  return m;
}

}  // namespace

SpMat jump_generator(const VGrid& vg, const CutoffFamily& fam, const BumpKernel& ker,
                     const std::function<Mat3d(std::int64_t)>& sigma, double& scale) {
  const std::int64_t nv = vg.size();
  std::vector<std::vector<Entry>> rows(nv);
  parallel_for(nv, [&](std::int64_t vi) {
    Eigen::LLT<Mat3d> llt(sigma(vi));
    if (llt.info() != Eigen::Success)
      throw Error(Errc::OutOfRange, "sigma_G not positive definite at a velocity node");
    rows[vi] = deposit(vg, fam, ker, vi, llt.matrixL());
  });
  std::vector<Eigen::Triplet<double>> trip;
  for (std::int64_t r = 0; r < nv; ++r)
    for (const Entry& e : rows[r])
      if (e.col != r) trip.emplace_back(r, e.col, e.w);
  SpMat W(nv, nv);
  W.setFromTriplets(trip.begin(), trip.end());
  SpMat K = 0.5 * (W + SpMat(W.transpose()));
  Eigen::VectorXd rs = K * Eigen::VectorXd::Ones(nv);
  double worst = rs.size() ? rs.maxCoeff() : 0.0;
  scale = 1.0 / std::max(1.0, worst);
  const double c = 2.0 / (fam.epsilon * fam.epsilon) * scale;
  SpMat Q = c * K;
  std::vector<Eigen::Triplet<double>> diag;
  for (std::int64_t r = 0; r < nv; ++r) diag.emplace_back(r, r, -c * rs[r]);
  SpMat D(nv, nv);
  D.setFromTriplets(diag.begin(), diag.end());
  Q += D;
  Q.makeCompressed();
  return Q;
}

SpMat divergence_stencil(const VGrid& vg,
                         const std::function<Mat3d(const std::array<int, 3>&)>& sigma_cell) {
  const int n = vg.n;
  const double h = vg.h();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(std::size_t(n - 1) * (n - 1) * (n - 1) * 64);
  for (int a = 0; a + 1 < n; ++a)
    for (int b = 0; b + 1 < n; ++b)
      for (int c = 0; c + 1 < n; ++c) {
        Eigen::Matrix<double, 3, 8> D;
        std::array<std::int64_t, 8> id;
        for (int k = 0; k < 8; ++k) {
          int da = (k >> 2) & 1, db = (k >> 1) & 1, dc = k & 1;
          id[k] = vg.index(a + da, b + db, c + dc);
          D(0, k) = (da ? 1.0 : -1.0) / (4 * h);
          D(1, k) = (db ? 1.0 : -1.0) / (4 * h);
          D(2, k) = (dc ? 1.0 : -1.0) / (4 * h);
        }
        Mat3d s = sigma_cell({a, b, c});
        Eigen::Matrix<double, 8, 8> E = -D.transpose() * s * D;
        for (int p = 0; p < 8; ++p)
          for (int q = 0; q < 8; ++q) trip.emplace_back(id[p], id[q], E(p, q));
      }
  SpMat Q(vg.size(), vg.size());
  Q.setFromTriplets(trip.begin(), trip.end());
  Q.makeCompressed();
  return Q;
}

VelocityDiffusion::VelocityDiffusion(const PhaseGrid& grid, const CutoffFamily& fam,
                                     const CollisionCoefficients& coeffs,
                                     const DiffusionOptions& opt)
    : nx_(grid.x.size()), nv_(grid.v.size()), mode_(opt.mode) {
  const VGrid& vg = grid.v;
  const bool per_x = !coeffs.background().zero() && opt.mode != DiffusionMode::iso;
  const std::int64_t count = per_x ? nx_ : 1;
  mats_.resize(count);
  scale_ = 1.0;
  BumpKernel ker(per_x ? opt.bump_order_x : opt.bump_order);
  for (std::int64_t m = 0; m < count; ++m) {
    Vec3d x = per_x ? grid.x.x(m) : Vec3d::Zero();
    if (opt.mode == DiffusionMode::B) {
      mats_[m] = divergence_stencil(vg, [&](const std::array<int, 3>& c) {
        if (!per_x) {
          double hh = 0.5 * vg.h();
          return sigma_mu(Vec3d(vg.node(c[0]) + hh, vg.node(c[1]) + hh, vg.node(c[2]) + hh));
        }
        Mat3d s = Mat3d::Zero();
        for (int k = 0; k < 8; ++k)
          s += coeffs.sigma_G(x, vg.index(c[0] + ((k >> 2) & 1), c[1] + ((k >> 1) & 1),
                                          c[2] + (k & 1)));
        return Mat3d(s / 8.0);
      });
    } else {
      double sc = 1.0;
      if (opt.mode == DiffusionMode::iso)
        mats_[m] = jump_generator(vg, fam, ker, [](std::int64_t) { return Mat3d::Identity(); }, sc);
      else
        mats_[m] = jump_generator(vg, fam, ker,
                                  [&](std::int64_t vi) { return coeffs.sigma_G(x, vi); }, sc);
      scale_ = std::min(scale_, sc);
    }
    norm_inf_ = std::max(norm_inf_, row_abs_max(mats_[m]));
  }
}

void VelocityDiffusion::apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const {
  out.resize(f.size());
  Eigen::Map<const Eigen::MatrixXd> F(f.data(), nx_, nv_);
  Eigen::Map<Eigen::MatrixXd> O(out.data(), nx_, nv_);
  const std::int64_t block = 64;
  const std::int64_t nb = (nx_ + block - 1) / block;
  if (x_independent()) {
    // Q is symmetric: out(x, :) = F(x, :) Q.
    const SpMat& Q = mats_[0];
    parallel_for(nb, [&](std::int64_t b) {
      std::int64_t r0 = b * block, len = std::min(block, nx_ - r0);
      O.middleRows(r0, len) = F.middleRows(r0, len) * Q;
    });
    return;
  }
  parallel_for(nx_, [&](std::int64_t xi) {
    Eigen::VectorXd s = F.row(xi).transpose();
    O.row(xi) = (mats_[xi] * s).transpose();
  });
}

}  // namespace llab
