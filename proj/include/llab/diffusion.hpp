#pragma once

#include "llab/grid.hpp"
#include "llab/landau.hpp"
#include "llab/regularization.hpp"

#include <Eigen/Sparse>

#include <string>
#include <vector>

namespace llab {

/// A: jump process with shifts eps * S u, S the Cholesky factor of sigma_G.
/// B: divergence-form stencil div(sigma_G grad f).
/// iso: jump process with S = I (the plain difference-quotient Laplacian).
enum class DiffusionMode { A, B, iso };

DiffusionMode parse_diffusion_mode(const std::string& s);
std::string to_string(DiffusionMode m);

struct DiffusionOptions {
  DiffusionMode mode = DiffusionMode::A;
  /// Bump order when one matrix serves all x nodes.
  int bump_order = 16;
  /// Bump order when sigma_G depends on x.
  int bump_order_x = 8;
};

using SpMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Q on a phase grid. Mode A and iso are symmetric jump generators: nonnegative
/// off-diagonal, zero row and column sums, so exp(tQ) is doubly stochastic.
class VelocityDiffusion {
 public:
  VelocityDiffusion(const PhaseGrid& grid, const CutoffFamily& fam,
                    const CollisionCoefficients& coeffs, const DiffusionOptions& opt = {});

  DiffusionMode mode() const { return mode_; }
  bool x_independent() const { return mats_.size() == 1; }
  const SpMat& matrix(std::int64_t xi = 0) const { return mats_[x_independent() ? 0 : xi]; }
  /// max_i sum_j |Q_ij| over all matrices.
  double norm_inf() const { return norm_inf_; }
  /// Factor applied to the jump kernel so that its off-diagonal row sums stay <= 1.
  double kernel_scale() const { return scale_; }

  void apply(const Eigen::VectorXd& f, Eigen::VectorXd& out) const;
  Eigen::VectorXd apply(const Eigen::VectorXd& f) const {
    Eigen::VectorXd out;
    apply(f, out);
    return out;
  }

 private:
  std::int64_t nx_ = 0, nv_ = 0;
  DiffusionMode mode_;
  std::vector<SpMat> mats_;
  double norm_inf_ = 0.0;
  double scale_ = 1.0;
};

/// Jump kernel of one velocity slice: sigma(vi) gives the matrix to factor.
SpMat jump_generator(const VGrid& vg, const CutoffFamily& fam, const BumpKernel& ker,
                     const std::function<Mat3d(std::int64_t)>& sigma, double& scale);

/// Divergence-form stencil, -sum_c D_c^T sigma_c D_c with D_c the cell-centre
/// gradient of cell c (lower corner index c).
SpMat divergence_stencil(const VGrid& vg, const std::function<Mat3d(const std::array<int, 3>&)>& sigma_cell);

}  // namespace llab
