#pragma once

#include <Eigen/Dense>
#include <functional>
#include <memory>
#include <vector>

#include "nrmpp/geometry.hpp"

namespace nrmpp {

using KernelFn = std::function<double(const double*, const double*)>;

/// Gaussian covariance rho * exp(-|x-y|^2 / alpha) in dimension q.
KernelFn gaussian_kernel(double rho, double alpha, int q);

/// Finite-rank real eigen-representation K(x,y) = sum_j lambda_j e_j(x) e_j(y)
/// with e_j orthonormal on a box. Built either from the Fourier basis of the
/// periodized Gaussian kernel or by the Nystrom method.
class SpectralBasis {
 public:
  enum class Kind { fourier, nystrom };

  Kind kind() const { return kind_; }
  const Region& region() const { return region_; }
  int dim() const { return region_.dim(); }
  int rank() const { return static_cast<int>(eigenvalues_.size()); }
  const Eigen::VectorXd& eigenvalues() const { return eigenvalues_; }
  double eigen_sum() const { return eigenvalues_.sum(); }
  double max_eigenvalue() const;
  /// Mass dropped by truncation, relative to the untruncated sum.
  double truncation_residual() const { return residual_; }

  void eval(const double* x, double* out) const;
  Eigen::VectorXd eval(const double* x) const;
  /// rank x k matrix of eigenfunction values at the points.
  Eigen::MatrixXd eval_matrix(const PointConfig& pts) const;

  /// Upper bound on sum_j e_j(x)^2 over the region.
  double sup_norm_sq() const { return sup_norm_sq_; }
  /// Upper bound on e_j(x)^2 over the region.
  double sup_single_sq(int j) const { return sup_single_sq_[j]; }

  double kernel(const double* x, const double* y) const;

  // Fourier data
  const std::vector<std::vector<int>>& frequencies() const { return freqs_; }

  // Nystrom data
  const PointConfig& landmarks() const { return landmarks_; }
  const Eigen::MatrixXd& landmark_vectors() const { return vecs_; }

  /// Throws if any eigenvalue is >= 1.
  void validate_dpp() const;

  static SpectralBasis fourier(double rho, double alpha, const Region& region, double cutoff_tol);
  static SpectralBasis nystrom(const KernelFn& kernel, const Region& region, int m_landmarks,
                               double rel_cutoff = 1e-12);

 private:
  Kind kind_ = Kind::fourier;
  Region region_;
  Eigen::VectorXd eigenvalues_;
  double residual_ = 0.0;
  double sup_norm_sq_ = 0.0;
  std::vector<double> sup_single_sq_;
  // fourier: frequency vector and type (0 constant, 1 cos, 2 sin)
  std::vector<std::vector<int>> freqs_;
  std::vector<int> types_;
  // nystrom
  KernelFn kernel_fn_;
  PointConfig landmarks_;
  Eigen::MatrixXd vecs_;  // m x r, orthonormal columns
  double weight_ = 0.0;
};

/// Fourier decomposition of the Gaussian DPP kernel; rejects lambda_h >= 1.
SpectralBasis spectral_decompose(double rho, double alpha, const Region& region,
                                 double cutoff_tol);

/// Nystrom eigen-decomposition of an integral operator on a uniform grid.
SpectralBasis nystrom(const KernelFn& kernel, const Region& region, int m_landmarks);

}  // namespace nrmpp
