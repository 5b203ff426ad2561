// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Numerical primitives: dense vectors, SPD covariance representations, a
// cyclic Jacobi eigensolver, Haar-distributed orthogonal matrices and a
// counter-based random stream whose output depends only on (seed, index).

#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

namespace gmmflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// SplitMix64 finalizer. Bijective 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines a seed with a salt into a new, well-separated seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept;

/// Deterministic random stream keyed by (master_seed, stream_index).
///
/// The n-th raw output is mix64(key + n * golden) with key a mixed function of
/// both inputs, so a stream never depends on how many other streams exist or
/// on the order in which they are consumed. Normal variates use Box-Muller on
/// the raw uniform stream; the second variate of each pair is cached.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept;

  static RngStream substream(std::uint64_t master_seed,
                             std::uint64_t stream_index) noexcept {
    return RngStream(master_seed, stream_index);
  }

  std::uint64_t master_seed() const noexcept { return master_seed_; }
  std::uint64_t stream_index() const noexcept { return stream_index_; }

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept;
  /// Uniform on (0, 1].
  double uniform_open_low() noexcept;
  double normal() noexcept;
  /// Uniform integer in [0, n). Requires n > 0.
  std::uint64_t below(std::uint64_t n) noexcept;

 private:
  std::uint64_t master_seed_;
  std::uint64_t stream_index_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

struct JacobiOptions {
  double symmetry_tol = 1e-10;  // relative to max |A_ij|
  int max_sweeps = 100;
  double off_diagonal_tol = 1e-12;  // relative to ||A||_F
};

struct EigenDecomposition {
  Matrix vectors;  // columns are orthonormal eigenvectors
  Vector values;   // ascending
};

/// Cyclic Jacobi rotations. Throws kInvalidArgument on a non-symmetric input
/// and kNumerical when max_sweeps is exhausted.
EigenDecomposition symmetric_eigendecompose(const Matrix& a,
                                            const JacobiOptions& opts = {});

/// Q factor of a Householder QR of a standard Gaussian matrix, with column
/// signs chosen so that diag(R) > 0. This is Haar distributed on O(d).
Matrix random_orthogonal(int d, RngStream& rng);

/// (0.1, 0.2, 0.3, 0.4, 0.5) repeated until length d.
Vector cycle5_spectrum(int d);

Vector gaussian_vector(int d, RngStream& rng);

enum class CovarianceKind { kIsotropic, kDiagonal, kEigenFactored };

/// Shared SPD covariance of the mixture components. Every variant exposes its
/// spectrum and an eigenbasis (implicitly the identity for the first two).
class CovarianceSpec {
 public:
  static CovarianceSpec isotropic(double sigma, int d);
  static CovarianceSpec diagonal(Vector lambda);
  static CovarianceSpec eigen_factored(Matrix basis, Vector lambda);
  /// Eigendecomposes a full SPD matrix with the Jacobi solver.
  static CovarianceSpec from_matrix(const Matrix& sigma,
                                    const JacobiOptions& opts = {});

  CovarianceKind kind() const noexcept { return kind_; }
  int dim() const noexcept { return static_cast<int>(lambda_.size()); }
  const Vector& eigenvalues() const noexcept { return lambda_; }
  double lambda_min() const noexcept { return lambda_min_; }
  double lambda_max() const noexcept { return lambda_max_; }
  /// Isotropic scale; only meaningful for kIsotropic.
  double sigma() const noexcept { return lambda_(0); }

  bool has_basis() const noexcept { return basis_.has_value(); }
  /// Eigenvector matrix U; only valid when has_basis().
  const Matrix& basis() const { return *basis_; }

  /// U^T x (identity when there is no explicit basis).
  Vector to_eigen(const Vector& x) const;
  /// U x.
  Vector from_eigen(const Vector& x) const;
  /// Dense U diag(lambda) U^T.
  Matrix dense() const;

 private:
  CovarianceSpec(CovarianceKind kind, Vector lambda, std::optional<Matrix> basis);

  CovarianceKind kind_;
  Vector lambda_;
  std::optional<Matrix> basis_;
  double lambda_min_;
  double lambda_max_;
};

}  // namespace gmmflow
