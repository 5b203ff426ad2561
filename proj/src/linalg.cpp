// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <vector>

#include "gmmflow/error.hpp"

namespace gmmflow {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t x) noexcept {
  x ^= x >> 30;
  x *= 0xBF58476D1CE4E5B9ULL;
  x ^= x >> 27;
  x *= 0x94D049BB133111EBULL;
  x ^= x >> 31;
  return x;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t salt) noexcept {
  return mix64(mix64(seed ^ 0x6A09E667F3BCC909ULL) + kGolden * (salt + 1));
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_index) noexcept
    : master_seed_(master_seed),
      stream_index_(stream_index),
      key_(mix64(derive_seed(master_seed, stream_index) ^ 0xD1B54A32D192ED03ULL)) {}

std::uint64_t RngStream::next_u64() noexcept {
  ++counter_;
  return mix64(key_ + counter_ * kGolden);
}

double RngStream::uniform() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_open_low() noexcept {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() noexcept {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = uniform_open_low();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t RngStream::below(std::uint64_t n) noexcept {
  const std::uint64_t threshold = (0 - n) % n;
  for (;;) {
    const std::uint64_t x = next_u64();
    if (x >= threshold) return x % n;
  }
}

EigenDecomposition symmetric_eigendecompose(const Matrix& a,
                                            const JacobiOptions& opts) {
  const Eigen::Index n = a.rows();
  require(n >= 1 && a.cols() == n, "eigendecompose: matrix must be square, d >= 1");
  const double scale = std::max(a.cwiseAbs().maxCoeff(), 1e-300);
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  require(asym <= opts.symmetry_tol * scale,
          "eigendecompose: input is not symmetric (max asymmetry " +
              std::to_string(asym) + ")");

  Matrix m = 0.5 * (a + a.transpose());
  Matrix v = Matrix::Identity(n, n);
  const double target = opts.off_diagonal_tol * m.norm();

  auto off_norm = [&]() {
    double s = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index i = 0; i < n; ++i)
        if (i != j) s += m(i, j) * m(i, j);
    return std::sqrt(s);
  };

  bool converged = off_norm() <= target;
  for (int sweep = 0; sweep < opts.max_sweeps && !converged; ++sweep) {
    for (Eigen::Index p = 0; p < n - 1; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = m(p, q);
        if (apq == 0.0) continue;
        const double theta = (m(q, q) - m(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mkp = m(k, p);
          const double mkq = m(k, q);
          m(k, p) = c * mkp - s * mkq;
          m(k, q) = s * mkp + c * mkq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double mpk = m(p, k);
          const double mqk = m(q, k);
          m(p, k) = c * mpk - s * mqk;
          m(q, k) = s * mpk + c * mqk;
        }
        m(p, q) = 0.0;
        m(q, p) = 0.0;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p);
          const double vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
    converged = off_norm() <= target;
  }
  if (!converged)
    fail(ErrorKind::kNumerical, "eigendecompose: Jacobi did not converge in " +
                                    std::to_string(opts.max_sweeps) + " sweeps");

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return m(i, i) < m(j, j); });

  EigenDecomposition out{Matrix(n, n), Vector(n)};
  for (Eigen::Index k = 0; k < n; ++k) {
    out.values(k) = m(order[k], order[k]);
    out.vectors.col(k) = v.col(order[k]);
  }
  return out;
}

Matrix random_orthogonal(int d, RngStream& rng) {
  require(d >= 1, "random_orthogonal: d must be >= 1");
  Matrix g(d, d);
  for (int j = 0; j < d; ++j)
    for (int i = 0; i < d; ++i) g(i, j) = rng.normal();
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ();
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < d; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Vector cycle5_spectrum(int d) {
  require(d >= 1, "cycle5_spectrum: d must be >= 1");
  static constexpr double kPattern[5] = {0.1, 0.2, 0.3, 0.4, 0.5};
  Vector out(d);
  for (int k = 0; k < d; ++k) out(k) = kPattern[k % 5];
  return out;
}

Vector gaussian_vector(int d, RngStream& rng) {
  require(d >= 1, "gaussian_vector: d must be >= 1");
  Vector out(d);
  for (int k = 0; k < d; ++k) out(k) = rng.normal();
  return out;
}

CovarianceSpec::CovarianceSpec(CovarianceKind kind, Vector lambda,
                               std::optional<Matrix> basis)
    : kind_(kind), lambda_(std::move(lambda)), basis_(std::move(basis)) {
  require(lambda_.size() >= 1, "covariance: dimension must be >= 1");
  for (Eigen::Index k = 0; k < lambda_.size(); ++k)
    require(std::isfinite(lambda_(k)) && lambda_(k) > 0.0,
            "covariance: eigenvalues must be finite and strictly positive");
  lambda_min_ = lambda_.minCoeff();
  lambda_max_ = lambda_.maxCoeff();
  if (basis_) {
    require(basis_->rows() == lambda_.size() && basis_->cols() == lambda_.size(),
            "covariance: basis must be d x d");
    const Eigen::Index d = lambda_.size();
    const double err =
        (basis_->transpose() * *basis_ - Matrix::Identity(d, d)).cwiseAbs().maxCoeff();
    require(err <= 1e-10, "covariance: basis is not orthogonal (max |U^T U - I| = " +
                              std::to_string(err) + ")");
  }
}

CovarianceSpec CovarianceSpec::isotropic(double sigma, int d) {
  require(d >= 1, "covariance: d must be >= 1");
  return CovarianceSpec(CovarianceKind::kIsotropic, Vector::Constant(d, sigma),
                        std::nullopt);
}

CovarianceSpec CovarianceSpec::diagonal(Vector lambda) {
  return CovarianceSpec(CovarianceKind::kDiagonal, std::move(lambda), std::nullopt);
}

CovarianceSpec CovarianceSpec::eigen_factored(Matrix basis, Vector lambda) {
  return CovarianceSpec(CovarianceKind::kEigenFactored, std::move(lambda),
                        std::move(basis));
}

CovarianceSpec CovarianceSpec::from_matrix(const Matrix& sigma,
                                           const JacobiOptions& opts) {
  EigenDecomposition eig = symmetric_eigendecompose(sigma, opts);
  return eigen_factored(std::move(eig.vectors), std::move(eig.values));
}

Vector CovarianceSpec::to_eigen(const Vector& x) const {
  if (!basis_) return x;
  return basis_->transpose() * x;
}

Vector CovarianceSpec::from_eigen(const Vector& x) const {
  if (!basis_) return x;
  return *basis_ * x;
}

Matrix CovarianceSpec::dense() const {
  if (!basis_) return lambda_.asDiagonal();
  return *basis_ * lambda_.asDiagonal() * basis_->transpose();
}

}  // namespace gmmflow
