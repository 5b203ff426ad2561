// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Equal-weight Gaussian mixture target with a shared SPD covariance, and the
// closed-form quantities of its forward-noised marginal
//
//   Z_t | j ~ N((1 - t) mu_j, M_t),   M_t = (1 - t)^2 Sigma + t I.
//
// All M_t algebra happens in the eigenbasis of Sigma, where M_t is diagonal
// with entries m_k(t) = (1 - t)^2 lambda_k + t. The *_eigen entry points take
// and return eigen coordinates; the plain ones accept original coordinates
// and rotate on the way in and out.

#pragma once

#include <optional>
#include <vector>

#include "gmmflow/linalg.hpp"

namespace gmmflow {

/// Log-domain mixture responsibilities at (z, t).
struct WeightVector {
  Vector log_e;  // -1/2 (z - (1-t) mu_j)^T M_t^{-1} (z - (1-t) mu_j)
  Vector w;      // softmax(log_e)

  static WeightVector from_log(Vector log_e);
};

/// Diagonal of M_t in the eigenbasis.
struct TimeCovariance {
  double t;
  Vector m;

  static TimeCovariance at(const Vector& lambda, double t);
};

class MixtureSpec {
 public:
  /// `data_radius` defaults to max_j ||mu_j||_2; an explicit value must not be
  /// smaller than that.
  MixtureSpec(std::vector<Vector> means, CovarianceSpec cov,
              std::optional<double> data_radius = std::nullopt);

  int num_components() const noexcept { return static_cast<int>(means_.size()); }
  int dim() const noexcept { return cov_.dim(); }
  const std::vector<Vector>& means() const noexcept { return means_; }
  /// d x J matrix whose columns are U^T mu_j.
  const Matrix& means_eigen() const noexcept { return means_eigen_; }
  const CovarianceSpec& cov() const noexcept { return cov_; }
  double data_radius() const noexcept { return data_radius_; }
  /// Arithmetic mean of the component means (original coordinates).
  Vector mean_of_means() const;

  TimeCovariance time_covariance(double t) const {
    return TimeCovariance::at(cov_.eigenvalues(), t);
  }

  WeightVector weights_eigen(const Vector& z, double t) const;
  WeightVector weights_eigen(const Vector& z, const TimeCovariance& tc) const;
  Vector exact_score_eigen(const Vector& z, double t) const;

  /// Softmax weights via two matrix-vector products, dropping the
  /// j-independent z^T M_t^{-1} z term from the exponents. Same w as
  /// weights_eigen up to rounding; used on the integration hot path.
  Vector responsibilities_eigen(const Vector& z, const TimeCovariance& tc) const;

 private:
  std::vector<Vector> means_;
  CovarianceSpec cov_;
  Matrix means_eigen_;
  Matrix means_eigen_sq_;  // elementwise square of means_eigen_
  double data_radius_;
};

/// Draws component j uniformly, then N(mu_j, Sigma). Returned in original
/// coordinates.
std::vector<Vector> sample_mixture(const MixtureSpec& spec, int n, RngStream& rng);

double marginal_log_density(const MixtureSpec& spec, const Vector& z, double t);

WeightVector weights(const MixtureSpec& spec, const Vector& z, double t);

Vector exact_score(const MixtureSpec& spec, const Vector& z, double t);

/// Training-free Monte-Carlo score of the empirical distribution on `data`
/// under the kernel N((1 - t) x, t I). Rejects t <= 0.
Vector mc_score(const std::vector<Vector>& data, const Vector& z, double t);

/// Analytic grad_z w_j(z, t) = (1 - t) w_j M_t^{-1} (mu_j - sum_j' w_j' mu_j').
Vector weight_gradient(const MixtureSpec& spec, const Vector& z, double t, int j);

/// Analytic d/dt w_j(z, t) at fixed z.
double weight_time_derivative(const MixtureSpec& spec, const Vector& z, double t,
                              int j);

}  // namespace gmmflow
