// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Independent reference computations for the test suites: central
// differences, composite Simpson quadrature, spectral norms and random
// instance builders. Nothing here calls the code under test except through
// the function objects handed in.

#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "gmmflow/gmm.hpp"
#include "gmmflow/linalg.hpp"

namespace oracle {

using gmmflow::Matrix;
using gmmflow::Vector;

inline double central_diff(const std::function<double(double)>& f, double x, double step = 1e-5) {
  return (f(x + step) - f(x - step)) / (2.0 * step);
}

inline Vector gradient(const std::function<double(const Vector&)>& f, const Vector& x,
                       double step = 1e-5) {
  Vector g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    g(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return g;
}

inline Matrix jacobian(const std::function<Vector(const Vector&)>& f, const Vector& x,
                       double step = 1e-5) {
  const Vector f0 = f(x);
  Matrix jac(f0.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vector xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    jac.col(i) = (f(xp) - f(xm)) / (2.0 * step);
  }
  return jac;
}

/// Largest singular value, computed by Eigen's SVD.
inline double spectral_norm(const Matrix& a) {
  return Eigen::JacobiSVD<Matrix>(a).singularValues()(0);
}

/// Composite Simpson rule with n (even) panels on [a, b].
inline double simpson(const std::function<double(double)>& f, double a, double b, int n) {
  if (n % 2 != 0) ++n;
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += (i % 2 == 1 ? 4.0 : 2.0) * f(a + i * h);
  return s * h / 3.0;
}

inline double rel_error(const Vector& got, const Vector& want) {
  const double scale = std::max(want.norm(), 1e-300);
  return (got - want).norm() / scale;
}

inline double rel_error(double got, double want) {
  return std::abs(got - want) / std::max(std::abs(want), 1e-300);
}

/// Relative error with an absolute floor for quantities that may vanish.
inline double mixed_error(const Vector& got, const Vector& want, double floor) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

inline double mixed_error(double got, double want, double floor) {
  return std::abs(got - want) / std::max(std::abs(want), floor);
}

inline double uniform(gmmflow::RngStream& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.uniform();
}

/// Random full-covariance mixture: spectrum in [lam_lo, lam_hi], means
/// uniform in a ball of radius `radius`, random orthogonal eigenbasis.
inline gmmflow::MixtureSpec random_mixture(int d, int J, double lam_lo, double lam_hi,
                                           double radius, gmmflow::RngStream& rng) {
  Vector lambda(d);
  for (int k = 0; k < d; ++k) lambda(k) = uniform(rng, lam_lo, lam_hi);
  std::vector<Vector> means;
  for (int j = 0; j < J; ++j) {
    Vector dir = gmmflow::gaussian_vector(d, rng);
    dir /= dir.norm();
    means.push_back(radius * std::pow(rng.uniform(), 1.0 / d) * dir);
  }
  return gmmflow::MixtureSpec(
      std::move(means),
      gmmflow::CovarianceSpec::eigen_factored(gmmflow::random_orthogonal(d, rng), lambda));
}

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

}  // namespace oracle
