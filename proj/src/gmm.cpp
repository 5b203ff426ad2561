// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/gmm.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "gmmflow/error.hpp"

namespace gmmflow {

namespace {

void check_time(double t) {
  require(t >= 0.0 && t <= 1.0, "time must lie in [0, 1], got " + std::to_string(t));
}

void check_dim(const MixtureSpec& spec, const Vector& z) {
  require(z.size() == spec.dim(), "vector dimension " + std::to_string(z.size()) +
                                      " does not match mixture dimension " +
                                      std::to_string(spec.dim()));
}

double log_sum_exp(const Vector& v) {
  const double mx = v.maxCoeff();
  return mx + std::log((v.array() - mx).exp().sum());
}

}  // namespace

WeightVector WeightVector::from_log(Vector log_e) {
  // exp underflows to subnormals below this offset; those weights cannot
  // change the normalized result in double precision.
  constexpr double kCutoff = -708.0;
  const double mx = log_e.maxCoeff();
  Vector w(log_e.size());
  for (Eigen::Index j = 0; j < log_e.size(); ++j) {
    const double x = log_e(j) - mx;
    w(j) = x < kCutoff ? 0.0 : std::exp(x);
  }
  w /= w.sum();
  return WeightVector{std::move(log_e), std::move(w)};
}

TimeCovariance TimeCovariance::at(const Vector& lambda, double t) {
  const double s = 1.0 - t;
  return TimeCovariance{t, (s * s) * lambda.array() + t};
}

MixtureSpec::MixtureSpec(std::vector<Vector> means, CovarianceSpec cov,
                         std::optional<double> data_radius)
    : means_(std::move(means)), cov_(std::move(cov)) {
  require(!means_.empty(), "mixture: need at least one component");
  const int d = cov_.dim();
  double radius = 0.0;
  for (const Vector& mu : means_) {
    require(mu.size() == d, "mixture: every mean must have dimension " + std::to_string(d));
    require(mu.allFinite(), "mixture: means must be finite");
    radius = std::max(radius, mu.norm());
  }
  if (data_radius) {
    require(*data_radius >= 0.0, "mixture: data radius must be nonnegative");
    require(radius <= *data_radius * (1.0 + 1e-12),
            "mixture: a mean lies outside the declared data radius");
    data_radius_ = *data_radius;
  } else {
    data_radius_ = radius;
  }
  means_eigen_.resize(d, num_components());
  for (int j = 0; j < num_components(); ++j) means_eigen_.col(j) = cov_.to_eigen(means_[j]);
  means_eigen_sq_ = means_eigen_.array().square().matrix();
}

Vector MixtureSpec::mean_of_means() const {
  Vector acc = Vector::Zero(dim());
  for (const Vector& mu : means_) acc += mu;
  return acc / static_cast<double>(num_components());
}

WeightVector MixtureSpec::weights_eigen(const Vector& z, const TimeCovariance& tc) const {
  const double s = 1.0 - tc.t;
  const int nc = num_components();
  Vector log_e(nc);
  for (int j = 0; j < nc; ++j) {
    log_e(j) = -0.5 * ((z - s * means_eigen_.col(j)).array().square() / tc.m.array()).sum();
  }
  return WeightVector::from_log(std::move(log_e));
}

Vector MixtureSpec::responsibilities_eigen(const Vector& z, const TimeCovariance& tc) const {
  const double s = 1.0 - tc.t;
  const Vector inv_m = tc.m.cwiseInverse();
  const Vector cross = means_eigen_.transpose() * z.cwiseProduct(inv_m);
  const Vector quad = means_eigen_sq_.transpose() * inv_m;
  return WeightVector::from_log(s * cross - (0.5 * s * s) * quad).w;
}

WeightVector MixtureSpec::weights_eigen(const Vector& z, double t) const {
  return weights_eigen(z, time_covariance(t));
}

Vector MixtureSpec::exact_score_eigen(const Vector& z, double t) const {
  const TimeCovariance tc = time_covariance(t);
  const WeightVector wv = weights_eigen(z, tc);
  const Vector mean = means_eigen_ * wv.w;
  return ((1.0 - t) * mean - z).cwiseQuotient(tc.m);
}

std::vector<Vector> sample_mixture(const MixtureSpec& spec, int n, RngStream& rng) {
  require(n >= 1, "sample_mixture: n must be >= 1");
  const int d = spec.dim();
  const Vector sqrt_lambda = spec.cov().eigenvalues().cwiseSqrt();
  std::vector<Vector> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const auto j = static_cast<int>(rng.below(static_cast<std::uint64_t>(spec.num_components())));
    const Vector g = gaussian_vector(d, rng);
    out.push_back(spec.means()[j] + spec.cov().from_eigen(sqrt_lambda.cwiseProduct(g)));
  }
  return out;
}

double marginal_log_density(const MixtureSpec& spec, const Vector& z, double t) {
  check_time(t);
  check_dim(spec, z);
  const TimeCovariance tc = spec.time_covariance(t);
  const WeightVector wv = spec.weights_eigen(spec.cov().to_eigen(z), tc);
  const double log_norm =
      -0.5 * (tc.m.array() * (2.0 * std::numbers::pi)).log().sum();
  return log_sum_exp(wv.log_e) - std::log(static_cast<double>(spec.num_components())) +
         log_norm;
}

WeightVector weights(const MixtureSpec& spec, const Vector& z, double t) {
  check_time(t);
  check_dim(spec, z);
  return spec.weights_eigen(spec.cov().to_eigen(z), t);
}

Vector exact_score(const MixtureSpec& spec, const Vector& z, double t) {
  check_time(t);
  check_dim(spec, z);
  return spec.cov().from_eigen(spec.exact_score_eigen(spec.cov().to_eigen(z), t));
}

Vector mc_score(const std::vector<Vector>& data, const Vector& z, double t) {
  require(!data.empty(), "mc_score: data set is empty");
  require(t > 0.0 && t <= 1.0, "mc_score: t must lie in (0, 1]; the kernel is singular at t = 0");
  const double s = 1.0 - t;
  const auto n = static_cast<Eigen::Index>(data.size());
  Vector log_w(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    require(data[j].size() == z.size(), "mc_score: dimension mismatch");
    log_w(j) = -(z - s * data[j]).squaredNorm() / (2.0 * t);
  }
  const Vector w = WeightVector::from_log(std::move(log_w)).w;
  Vector out = Vector::Zero(z.size());
  for (Eigen::Index j = 0; j < n; ++j) out -= w(j) * (z - s * data[j]) / t;
  return out;
}

Vector weight_gradient(const MixtureSpec& spec, const Vector& z, double t, int j) {
  check_time(t);
  check_dim(spec, z);
  require(j >= 0 && j < spec.num_components(), "weight_gradient: component index out of range");
  const TimeCovariance tc = spec.time_covariance(t);
  const Vector ze = spec.cov().to_eigen(z);
  const Vector w = spec.weights_eigen(ze, tc).w;
  const Vector mean = spec.means_eigen() * w;
  const Vector g = ((1.0 - t) * w(j)) * (spec.means_eigen().col(j) - mean).cwiseQuotient(tc.m);
  return spec.cov().from_eigen(g);
}

double weight_time_derivative(const MixtureSpec& spec, const Vector& z, double t, int j) {
  check_time(t);
  check_dim(spec, z);
  require(j >= 0 && j < spec.num_components(),
          "weight_time_derivative: component index out of range");
  const TimeCovariance tc = spec.time_covariance(t);
  const Vector ze = spec.cov().to_eigen(z);
  const Vector w = spec.weights_eigen(ze, tc).w;
  const double s = 1.0 - t;
  // d m_k / dt = 1 - 2 (1 - t) lambda_k
  const Eigen::ArrayXd dm = 1.0 - 2.0 * s * spec.cov().eigenvalues().array();
  const int nc = spec.num_components();
  Vector dlog(nc);
  for (int i = 0; i < nc; ++i) {
    const Eigen::ArrayXd mu = spec.means_eigen().col(i).array();
    const Eigen::ArrayXd r = ze.array() - s * mu;
    dlog(i) = -(r * mu / tc.m.array()).sum() +
              0.5 * (r.square() * dm / tc.m.array().square()).sum();
  }
  return w(j) * (dlog(j) - w.dot(dlog));
}

}  // namespace gmmflow
