// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Explicit constants from the pathwise error analysis of the Euler scheme.

#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

namespace gmmflow {

struct BoundInputs {
  double lambda_min = 1.0;
  double lambda_max = 1.0;
  double data_radius = 0.0;  // M
  double z1_norm = 0.0;
  double h = 0.0;

  void validate() const;
};

/// (1 + 2 lambda_max + 8 M^2) / (4 min{lambda_min^2, 1/4}); uniform bound on
/// ||d f / d z||_2.
double drift_lipschitz(const BoundInputs& in);

/// sup_t ||A(t)||_2 bound for Sigma = sigma I, A(t) the linear part of the
/// drift: (1 + 2 sigma) / (2 min{sigma, 1/2}).
double linear_part_lipschitz(double sigma);

/// max{sqrt(lambda_max), 1} / min{sqrt(lambda_min), 1/4}.
double envelope_kappa(const BoundInputs& in);
/// kappa (M + ||z_1||_2): uniform bound on ||z_t||_2 along the exact flow.
double envelope_bound(const BoundInputs& in);

struct WeightBoundConstants {
  double grad_const;  // ||grad w_j|| <= grad_const * w_j
  double time_const;  // |dw_j/dt| <= time_const * (||z|| + M)^2 * w_j
};
WeightBoundConstants weight_bound_constants(const BoundInputs& in);

/// (sigma, L(sigma)) pairs for the given grid.
std::vector<std::pair<double, double>> lcurve(const std::vector<double>& sigmas);
/// `n` equally spaced sigmas on [lo, hi].
std::vector<double> linspace(double lo, double hi, int n);
/// Header `sigma,L`, 17 significant digits.
void write_lcurve_csv(std::ostream& os, const std::vector<std::pair<double, double>>& curve);

}  // namespace gmmflow
