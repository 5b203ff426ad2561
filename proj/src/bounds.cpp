// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gmmflow/error.hpp"
#include "gmmflow/format.hpp"

namespace gmmflow {

void BoundInputs::validate() const {
  require(lambda_min > 0.0 && lambda_max > 0.0, "bounds: eigenvalues must be positive");
  require(lambda_min <= lambda_max, "bounds: lambda_min exceeds lambda_max");
  require(data_radius >= 0.0 && z1_norm >= 0.0 && h >= 0.0,
          "bounds: radius, ||z1|| and h must be nonnegative");
}

double drift_lipschitz(const BoundInputs& in) {
  in.validate();
  const double m2 = in.data_radius * in.data_radius;
  return (1.0 + 2.0 * in.lambda_max + 8.0 * m2) /
         (4.0 * std::min(in.lambda_min * in.lambda_min, 0.25));
}

double linear_part_lipschitz(double sigma) {
  require(sigma > 0.0, "linear_part_lipschitz: sigma must be positive");
  return (1.0 + 2.0 * sigma) / (2.0 * std::min(sigma, 0.5));
}

double envelope_kappa(const BoundInputs& in) {
  in.validate();
  return std::max(std::sqrt(in.lambda_max), 1.0) / std::min(std::sqrt(in.lambda_min), 0.25);
}

double envelope_bound(const BoundInputs& in) {
  return envelope_kappa(in) * (in.data_radius + in.z1_norm);
}

WeightBoundConstants weight_bound_constants(const BoundInputs& in) {
  in.validate();
  return {2.0 * in.data_radius / std::min(in.lambda_min, 0.5),
          (2.0 + 2.0 * in.lambda_max) / std::min(in.lambda_min * in.lambda_min, 0.25)};
}

std::vector<std::pair<double, double>> lcurve(const std::vector<double>& sigmas) {
  std::vector<std::pair<double, double>> out;
  out.reserve(sigmas.size());
  for (double s : sigmas) out.emplace_back(s, linear_part_lipschitz(s));
  return out;
}

std::vector<double> linspace(double lo, double hi, int n) {
  require(n >= 2 && hi > lo, "linspace: need n >= 2 and hi > lo");
  std::vector<double> out(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) out[i] = lo + (hi - lo) * i / (n - 1);
  out.back() = hi;
  return out;
}

void write_lcurve_csv(std::ostream& os, const std::vector<std::pair<double, double>>& curve) {
  os << "sigma,L\n";
  for (const auto& [s, l] : curve) os << fmt17(s) << ',' << fmt17(l) << '\n';
}

}  // namespace gmmflow
