// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Discretization-error sweeps: Euler endpoints against a fine Heun reference
// started from the same z_1, aggregated over trajectories, plus the
// regression helpers used to read convergence rates off the results.

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "gmmflow/flow.hpp"

namespace gmmflow {

enum class MeanSampler { kBall, kHypercube, kRademacherCorners };

struct CovKind {
  enum class Type { kCycle5FullSpd, kCycle5Diagonal, kIsotropic, kUniformDiagonal };
  Type type = Type::kCycle5FullSpd;
  double sigma = 0.3;               // kIsotropic
  double lo = 0.2, hi = 0.4;        // kUniformDiagonal

  bool is_diagonal() const { return type != Type::kCycle5FullSpd; }
  /// Short label used in the sigma_tag CSV column.
  std::string tag() const;
};

/// Everything needed to rebuild a mixture instance bit-exactly.
struct InstanceConfig {
  int d = 10;
  int num_components = 10;  // J
  double radius = 1.0;      // M
  MeanSampler mean_sampler = MeanSampler::kBall;
  CovKind cov;
  std::uint64_t seed = 42;
};

/// Ball: uniform direction times M u^{1/d}. Hypercube: i.i.d. U[-M, M].
/// Corners: i.i.d. +-M (the unit-hypercube corners when M = 1).
std::vector<Vector> sample_means(MeanSampler kind, int J, double radius, int d, RngStream& rng);

/// Means use substream (derive_seed(seed, d), 0), the random basis substream 1,
/// and a random diagonal spectrum substream 2, so instances of different
/// dimension are independent and a given dimension is reproducible.
MixtureSpec build_instance(const InstanceConfig& cfg);

enum class Norm { kL2, kLinf, kBoth };

struct SweepConfig {
  std::vector<int> dims{10};
  std::vector<int> steps{5, 10, 20, 50, 100};
  std::vector<double> sigma_grid;  // only for sigma sweeps
  int n_traj = 1000;
  int num_components = 10;
  double radius = 1.0;
  MeanSampler mean_sampler = MeanSampler::kBall;
  CovKind cov;
  Norm norm = Norm::kL2;
  int ref_steps = 1000;
  Integrator approx_integrator = Integrator::kEuler;
  std::uint64_t seed = 42;
  int workers = 1;  // not part of the result

  void validate() const;
};

/// Per-trajectory errors of one (d, cov, K) grid cell, in trajectory order.
/// Entries of non-finite trajectories are NaN.
struct CellErrors {
  int d = 0;
  int steps = 0;
  std::string sigma_tag;
  std::vector<double> l2;
  std::vector<double> linf;
  int n_nonfinite = 0;
};

struct ErrorRow {
  Norm norm = Norm::kL2;  // kL2 or kLinf
  int d = 0;
  int steps = 0;
  double h = 0.0;
  std::string sigma_tag;
  double mean_error = 0.0;
  double std_error = 0.0;
  int n_traj = 0;
  int n_nonfinite = 0;
};

struct ErrorReport {
  std::vector<ErrorRow> rows;
  std::vector<CellErrors> cells;

  int total_nonfinite() const;
  /// Rows of one norm, filtered by d and/or tag when given.
  std::vector<ErrorRow> select(Norm norm, int d = -1, const std::string& tag = {}) const;
};

ErrorReport run_error_sweep(const SweepConfig& cfg);
/// Isotropic covariance for every sigma in cfg.sigma_grid; means and z_1 are
/// shared across sigma. Both norms are recorded.
ErrorReport run_sigma_sweep(const SweepConfig& cfg);

/// Header `norm,d,K,h,sigma_tag,mean_error,std_error,n_traj,n_nonfinite`.
void write_error_csv(std::ostream& os, const ErrorReport& report);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double residual = 0.0;  // sum of squared residuals
};

/// Least squares of ln y on ln x. Requires x, y > 0 and two distinct x.
LineFit fit_loglog_slope(const std::vector<std::pair<double, double>>& points);
/// y = a + b ln d; intercept = a, slope = b.
LineFit fit_log_growth(const std::vector<std::pair<double, double>>& points);
/// y = a + b d.
LineFit fit_linear(const std::vector<std::pair<double, double>>& points);

/// Fits over a finished report, grouped by norm:
///   "h_fits":     per (d, tag) with two or more K, ln error against ln h;
///   "d_fits":     per (K, tag), ln error against ln d plus the a + b ln d and
///                 a + b d regressions and error(d_max) / error(d_min);
///   "sigma_fits": per (d, K) when several tags exist, the argmin tag and
///                 whether it is interior to the grid.
/// A group with one distinct abscissa gets "slope": null and a "note".
nlohmann::json summarize(const ErrorReport& report);

std::string to_string(Norm n);
std::string to_string(MeanSampler s);

void to_json(nlohmann::json& j, const CovKind& c);
void from_json(const nlohmann::json& j, CovKind& c);
void to_json(nlohmann::json& j, const InstanceConfig& c);
void from_json(const nlohmann::json& j, InstanceConfig& c);
void to_json(nlohmann::json& j, const SweepConfig& c);
void from_json(const nlohmann::json& j, SweepConfig& c);

Norm parse_norm(const std::string& s);
MeanSampler parse_mean_sampler(const std::string& s);
/// "cycle5-spd", "cycle5-diag", "iso:<sigma>", "uniform-diag:<lo>:<hi>".
CovKind parse_cov_kind(const std::string& s);
std::string cov_kind_spec(const CovKind& c);

}  // namespace gmmflow
