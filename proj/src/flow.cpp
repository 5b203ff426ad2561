// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/flow.hpp"

#include <string>

#include "gmmflow/error.hpp"
#include "gmmflow/parallel.hpp"

namespace gmmflow {

namespace {

void check_config(const SolveConfig& config) {
  require(config.steps >= 1, "solve: step count K must be >= 1");
}

void check_finite(const Vector& z, int step) {
  if (!z.allFinite())
    fail(ErrorKind::kNumerical, "non-finite state at step " + std::to_string(step));
}

template <typename Drift>
SolveResult integrate(const Vector& z1, const SolveConfig& config, Drift&& f) {
  check_config(config);
  check_finite(z1, 0);
  const int steps = config.steps;
  const double h = config.step_size();
  SolveResult out;
  if (config.record_path) {
    out.path.reserve(static_cast<std::size_t>(steps) + 1);
    out.path.push_back(z1);
  }
  Vector z = z1;
  for (int k = 0; k < steps; ++k) {
    const double t = config.time_at(k);
    const Vector f0 = f(z, t);
    if (config.integrator == Integrator::kEuler) {
      z -= h * f0;
    } else {
      const Vector pred = z - h * f0;
      const Vector f1 = f(pred, config.time_at(k + 1));
      z -= (0.5 * h) * (f0 + f1);
    }
    check_finite(z, k + 1);
    if (config.record_path) out.path.push_back(z);
  }
  out.z_final = std::move(z);
  return out;
}

}  // namespace

std::string to_string(Integrator integrator) {
  return integrator == Integrator::kEuler ? "euler" : "heun";
}

Integrator parse_integrator(const std::string& name) {
  if (name == "euler") return Integrator::kEuler;
  if (name == "heun") return Integrator::kHeun;
  fail(ErrorKind::kInvalidArgument, "unknown integrator '" + name + "' (expected euler or heun)");
}

Vector drift_eigen(const MixtureSpec& spec, const Vector& z, double t) {
  const TimeCovariance tc = spec.time_covariance(t);
  const Vector w = spec.responsibilities_eigen(z, tc);
  const Vector mean = spec.means_eigen() * w;
  const Eigen::ArrayXd lin =
      0.5 * (1.0 - 2.0 * (1.0 - t) * spec.cov().eigenvalues().array()) / tc.m.array();
  return (lin * z.array() - 0.5 * (1.0 + t) * mean.array() / tc.m.array()).matrix();
}

Vector drift(const MixtureSpec& spec, const Vector& z, double t) {
  require(t >= 0.0 && t <= 1.0, "drift: time must lie in [0, 1]");
  require(z.size() == spec.dim(), "drift: dimension mismatch");
  return spec.cov().from_eigen(drift_eigen(spec, spec.cov().to_eigen(z), t));
}

SolveResult solve_eigen(const MixtureSpec& spec, const Vector& z1_eigen,
                        const SolveConfig& config) {
  require(z1_eigen.size() == spec.dim(), "solve: dimension mismatch");
  return integrate(z1_eigen, config,
                   [&](const Vector& z, double t) { return drift_eigen(spec, z, t); });
}

SolveResult solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config) {
  require(z1.size() == spec.dim(), "solve: dimension mismatch");
  SolveResult out = solve_eigen(spec, spec.cov().to_eigen(z1), config);
  out.z_final = spec.cov().from_eigen(out.z_final);
  for (Vector& z : out.path) z = spec.cov().from_eigen(z);
  if (config.record_path) out.path.front() = z1;
  return out;
}

SolveResult euler_solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config) {
  require(config.integrator == Integrator::kEuler, "euler_solve: config selects Heun");
  return solve(spec, z1, config);
}

SolveResult heun_solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config) {
  require(config.integrator == Integrator::kHeun, "heun_solve: config selects Euler");
  return solve(spec, z1, config);
}

SolveResult solve_original_basis(const MixtureSpec& spec, const Vector& z1,
                                 const SolveConfig& config) {
  require(z1.size() == spec.dim(), "solve: dimension mismatch");
  return integrate(z1, config, [&](const Vector& z, double t) { return drift(spec, z, t); });
}

Vector closed_form_single_component(const MixtureSpec& spec, const Vector& z1, double t) {
  require(spec.num_components() == 1, "closed form requires a single-component mixture");
  require(t >= 0.0 && t <= 1.0, "closed form: time must lie in [0, 1]");
  require(z1.size() == spec.dim(), "closed form: dimension mismatch");
  const TimeCovariance tc = spec.time_covariance(t);
  const Vector scaled = tc.m.cwiseSqrt().cwiseProduct(spec.cov().to_eigen(z1));
  return spec.cov().from_eigen(scaled) + (1.0 - t) * spec.means().front();
}

std::vector<SolveResult> batch_solve(const MixtureSpec& spec, int n_traj,
                                     const SolveConfig& config, std::uint64_t seed,
                                     int workers) {
  require(n_traj >= 1, "batch_solve: need at least one trajectory");
  check_config(config);
  std::vector<SolveResult> out(static_cast<std::size_t>(n_traj));
  parallel_for(out.size(), workers, [&](std::size_t m) {
    RngStream rng(seed, m);
    const Vector z1 = gaussian_vector(spec.dim(), rng);
    try {
      out[m] = solve(spec, z1, config);
    } catch (const Error& e) {
      fail(e.kind(), "trajectory " + std::to_string(m) + ": " + e.what());
    }
    out[m].trajectory_index = m;
  });
  return out;
}

}  // namespace gmmflow
