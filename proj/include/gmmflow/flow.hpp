// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Reverse probability-flow ODE with the exact mixture score substituted in,
//
//   dz/dt = f(z, t) = 1/2 (I - 2(1-t) Sigma) M_t^{-1} z
//                     - (1+t)/2 M_t^{-1} sum_j mu_j w_j(z, t),
//
// integrated backward from t = 1 to t = 0 on the grid t_k = 1 - k/K. The
// drift is regular on all of [0, 1], including t = 1 where M_1 = I.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gmmflow/gmm.hpp"

namespace gmmflow {

enum class Integrator { kEuler, kHeun };

std::string to_string(Integrator integrator);
/// "euler" or "heun".
Integrator parse_integrator(const std::string& name);

struct SolveConfig {
  int steps = 100;  // K; h = 1 / K
  Integrator integrator = Integrator::kEuler;
  bool record_path = false;

  double step_size() const { return 1.0 / static_cast<double>(steps); }
  double time_at(int k) const {
    return 1.0 - static_cast<double>(k) / static_cast<double>(steps);
  }
};

struct SolveResult {
  Vector z_final;
  std::vector<Vector> path;  // K + 1 states when recorded, path[0] = z_1
  std::size_t trajectory_index = 0;
};

Vector drift(const MixtureSpec& spec, const Vector& z, double t);
/// Drift in eigen coordinates of Sigma.
Vector drift_eigen(const MixtureSpec& spec, const Vector& z, double t);

/// Integrates in eigen coordinates from eigen-coordinate initial state.
/// Throws kNumerical on a non-finite state, naming the step.
SolveResult solve_eigen(const MixtureSpec& spec, const Vector& z1_eigen,
                        const SolveConfig& config);

/// Original-coordinate entry points. They rotate into the eigenbasis,
/// integrate there, and rotate the endpoint (and path) back.
SolveResult euler_solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config);
SolveResult heun_solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config);
SolveResult solve(const MixtureSpec& spec, const Vector& z1, const SolveConfig& config);

/// Same scheme, stepping with drift() in original coordinates throughout.
/// O(d^2) per step; used to cross-check the eigenbasis path.
SolveResult solve_original_basis(const MixtureSpec& spec, const Vector& z1,
                                 const SolveConfig& config);

/// Exact flow for J = 1: z_t = M_t^{1/2} z_1 + (1 - t) mu.
Vector closed_form_single_component(const MixtureSpec& spec, const Vector& z1, double t);

/// Trajectory m starts from gaussian_vector(d, RngStream(seed, m)) in original
/// coordinates. Results are ordered by m and independent of `workers`.
std::vector<SolveResult> batch_solve(const MixtureSpec& spec, int n_traj,
                                     const SolveConfig& config, std::uint64_t seed,
                                     int workers = 1);

}  // namespace gmmflow
