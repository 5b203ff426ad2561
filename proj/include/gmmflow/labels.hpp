// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Labeled noise-to-sample pairs (y_m, x_m): y_m ~ N(0, I) from substream
// (seed, m) and x_m the reverse-flow endpoint started at y_m.
//
// Binary layout (little endian):
//   "GFLB" | u32 version = 1 | u32 d | u64 count
//   count x (y[0..d), x[0..d)) as f64
//   u64 n | n bytes of JSON provenance

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "gmmflow/flow.hpp"

namespace gmmflow {

struct LabeledDataset {
  int d = 0;
  Matrix ys;  // d x count, column m is y_m
  Matrix xs;  // d x count, column m is x_m
  nlohmann::json provenance = nlohmann::json::object();

  std::size_t size() const { return static_cast<std::size_t>(ys.cols()); }
  void validate() const;
  /// FNV-1a over d, count, the pair data and the provenance text.
  std::string digest() const;
};

/// Digest of the means, covariance and solver settings that produce labels.
std::string spec_digest(const MixtureSpec& spec, const SolveConfig& config);

/// Provenance records spec_digest, the solver settings and the seed; `extra`
/// is merged in (e.g. the instance recipe).
LabeledDataset generate_labels(const MixtureSpec& spec, int count, const SolveConfig& config,
                               std::uint64_t seed, int workers = 1,
                               const nlohmann::json& extra = nlohmann::json::object());

/// Seeded permutation split; validation and test sizes are floor(n f), the
/// remainder goes to training.
std::array<LabeledDataset, 3> split(const LabeledDataset& ds, std::array<double, 3> fractions,
                                    std::uint64_t seed);

void save(const LabeledDataset& ds, const std::string& path);
/// Throws kFormat on bad magic/version, truncation or (when expected_d > 0)
/// a dimension mismatch; kIo when the file cannot be read.
LabeledDataset load(const std::string& path, int expected_d = 0);

/// Header y_0..y_{d-1},x_0..x_{d-1}; 17 significant digits.
void export_csv(const LabeledDataset& ds, std::ostream& os);
LabeledDataset import_csv(std::istream& is);

/// Root mean square over all pairs and coordinates of a - b.
double rmse(const Matrix& a, const Matrix& b);

/// RMSE between the stored labels and endpoints re-solved from the same y
/// with `approx` (the discretization error of `approx` against the labels).
double discretization_rmse(const MixtureSpec& spec, const LabeledDataset& ds,
                           const SolveConfig& approx, int workers = 1);

}  // namespace gmmflow
