// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Two-hidden-layer perceptron y -> x trained on labeled pairs:
//
//   F(y) = W3 gelu(W2 gelu(W1 y + b1) + b2) + b3,  gelu(u) = u Phi(u).
//
// Batches are column-major (d x n). Loss is the mean over pairs and
// coordinates of the squared residual. AdamW with decoupled decay on the
// weight matrices only.
//
// Checkpoint layout (little endian):
//   "GFMC" | u32 version = 1 | u64 n | n bytes of JSON header
//   f64 parameters in flat order (W1, b1, W2, b2, W3, b3; column-major)

#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

#include "gmmflow/labels.hpp"
#include "gmmflow/linalg.hpp"

namespace gmmflow {

struct MlpConfig {
  int d = 1;
  int hidden = 128;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int batch_size = 256;
  int patience = 50;
  int max_epochs = 1000;
  std::uint64_t seed = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  void validate() const;
};

void to_json(nlohmann::json& j, const MlpConfig& c);
void from_json(const nlohmann::json& j, MlpConfig& c);

double gelu(double u);
double gelu_derivative(double u);

struct MlpParams {
  Matrix w1, w2, w3;  // H x d, H x H, d x H
  Vector b1, b2, b3;

  static MlpParams zeros(int d, int hidden);
  /// Weights uniform in +-sqrt(1 / fan_in), biases zero.
  static MlpParams initialize(int d, int hidden, std::uint64_t seed);

  int dim() const { return static_cast<int>(w1.cols()); }
  int hidden() const { return static_cast<int>(w1.rows()); }
  std::size_t size() const;
  Vector flatten() const;
  void unflatten(const Vector& flat);
  /// 1 for weight-matrix entries, 0 for biases, in flat order.
  Vector decay_mask() const;
  bool all_finite() const;
};

Matrix forward(const MlpParams& p, const Matrix& ys);
Vector forward(const MlpParams& p, const Vector& y);

/// Mean squared error on (ys, xs); fills `grad` (same shapes as p) if given.
double loss_and_gradient(const MlpParams& p, const Matrix& ys, const Matrix& xs,
                         MlpParams* grad = nullptr);

class AdamW {
 public:
  explicit AdamW(const MlpParams& shape);
  /// One update of `p` from gradient `g`; weights first contract by
  /// (1 - lr * weight_decay), then take the bias-corrected Adam step.
  void step(MlpParams& p, const MlpParams& g, const MlpConfig& config);
  long steps() const { return t_; }

 private:
  Vector m_, v_, mask_;
  long t_ = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // index = epoch; epoch 0 is before any update
  std::vector<double> val_loss;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::string stop_reason;  // "patience" or "max_epochs"
};

void write_train_report_csv(const TrainReport& report, std::ostream& os);

struct MlpModel {
  MlpConfig config;
  MlpParams params;
  int epoch = 0;
  double val_loss = 0.0;
};

MlpModel create_model(const MlpConfig& config);

/// Trains in place and leaves the best-validation snapshot in model.params.
/// Throws kNumerical on a non-finite loss.
TrainReport train(MlpModel& model, const LabeledDataset& train_set, const LabeledDataset& val_set);

/// RMSE of the model's prediction against the stored x over all pairs.
double evaluate(const MlpParams& p, const LabeledDataset& ds);

void save_checkpoint(const MlpModel& model, const std::string& path);
MlpModel load_checkpoint(const std::string& path);

}  // namespace gmmflow
