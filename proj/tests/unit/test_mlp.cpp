// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmmflow/error.hpp"
#include "gmmflow/mlp.hpp"
#include "oracles.hpp"

using namespace gmmflow;
namespace fs = std::filesystem;

namespace {

double erf_gelu(double u) { return 0.5 * u * (1.0 + std::erf(u / std::sqrt(2.0))); }

LabeledDataset dataset(const Matrix& ys, const Matrix& xs) {
  LabeledDataset ds;
  ds.d = static_cast<int>(ys.rows());
  ds.ys = ys;
  ds.xs = xs;
  return ds;
}

Matrix gaussian_matrix(int rows, int cols, RngStream& rng) {
  Matrix m(rows, cols);
  for (int j = 0; j < cols; ++j) m.col(j) = gaussian_vector(rows, rng);
  return m;
}

// Affine target x = A y + c with a small nonlinearity so the task is not
// trivially linear.
std::array<LabeledDataset, 3> toy_split(int d, int n, std::uint64_t seed) {
  RngStream rng(seed, 0);
  const Matrix a = gaussian_matrix(d, d, rng) * 0.5;
  const Vector c = gaussian_vector(d, rng);
  const Matrix ys = gaussian_matrix(d, n, rng);
  Matrix xs = (a * ys).colwise() + c;
  xs.array() += 0.2 * ys.array().sin();
  return split(dataset(ys, xs), {0.8, 0.1, 0.1}, seed);
}

MlpConfig small_config(int d, int hidden) {
  MlpConfig c;
  c.d = d;
  c.hidden = hidden;
  c.batch_size = 64;
  c.seed = 5;
  return c;
}

}  // namespace

TEST_CASE("gelu") {
  for (double u : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
    CHECK(gelu(u) == doctest::Approx(erf_gelu(u)).epsilon(1e-15));
    CHECK(gelu_derivative(u) ==
          doctest::Approx(oracle::central_diff(erf_gelu, u)).epsilon(1e-8));
  }
}

TEST_CASE("configuration") {
  MlpConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.lr == 1e-3);
  CHECK(c.weight_decay == 1e-4);
  CHECK(c.patience == 50);
  c.hidden = 0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = MlpConfig{};
  c.lr = 0.0;
  CHECK_THROWS_AS(c.validate(), Error);
  c = MlpConfig{};
  c.patience = 0;
  CHECK_THROWS_AS(c.validate(), Error);

  c = small_config(3, 7);
  c.lr = 2.5e-3;
  const nlohmann::json j = c;
  const auto back = j.get<MlpConfig>();
  CHECK(nlohmann::json(back) == j);
  CHECK(back.hidden == 7);
}

TEST_CASE("forward examples") {
  const auto zero = MlpParams::zeros(3, 5);
  CHECK(forward(zero, oracle::vec({1.0, -2.0, 0.5})).norm() == 0.0);

  auto bias_only = MlpParams::zeros(2, 4);
  bias_only.b3 = oracle::vec({0.3, -0.7});
  CHECK(forward(bias_only, oracle::vec({5.0, 6.0})) == bias_only.b3);

  auto p = MlpParams::zeros(1, 1);
  p.w1(0, 0) = 0.8;
  p.b1(0) = -0.1;
  p.w2(0, 0) = -1.3;
  p.b2(0) = 0.4;
  p.w3(0, 0) = 2.1;
  p.b3(0) = 0.05;
  for (double y : {-1.5, 0.0, 0.9}) {
    const double want = 2.1 * erf_gelu(-1.3 * erf_gelu(0.8 * y - 0.1) + 0.4) + 0.05;
    CHECK(std::abs(forward(p, oracle::vec({y}))(0) - want) <= 1e-12);
  }

  const auto q = MlpParams::initialize(3, 6, 1);
  RngStream rng(1, 1);
  const Matrix ys = gaussian_matrix(3, 4, rng);
  const Matrix batch = forward(q, ys);
  for (int m = 0; m < 4; ++m) CHECK((batch.col(m) - forward(q, Vector(ys.col(m)))).norm() <= 1e-15);
  CHECK_THROWS_AS(forward(q, oracle::vec({1.0, 2.0})), Error);
}

TEST_CASE("initialization") {
  const auto p = MlpParams::initialize(4, 16, 9);
  CHECK(p.w1.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 4));
  CHECK(p.w2.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 16));
  CHECK(p.w3.cwiseAbs().maxCoeff() <= std::sqrt(1.0 / 16));
  CHECK(p.b1.norm() == 0.0);
  CHECK(p.b3.norm() == 0.0);
  CHECK(p.size() == 4 * 16 + 16 + 16 * 16 + 16 + 16 * 4 + 4);
  CHECK(MlpParams::initialize(4, 16, 9).flatten() == p.flatten());
  CHECK(MlpParams::initialize(4, 16, 10).flatten() != p.flatten());

  auto q = MlpParams::zeros(4, 16);
  q.unflatten(p.flatten());
  CHECK(q.flatten() == p.flatten());
  CHECK(q.w2 == p.w2);
  const Vector mask = p.decay_mask();
  CHECK(mask.sum() == doctest::Approx(4 * 16 + 16 * 16 + 16 * 4));
}

TEST_CASE("backpropagation matches finite differences") {
  RngStream rng(2, 0);
  int checked = 0;
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 1 + static_cast<int>(rng.below(4));
    const int hidden = 1 + static_cast<int>(rng.below(8));
    auto p = MlpParams::initialize(d, hidden, trial);
    // Nonzero biases so every gradient block is exercised.
    Vector flat = p.flatten();
    for (Eigen::Index i = 0; i < flat.size(); ++i) flat(i) += 0.3 * rng.normal();
    p.unflatten(flat);
    const Matrix ys = gaussian_matrix(d, 7, rng);
    const Matrix xs = gaussian_matrix(d, 7, rng);

    MlpParams grad = MlpParams::zeros(d, hidden);
    const double loss = loss_and_gradient(p, ys, xs, &grad);
    CHECK(loss == doctest::Approx((forward(p, ys) - xs).squaredNorm() / (7.0 * d)).epsilon(1e-14));
    const Vector analytic = grad.flatten();
    const Vector fd = oracle::gradient(
        [&](const Vector& theta) {
          auto q = p;
          q.unflatten(theta);
          return loss_and_gradient(q, ys, xs);
        },
        flat);
    CHECK(oracle::mixed_error(analytic, fd, 1e-3) <= 1e-5);
    for (Eigen::Index i = 0; i < fd.size(); ++i)
      CHECK(std::abs(analytic(i) - fd(i)) <= 1e-5 * std::max(std::abs(fd(i)), 1e-2));
    ++checked;
  }
  CHECK(checked == 8);
}

TEST_CASE("weight decay is decoupled from the gradient") {
  MlpConfig c = small_config(2, 3);
  c.lr = 0.01;
  c.weight_decay = 0.1;
  auto p = MlpParams::initialize(2, 3, 4);
  p.b1.setConstant(0.5);
  const auto before = p;
  AdamW opt(p);
  opt.step(p, MlpParams::zeros(2, 3), c);
  CHECK(opt.steps() == 1);
  const double factor = 1.0 - c.lr * c.weight_decay;
  CHECK((p.w1 - factor * before.w1).cwiseAbs().maxCoeff() <= 1e-16);
  CHECK((p.w2 - factor * before.w2).cwiseAbs().maxCoeff() <= 1e-16);
  CHECK(p.b1 == before.b1);
  CHECK(p.b3 == before.b3);

  // One hand-stepped update: the bias-corrected moments are g and g^2.
  auto q = before;
  auto g = MlpParams::zeros(2, 3);
  g.w1(1, 0) = 0.37;
  g.b2(2) = -0.2;
  AdamW fresh(q);
  fresh.step(q, g, c);
  const double w = before.w1(1, 0);
  CHECK(q.w1(1, 0) == doctest::Approx(w * factor - c.lr * 0.37 / (0.37 + c.eps)).epsilon(1e-15));
  CHECK(q.b2(2) ==
        doctest::Approx(before.b2(2) + c.lr * 0.2 / (0.2 + c.eps)).epsilon(1e-15));
  CHECK(q.w3(0, 0) == doctest::Approx(before.w3(0, 0) * factor).epsilon(1e-15));
}

TEST_CASE("training fits an affine noise-to-sample map") {
  RngStream rng(77, 0);
  const auto spec = oracle::random_mixture(4, 1, 0.2, 1.0, 1.0, rng);
  SolveConfig sc;
  sc.steps = 200;
  sc.integrator = Integrator::kHeun;
  const auto parts = split(generate_labels(spec, 4000, sc, 1), {0.8, 0.1, 0.1}, 2);
  MlpConfig c;
  c.d = 4;
  c.hidden = 64;
  c.batch_size = 128;
  c.max_epochs = 100;
  c.seed = 3;
  auto model = create_model(c);
  const auto report = train(model, parts[0], parts[1]);
  CHECK(evaluate(model.params, parts[2]) < 0.05);
  CHECK(report.train_loss[5] < report.train_loss[0]);
}

TEST_CASE("early stopping returns the best snapshot") {
  const auto parts = toy_split(3, 600, 11);
  MlpConfig c = small_config(3, 8);
  c.lr = 0.05;
  c.patience = 3;
  c.max_epochs = 400;
  auto model = create_model(c);
  const auto report = train(model, parts[0], parts[1]);
  REQUIRE(report.val_loss.size() == report.train_loss.size());
  const int last = static_cast<int>(report.val_loss.size()) - 1;
  const double min_val = *std::min_element(report.val_loss.begin(), report.val_loss.end());
  CHECK(report.best_val_loss == min_val);
  CHECK(report.val_loss[report.best_epoch] == min_val);
  CHECK(model.val_loss == min_val);
  CHECK(model.epoch == report.best_epoch);
  const double rmse_val = evaluate(model.params, parts[1]);
  CHECK(rmse_val * rmse_val == doctest::Approx(min_val).epsilon(1e-10));
  CHECK(report.stop_reason == "patience");
  CHECK(last - report.best_epoch == c.patience);
  CHECK(model.params.all_finite());

  std::ostringstream os;
  write_train_report_csv(report, os);
  const std::string csv = os.str();
  CHECK(csv.rfind("epoch,train_loss,val_loss\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == last + 2);
}

TEST_CASE("training stops at the epoch cap") {
  const auto parts = toy_split(2, 300, 12);
  MlpConfig c = small_config(2, 4);
  c.max_epochs = 7;
  auto model = create_model(c);
  const auto report = train(model, parts[0], parts[1]);
  CHECK(report.stop_reason == "max_epochs");
  CHECK(report.train_loss.size() == 8);
}

TEST_CASE("training is deterministic") {
  const auto parts = toy_split(3, 400, 13);
  MlpConfig c = small_config(3, 8);
  c.max_epochs = 10;
  auto a = create_model(c);
  auto b = create_model(c);
  const auto ra = train(a, parts[0], parts[1]);
  const auto rb = train(b, parts[0], parts[1]);
  CHECK(a.params.flatten() == b.params.flatten());
  CHECK(ra.val_loss == rb.val_loss);
  c.seed = 6;
  auto other = create_model(c);
  train(other, parts[0], parts[1]);
  CHECK(other.params.flatten() != a.params.flatten());
}

TEST_CASE("training rejects bad data") {
  auto parts = toy_split(2, 200, 14);
  MlpConfig c = small_config(2, 4);
  c.max_epochs = 3;
  auto model = create_model(c);
  parts[0].xs(1, 3) = NAN;
  try {
    train(model, parts[0], parts[1]);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kNumerical);
  }
  const auto other = toy_split(3, 200, 14);
  auto fresh = create_model(c);
  CHECK_THROWS_AS(train(fresh, other[0], other[1]), Error);
}

TEST_CASE("evaluate") {
  RngStream rng(3, 0);
  const Matrix ys = gaussian_matrix(3, 10, rng);
  const auto p = MlpParams::initialize(3, 5, 2);
  CHECK(evaluate(p, dataset(ys, forward(p, ys))) == 0.0);

  Matrix xs = gaussian_matrix(3, 10, rng);
  for (int m = 0; m < 10; ++m) xs.col(m).normalize();
  // Zero model: residual equals target; unit-norm columns give RMSE 1/sqrt(d).
  CHECK(evaluate(MlpParams::zeros(3, 5), dataset(ys, xs)) ==
        doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-14));

  Matrix ys2 = ys, xs2 = xs;
  ys2.col(0).swap(ys2.col(9));
  xs2.col(0).swap(xs2.col(9));
  CHECK(evaluate(p, dataset(ys2, xs2)) == doctest::Approx(evaluate(p, dataset(ys, xs))).epsilon(1e-15));
}

TEST_CASE("checkpoints") {
  const fs::path dir = fs::temp_directory_path() / "gmmflow_mlp_ckpt";
  fs::create_directories(dir);
  const std::string path = (dir / "m.gfmc").string();

  const auto parts = toy_split(2, 200, 15);
  MlpConfig c = small_config(2, 6);
  c.max_epochs = 4;
  auto model = create_model(c);
  train(model, parts[0], parts[1]);
  save_checkpoint(model, path);
  const auto back = load_checkpoint(path);
  CHECK(back.params.flatten() == model.params.flatten());
  CHECK(back.epoch == model.epoch);
  CHECK(back.val_loss == model.val_loss);
  CHECK(nlohmann::json(back.config) == nlohmann::json(model.config));

  std::string bytes;
  {
    std::ifstream in(path, std::ios::binary);
    bytes.assign(std::istreambuf_iterator<char>(in), {});
  }
  auto expect_format = [&](const std::string& content) {
    std::ofstream(path, std::ios::binary) << content;
    try {
      load_checkpoint(path);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::kFormat);
    }
  };
  std::string magic = bytes;
  magic[1] = 'X';
  expect_format(magic);
  expect_format(bytes.substr(0, bytes.size() - 8));
  expect_format(bytes + "extra");
  try {
    load_checkpoint((dir / "absent.gfmc").string());
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::kIo);
  }
  fs::remove_all(dir);
}
