// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/mlp.hpp"

#include <cmath>
#include <cstring>
#include <numeric>
#include <ostream>

#include "gmmflow/error.hpp"
#include "gmmflow/format.hpp"
#include "gmmflow/le_bytes.hpp"

namespace gmmflow {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'M', 'C'};
constexpr std::uint32_t kVersion = 1;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

Matrix gelu_m(const Matrix& a) {
  return a.unaryExpr([](double u) { return gelu(u); });
}

// Standard normal CDF, shared by the activation and its derivative.
Matrix normal_cdf(const Matrix& a) {
  return a.unaryExpr([](double u) { return 0.5 * (1.0 + std::erf(u * kInvSqrt2)); });
}

Matrix gelu_d(const Matrix& a, const Matrix& cdf) {
  return cdf + a.unaryExpr([](double u) { return u * kInvSqrt2Pi * std::exp(-0.5 * u * u); });
}

Matrix uniform_matrix(Eigen::Index rows, Eigen::Index cols, double bound, RngStream& rng) {
  Matrix w(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) w(r, c) = bound * (2.0 * rng.uniform() - 1.0);
  return w;
}

template <typename F>
void for_each_block(const MlpParams& p, F&& f) {
  f(p.w1.data(), p.w1.size(), true);
  f(p.b1.data(), p.b1.size(), false);
  f(p.w2.data(), p.w2.size(), true);
  f(p.b2.data(), p.b2.size(), false);
  f(p.w3.data(), p.w3.size(), true);
  f(p.b3.data(), p.b3.size(), false);
}

void check_dataset(const LabeledDataset& ds, int d, const char* role) {
  ds.validate();
  require(ds.d == d, std::string(role) + " set dimension " + std::to_string(ds.d) +
                         " does not match model dimension " + std::to_string(d));
}

}  // namespace

void MlpConfig::validate() const {
  require(d >= 1, "mlp: dimension must be >= 1");
  require(hidden >= 1, "mlp: hidden width must be >= 1");
  require(lr > 0.0 && std::isfinite(lr), "mlp: learning rate must be positive");
  require(weight_decay > 0.0 && std::isfinite(weight_decay), "mlp: weight decay must be positive");
  require(batch_size >= 1, "mlp: batch size must be >= 1");
  require(patience >= 1, "mlp: patience must be >= 1");
  require(max_epochs >= 1, "mlp: max_epochs must be >= 1");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "mlp: moment decay rates must lie in [0, 1)");
  require(eps > 0.0, "mlp: epsilon must be positive");
}

void to_json(nlohmann::json& j, const MlpConfig& c) {
  j = {{"d", c.d},           {"hidden", c.hidden},   {"lr", c.lr},
       {"weight_decay", c.weight_decay}, {"batch_size", c.batch_size},
       {"patience", c.patience}, {"max_epochs", c.max_epochs}, {"seed", c.seed},
       {"beta1", c.beta1},   {"beta2", c.beta2},     {"eps", c.eps}};
}

void from_json(const nlohmann::json& j, MlpConfig& c) {
  c.d = j.value("d", c.d);
  c.hidden = j.value("hidden", c.hidden);
  c.lr = j.value("lr", c.lr);
  c.weight_decay = j.value("weight_decay", c.weight_decay);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.patience = j.value("patience", c.patience);
  c.max_epochs = j.value("max_epochs", c.max_epochs);
  c.seed = j.value("seed", c.seed);
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.eps = j.value("eps", c.eps);
}

double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * kInvSqrt2)); }

double gelu_derivative(double u) {
  return 0.5 * (1.0 + std::erf(u * kInvSqrt2)) + u * kInvSqrt2Pi * std::exp(-0.5 * u * u);
}

MlpParams MlpParams::zeros(int d, int hidden) {
  require(d >= 1 && hidden >= 1, "mlp: dimensions must be >= 1");
  MlpParams p;
  p.w1 = Matrix::Zero(hidden, d);
  p.w2 = Matrix::Zero(hidden, hidden);
  p.w3 = Matrix::Zero(d, hidden);
  p.b1 = Vector::Zero(hidden);
  p.b2 = Vector::Zero(hidden);
  p.b3 = Vector::Zero(d);
  return p;
}

MlpParams MlpParams::initialize(int d, int hidden, std::uint64_t seed) {
  MlpParams p = zeros(d, hidden);
  RngStream rng(derive_seed(seed, 0), 0);
  p.w1 = uniform_matrix(hidden, d, std::sqrt(1.0 / d), rng);
  p.w2 = uniform_matrix(hidden, hidden, std::sqrt(1.0 / hidden), rng);
  p.w3 = uniform_matrix(d, hidden, std::sqrt(1.0 / hidden), rng);
  return p;
}

std::size_t MlpParams::size() const {
  std::size_t n = 0;
  for_each_block(*this, [&](const double*, Eigen::Index len, bool) { n += len; });
  return n;
}

Vector MlpParams::flatten() const {
  Vector flat(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for_each_block(*this, [&](const double* src, Eigen::Index len, bool) {
    flat.segment(at, len) = Eigen::Map<const Vector>(src, len);
    at += len;
  });
  return flat;
}

void MlpParams::unflatten(const Vector& flat) {
  require(flat.size() == static_cast<Eigen::Index>(size()), "mlp: flat parameter size mismatch");
  Eigen::Index at = 0;
  for_each_block(*this, [&](const double* dst, Eigen::Index len, bool) {
    Eigen::Map<Vector>(const_cast<double*>(dst), len) = flat.segment(at, len);
    at += len;
  });
}

Vector MlpParams::decay_mask() const {
  Vector mask(static_cast<Eigen::Index>(size()));
  Eigen::Index at = 0;
  for_each_block(*this, [&](const double*, Eigen::Index len, bool is_weight) {
    mask.segment(at, len).setConstant(is_weight ? 1.0 : 0.0);
    at += len;
  });
  return mask;
}

bool MlpParams::all_finite() const {
  return w1.allFinite() && w2.allFinite() && w3.allFinite() && b1.allFinite() &&
         b2.allFinite() && b3.allFinite();
}

Matrix forward(const MlpParams& p, const Matrix& ys) {
  require(ys.rows() == p.dim(), "mlp forward: input dimension " + std::to_string(ys.rows()) +
                                    " does not match model dimension " +
                                    std::to_string(p.dim()));
  const Matrix h1 = gelu_m((p.w1 * ys).colwise() + p.b1);
  const Matrix h2 = gelu_m((p.w2 * h1).colwise() + p.b2);
  return (p.w3 * h2).colwise() + p.b3;
}

Vector forward(const MlpParams& p, const Vector& y) {
  return forward(p, Matrix(y)).col(0);
}

double loss_and_gradient(const MlpParams& p, const Matrix& ys, const Matrix& xs,
                         MlpParams* grad) {
  require(ys.rows() == p.dim() && xs.rows() == p.dim() && ys.cols() == xs.cols() &&
              ys.cols() > 0,
          "mlp loss: batch shape mismatch");
  const Matrix a1 = (p.w1 * ys).colwise() + p.b1;
  const Matrix c1 = normal_cdf(a1);
  const Matrix h1 = a1.cwiseProduct(c1);
  const Matrix a2 = (p.w2 * h1).colwise() + p.b2;
  const Matrix c2 = normal_cdf(a2);
  const Matrix h2 = a2.cwiseProduct(c2);
  const Matrix resid = ((p.w3 * h2).colwise() + p.b3) - xs;
  const double scale = 1.0 / static_cast<double>(resid.size());
  const double loss = resid.squaredNorm() * scale;
  if (grad == nullptr) return loss;

  const Matrix d_out = (2.0 * scale) * resid;
  grad->w3 = d_out * h2.transpose();
  grad->b3 = d_out.rowwise().sum();
  const Matrix d_a2 = (p.w3.transpose() * d_out).cwiseProduct(gelu_d(a2, c2));
  grad->w2 = d_a2 * h1.transpose();
  grad->b2 = d_a2.rowwise().sum();
  const Matrix d_a1 = (p.w2.transpose() * d_a2).cwiseProduct(gelu_d(a1, c1));
  grad->w1 = d_a1 * ys.transpose();
  grad->b1 = d_a1.rowwise().sum();
  return loss;
}

AdamW::AdamW(const MlpParams& shape)
    : m_(Vector::Zero(static_cast<Eigen::Index>(shape.size()))),
      v_(Vector::Zero(static_cast<Eigen::Index>(shape.size()))),
      mask_(shape.decay_mask()) {}

void AdamW::step(MlpParams& p, const MlpParams& g, const MlpConfig& c) {
  ++t_;
  Vector theta = p.flatten();
  const Vector grad = g.flatten();
  require(theta.size() == m_.size() && grad.size() == m_.size(), "adamw: parameter shape changed");
  m_ = c.beta1 * m_ + (1.0 - c.beta1) * grad;
  v_ = c.beta2 * v_ + (1.0 - c.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(t_));
  theta.array() *= 1.0 - c.lr * c.weight_decay * mask_.array();
  theta.array() -= c.lr * (m_.array() / bc1) / ((v_.array() / bc2).sqrt() + c.eps);
  p.unflatten(theta);
}

void write_train_report_csv(const TrainReport& report, std::ostream& os) {
  os << "epoch,train_loss,val_loss\n";
  for (std::size_t e = 0; e < report.train_loss.size(); ++e)
    os << e << ',' << fmt17(report.train_loss[e]) << ',' << fmt17(report.val_loss[e]) << '\n';
}

MlpModel create_model(const MlpConfig& config) {
  config.validate();
  MlpModel model;
  model.config = config;
  model.params = MlpParams::initialize(config.d, config.hidden, config.seed);
  return model;
}

TrainReport train(MlpModel& model, const LabeledDataset& train_set, const LabeledDataset& val_set) {
  const MlpConfig& cfg = model.config;
  cfg.validate();
  check_dataset(train_set, cfg.d, "training");
  check_dataset(val_set, cfg.d, "validation");

  auto checked = [](double loss, int epoch, const char* what) {
    if (!std::isfinite(loss))
      fail(ErrorKind::kNumerical, std::string("non-finite ") + what + " loss at epoch " +
                                      std::to_string(epoch));
    return loss;
  };

  TrainReport report;
  report.train_loss.push_back(
      checked(loss_and_gradient(model.params, train_set.ys, train_set.xs), 0, "training"));
  report.val_loss.push_back(
      checked(loss_and_gradient(model.params, val_set.ys, val_set.xs), 0, "validation"));
  MlpParams best = model.params;
  report.best_val_loss = report.val_loss[0];
  report.best_epoch = 0;

  const auto n = static_cast<Eigen::Index>(train_set.size());
  const int d = cfg.d;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  MlpParams grad = MlpParams::zeros(d, cfg.hidden);
  AdamW opt(model.params);
  const std::uint64_t shuffle_seed = derive_seed(cfg.seed, 1);
  report.stop_reason = "max_epochs";

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    RngStream rng(shuffle_seed, static_cast<std::uint64_t>(epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[rng.below(i + 1)]);

    double weighted = 0.0;
    for (Eigen::Index start = 0; start < n; start += cfg.batch_size) {
      const Eigen::Index len = std::min<Eigen::Index>(cfg.batch_size, n - start);
      Matrix yb(d, len), xb(d, len);
      for (Eigen::Index c = 0; c < len; ++c) {
        yb.col(c) = train_set.ys.col(order[static_cast<std::size_t>(start + c)]);
        xb.col(c) = train_set.xs.col(order[static_cast<std::size_t>(start + c)]);
      }
      const double loss = loss_and_gradient(model.params, yb, xb, &grad);
      checked(loss, epoch, "training");
      weighted += loss * static_cast<double>(len);
      opt.step(model.params, grad, cfg);
    }
    report.train_loss.push_back(weighted / static_cast<double>(n));
    const double val = checked(loss_and_gradient(model.params, val_set.ys, val_set.xs), epoch,
                               "validation");
    report.val_loss.push_back(val);
    if (val < report.best_val_loss) {
      report.best_val_loss = val;
      report.best_epoch = epoch;
      best = model.params;
    }
    if (epoch - report.best_epoch >= cfg.patience) {
      report.stop_reason = "patience";
      break;
    }
  }
  model.params = std::move(best);
  model.epoch = report.best_epoch;
  model.val_loss = report.best_val_loss;
  return report;
}

double evaluate(const MlpParams& p, const LabeledDataset& ds) {
  check_dataset(ds, p.dim(), "evaluation");
  return rmse(forward(p, ds.ys), ds.xs);
}

void save_checkpoint(const MlpModel& model, const std::string& path) {
  require(model.params.all_finite(), "checkpoint: parameters are not finite");
  const nlohmann::json header = {{"d", model.params.dim()},
                                 {"hidden", model.params.hidden()},
                                 {"config", model.config},
                                 {"epoch", model.epoch},
                                 {"val_loss", model.val_loss},
                                 {"n_params", model.params.size()}};
  const std::string text = header.dump();
  std::string buf(kMagic, 4);
  put_le(buf, kVersion);
  put_le(buf, static_cast<std::uint64_t>(text.size()));
  buf.append(text);
  const Vector flat = model.params.flatten();
  for (Eigen::Index i = 0; i < flat.size(); ++i) put_le(buf, flat[i]);
  write_file_atomic(path, buf);
}

MlpModel load_checkpoint(const std::string& path) {
  const std::string buf = read_file(path);
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    fail(ErrorKind::kFormat, "'" + path + "' is not a model checkpoint (bad magic)");
  ByteReader rd(buf, path);
  rd.skip(4);
  const auto version = rd.get<std::uint32_t>();
  if (version != kVersion)
    fail(ErrorKind::kFormat, "'" + path + "': unsupported version " + std::to_string(version));
  const std::string text = rd.get_bytes(rd.get<std::uint64_t>());
  MlpModel model;
  try {
    const nlohmann::json header = nlohmann::json::parse(text);
    model.config = header.at("config").get<MlpConfig>();
    model.epoch = header.at("epoch").get<int>();
    model.val_loss = header.at("val_loss").get<double>();
    if (header.at("d").get<int>() != model.config.d ||
        header.at("hidden").get<int>() != model.config.hidden)
      fail(ErrorKind::kFormat, "'" + path + "': header dimensions disagree with config");
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, "'" + path + "': malformed header: " + e.what());
  }
  try {
    model.config.validate();
  } catch (const Error& e) {
    fail(ErrorKind::kFormat, "'" + path + "': " + e.what());
  }
  model.params = MlpParams::zeros(model.config.d, model.config.hidden);
  Vector flat(static_cast<Eigen::Index>(model.params.size()));
  if (rd.remaining() != static_cast<std::size_t>(flat.size()) * 8)
    fail(ErrorKind::kFormat, "'" + path + "': parameter block has the wrong length");
  for (Eigen::Index i = 0; i < flat.size(); ++i) flat[i] = rd.get<double>();
  model.params.unflatten(flat);
  if (!model.params.all_finite())
    fail(ErrorKind::kFormat, "'" + path + "': non-finite parameters");
  return model;
}

}  // namespace gmmflow
