// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow/labels.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <istream>
#include <numeric>
#include <ostream>

#include "gmmflow/error.hpp"
#include "gmmflow/format.hpp"
#include "gmmflow/le_bytes.hpp"
#include "gmmflow/parallel.hpp"

namespace gmmflow {

namespace {

constexpr char kMagic[4] = {'G', 'F', 'L', 'B'};
constexpr std::uint32_t kVersion = 1;

std::uint64_t hash_doubles(const double* p, std::size_t n, std::uint64_t h) {
  return fnv1a64(p, n * sizeof(double), h);
}

LabeledDataset subset(const LabeledDataset& ds, const std::vector<std::size_t>& idx,
                      std::size_t begin, std::size_t end, const char* role) {
  LabeledDataset out;
  out.d = ds.d;
  out.ys.resize(ds.d, static_cast<Eigen::Index>(end - begin));
  out.xs.resize(ds.d, static_cast<Eigen::Index>(end - begin));
  for (std::size_t i = begin; i < end; ++i) {
    out.ys.col(static_cast<Eigen::Index>(i - begin)) = ds.ys.col(static_cast<Eigen::Index>(idx[i]));
    out.xs.col(static_cast<Eigen::Index>(i - begin)) = ds.xs.col(static_cast<Eigen::Index>(idx[i]));
  }
  out.provenance = ds.provenance;
  out.provenance["split"] = role;
  return out;
}

}  // namespace

void LabeledDataset::validate() const {
  require(d >= 1, "dataset: dimension must be >= 1");
  require(ys.rows() == d && xs.rows() == d, "dataset: vectors must have dimension d");
  require(ys.cols() == xs.cols(), "dataset: y and x counts differ");
  require(ys.cols() > 0, "dataset: no pairs");
}

std::string LabeledDataset::digest() const {
  std::uint64_t h = fnv1a64(&d, sizeof(d));
  const std::uint64_t n = size();
  h = fnv1a64(&n, sizeof(n), h);
  h = hash_doubles(ys.data(), static_cast<std::size_t>(ys.size()), h);
  h = hash_doubles(xs.data(), static_cast<std::size_t>(xs.size()), h);
  const std::string prov = provenance.dump();
  h = fnv1a64(prov.data(), prov.size(), h);
  return hex64(h);
}

std::string spec_digest(const MixtureSpec& spec, const SolveConfig& config) {
  const int d = spec.dim();
  const int nc = spec.num_components();
  std::uint64_t h = fnv1a64(&d, sizeof(d));
  h = fnv1a64(&nc, sizeof(nc), h);
  for (const Vector& mu : spec.means()) h = hash_doubles(mu.data(), mu.size(), h);
  const Vector& lambda = spec.cov().eigenvalues();
  h = hash_doubles(lambda.data(), lambda.size(), h);
  if (spec.cov().has_basis())
    h = hash_doubles(spec.cov().basis().data(), spec.cov().basis().size(), h);
  const int steps = config.steps;
  const int integ = static_cast<int>(config.integrator);
  h = fnv1a64(&steps, sizeof(steps), h);
  h = fnv1a64(&integ, sizeof(integ), h);
  return hex64(h);
}

LabeledDataset generate_labels(const MixtureSpec& spec, int count, const SolveConfig& config,
                               std::uint64_t seed, int workers, const nlohmann::json& extra) {
  require(count >= 1, "generate_labels: count must be >= 1");
  const int d = spec.dim();
  LabeledDataset ds;
  ds.d = d;
  ds.ys.resize(d, count);
  ds.xs.resize(d, count);
  SolveConfig cfg = config;
  cfg.record_path = false;
  parallel_for(static_cast<std::size_t>(count), workers, [&](std::size_t m) {
    RngStream rng(seed, m);
    const Vector y = gaussian_vector(d, rng);
    Vector x;
    try {
      x = solve(spec, y, cfg).z_final;
    } catch (const Error& e) {
      fail(e.kind(), "pair " + std::to_string(m) + ": " + e.what());
    }
    ds.ys.col(static_cast<Eigen::Index>(m)) = y;
    ds.xs.col(static_cast<Eigen::Index>(m)) = x;
  });
  ds.provenance = extra.is_object() ? extra : nlohmann::json::object();
  ds.provenance["spec_digest"] = spec_digest(spec, cfg);
  ds.provenance["solve"] = {{"K", cfg.steps}, {"integrator", to_string(cfg.integrator)}};
  ds.provenance["seed"] = seed;
  return ds;
}

std::array<LabeledDataset, 3> split(const LabeledDataset& ds, std::array<double, 3> fractions,
                                    std::uint64_t seed) {
  ds.validate();
  for (double f : fractions) require(f > 0.0, "split: fractions must be positive");
  require(std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) <= 1e-9,
          "split: fractions must sum to 1");
  const std::size_t n = ds.size();
  const auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[1]));
  const auto n_test = static_cast<std::size_t>(std::floor(static_cast<double>(n) * fractions[2]));
  require(n_val >= 1 && n_test >= 1 && n_val + n_test < n,
          "split: dataset of " + std::to_string(n) + " pairs is too small for these fractions");
  const std::size_t n_train = n - n_val - n_test;

  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  RngStream rng(seed, 0);
  for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.below(i + 1)]);

  return {subset(ds, idx, 0, n_train, "train"),
          subset(ds, idx, n_train, n_train + n_val, "val"),
          subset(ds, idx, n_train + n_val, n, "test")};
}

void save(const LabeledDataset& ds, const std::string& path) {
  ds.validate();
  std::string buf;
  const std::size_t n = ds.size();
  buf.reserve(24 + n * 2 * ds.d * 8);
  buf.append(kMagic, 4);
  put_le(buf, kVersion);
  put_le(buf, static_cast<std::uint32_t>(ds.d));
  put_le(buf, static_cast<std::uint64_t>(n));
  for (std::size_t m = 0; m < n; ++m) {
    for (int k = 0; k < ds.d; ++k) put_le(buf, ds.ys(k, static_cast<Eigen::Index>(m)));
    for (int k = 0; k < ds.d; ++k) put_le(buf, ds.xs(k, static_cast<Eigen::Index>(m)));
  }
  const std::string prov = ds.provenance.dump();
  put_le(buf, static_cast<std::uint64_t>(prov.size()));
  buf.append(prov);
  write_file_atomic(path, buf);
}

LabeledDataset load(const std::string& path, int expected_d) {
  const std::string buf = read_file(path);
  ByteReader rd(buf, path);
  if (buf.size() < 4 || std::memcmp(buf.data(), kMagic, 4) != 0)
    fail(ErrorKind::kFormat, "'" + path + "' is not a labeled dataset (bad magic)");
  rd.skip(4);
  const auto version = rd.get<std::uint32_t>();
  if (version != kVersion)
    fail(ErrorKind::kFormat, "'" + path + "': unsupported version " + std::to_string(version));
  const auto d = rd.get<std::uint32_t>();
  const auto n = rd.get<std::uint64_t>();
  if (d == 0 || n == 0) fail(ErrorKind::kFormat, "'" + path + "': empty dataset header");
  if (expected_d > 0 && static_cast<int>(d) != expected_d)
    fail(ErrorKind::kFormat, "'" + path + "': dimension " + std::to_string(d) +
                                 " does not match expected " + std::to_string(expected_d));
  // Refuse absurd headers before allocating.
  if (n > (buf.size() / (16ULL * d)) + 1)
    fail(ErrorKind::kFormat, "'" + path + "' is truncated");
  LabeledDataset ds;
  ds.d = static_cast<int>(d);
  ds.ys.resize(d, static_cast<Eigen::Index>(n));
  ds.xs.resize(d, static_cast<Eigen::Index>(n));
  for (std::uint64_t m = 0; m < n; ++m) {
    for (std::uint32_t k = 0; k < d; ++k) ds.ys(k, static_cast<Eigen::Index>(m)) = rd.get<double>();
    for (std::uint32_t k = 0; k < d; ++k) ds.xs(k, static_cast<Eigen::Index>(m)) = rd.get<double>();
  }
  const auto prov_len = rd.get<std::uint64_t>();
  const std::string prov = rd.get_bytes(prov_len);
  if (!rd.at_end()) fail(ErrorKind::kFormat, "'" + path + "': trailing bytes after provenance");
  try {
    ds.provenance = nlohmann::json::parse(prov);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kFormat, "'" + path + "': malformed provenance: " + e.what());
  }
  return ds;
}

void export_csv(const LabeledDataset& ds, std::ostream& os) {
  ds.validate();
  for (int k = 0; k < ds.d; ++k) os << (k ? "," : "") << "y_" << k;
  for (int k = 0; k < ds.d; ++k) os << ",x_" << k;
  os << '\n';
  for (Eigen::Index m = 0; m < ds.ys.cols(); ++m) {
    for (int k = 0; k < ds.d; ++k) os << (k ? "," : "") << fmt17(ds.ys(k, m));
    for (int k = 0; k < ds.d; ++k) os << ',' << fmt17(ds.xs(k, m));
    os << '\n';
  }
}

LabeledDataset import_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::kFormat, "csv: missing header");
  const auto cols = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (cols % 2 != 0) fail(ErrorKind::kFormat, "csv: header must have an even column count");
  const int d = cols / 2;
  std::vector<std::vector<double>> rows;
  while (std::getline(is, line)) {
    if (line.empty() || line == "\r") continue;
    std::vector<double> vals = parse_double_list(line);
    if (static_cast<int>(vals.size()) != cols)
      fail(ErrorKind::kFormat, "csv: row has " + std::to_string(vals.size()) + " fields, expected " +
                                   std::to_string(cols));
    rows.push_back(std::move(vals));
  }
  if (rows.empty()) fail(ErrorKind::kFormat, "csv: no data rows");
  LabeledDataset ds;
  ds.d = d;
  ds.ys.resize(d, static_cast<Eigen::Index>(rows.size()));
  ds.xs.resize(d, static_cast<Eigen::Index>(rows.size()));
  for (std::size_t m = 0; m < rows.size(); ++m)
    for (int k = 0; k < d; ++k) {
      ds.ys(k, static_cast<Eigen::Index>(m)) = rows[m][k];
      ds.xs(k, static_cast<Eigen::Index>(m)) = rows[m][d + k];
    }
  return ds;
}

double rmse(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows() && a.cols() == b.cols() && a.size() > 0, "rmse: shape mismatch");
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

double discretization_rmse(const MixtureSpec& spec, const LabeledDataset& ds,
                           const SolveConfig& approx, int workers) {
  ds.validate();
  require(ds.d == spec.dim(), "discretization_rmse: dataset and mixture dimensions differ");
  Matrix approx_x(ds.d, ds.ys.cols());
  SolveConfig cfg = approx;
  cfg.record_path = false;
  parallel_for(ds.size(), workers, [&](std::size_t m) {
    const auto c = static_cast<Eigen::Index>(m);
    approx_x.col(c) = solve(spec, ds.ys.col(c), cfg).z_final;
  });
  return rmse(approx_x, ds.xs);
}

}  // namespace gmmflow
