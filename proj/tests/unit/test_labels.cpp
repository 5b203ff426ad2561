// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "gmmflow/error.hpp"
#include "gmmflow/labels.hpp"
#include "oracles.hpp"

using namespace gmmflow;
using oracle::vec;
namespace fs = std::filesystem;

namespace {

SolveConfig heun(int steps) {
  SolveConfig c;
  c.steps = steps;
  c.integrator = Integrator::kHeun;
  return c;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("gmmflow_labels_" + std::to_string(reinterpret_cast<std::uintptr_t>(this)) + "_" +
            std::to_string(std::rand()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::kInvalidArgument;
}

void write_bytes(const std::string& path, const std::string& bytes) {
  std::ofstream(path, std::ios::binary) << bytes;
}

std::string read_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

LabeledDataset cheap(int d, int n, std::uint64_t seed = 1) {
  const MixtureSpec spec({Vector::Zero(d)}, CovarianceSpec::isotropic(0.5, d));
  SolveConfig c;
  c.steps = 1;
  return generate_labels(spec, n, c, seed);
}

}  // namespace

TEST_CASE("single-component labels match the closed form") {
  RngStream rng(1, 0);
  const auto spec = oracle::random_mixture(3, 1, 0.2, 1.0, 1.0, rng);
  const auto ds = generate_labels(spec, 50, heun(1000), 9, 2);
  REQUIRE(ds.size() == 50);
  CHECK(ds.d == 3);
  for (int m = 0; m < 50; ++m) {
    RngStream s(9, static_cast<std::uint64_t>(m));
    const Vector y = gaussian_vector(3, s);
    CHECK(ds.ys.col(m) == y);
    CHECK((ds.xs.col(m) - closed_form_single_component(spec, y, 0.0)).norm() <= 1e-5);
  }
  CHECK(ds.provenance["seed"] == 9);
  CHECK(ds.provenance["solve"]["K"] == 1000);
  CHECK(ds.provenance["solve"]["integrator"] == "heun");
  CHECK(ds.provenance["spec_digest"] == spec_digest(spec, heun(1000)));
}

TEST_CASE("single-component labels have the target distribution") {
  const Vector mu = vec({0.5, -1.0});
  const Vector lam = vec({0.3, 0.6});
  const MixtureSpec spec({mu}, CovarianceSpec::diagonal(lam));
  const int n = 20000;
  const auto ds = generate_labels(spec, n, heun(20), 4);
  const Vector mean = ds.xs.rowwise().mean();
  const Vector var = (ds.xs.colwise() - mean).rowwise().squaredNorm() / (n - 1);
  for (int i = 0; i < 2; ++i) {
    CHECK(std::abs(mean(i) - mu(i)) <= 4.0 * std::sqrt(lam(i) / n));
    CHECK(std::abs(var(i) / lam(i) - 1.0) <= 0.1);
  }
}

TEST_CASE("symmetric two-component labels average to zero") {
  const Vector a = vec({0.8, 0.3, -0.5});
  const MixtureSpec spec({a, Vector(-a)}, CovarianceSpec::isotropic(0.3, 3));
  const int n = 10000;
  const auto ds = generate_labels(spec, n, heun(20), 5);
  const Vector mean = ds.xs.rowwise().mean();
  const Vector sd = ((ds.xs.colwise() - mean).rowwise().squaredNorm() / (n - 1)).cwiseSqrt();
  for (int i = 0; i < 3; ++i) CHECK(std::abs(mean(i)) <= 4.0 * sd(i) / std::sqrt(double(n)));
}

TEST_CASE("generation is deterministic") {
  RngStream rng(2, 0);
  const auto spec = oracle::random_mixture(2, 3, 0.2, 1.0, 1.0, rng);
  const auto a = generate_labels(spec, 30, heun(10), 3, 1);
  const auto b = generate_labels(spec, 30, heun(10), 3, 3);
  CHECK(a.digest() == b.digest());
  CHECK(a.xs == b.xs);
  CHECK(generate_labels(spec, 30, heun(10), 4).digest() != a.digest());
  CHECK_THROWS_AS(generate_labels(spec, 0, heun(10), 3), Error);
}

TEST_CASE("spec digest tracks every input") {
  RngStream rng(3, 0);
  const auto spec = oracle::random_mixture(3, 2, 0.2, 1.0, 1.0, rng);
  const std::string base = spec_digest(spec, heun(100));
  CHECK(spec_digest(spec, heun(100)) == base);
  CHECK(spec_digest(spec, heun(101)) != base);
  SolveConfig euler = heun(100);
  euler.integrator = Integrator::kEuler;
  CHECK(spec_digest(spec, euler) != base);

  auto means = spec.means();
  means[1](0) += 1e-12;
  CHECK(spec_digest(MixtureSpec(means, spec.cov()), heun(100)) != base);
  Vector lam = spec.cov().eigenvalues();
  lam(2) *= 1.0 + 1e-12;
  const MixtureSpec moved(spec.means(), CovarianceSpec::eigen_factored(spec.cov().basis(), lam));
  CHECK(spec_digest(moved, heun(100)) != base);
}

TEST_CASE("split sizes and coverage") {
  const auto ds = cheap(1, 100000);
  const auto parts = split(ds, {0.8, 0.1, 0.1}, 7);
  CHECK(parts[0].size() == 80000);
  CHECK(parts[1].size() == 10000);
  CHECK(parts[2].size() == 10000);
  CHECK(parts[0].provenance["split"] == "train");
  CHECK(parts[2].provenance["split"] == "test");

  // The noise draws are distinct reals, so they identify pairs.
  std::set<double> seen;
  for (const auto& p : parts)
    for (Eigen::Index m = 0; m < p.ys.cols(); ++m) seen.insert(p.ys(0, m));
  CHECK(seen.size() == 100000);
  std::set<double> all;
  for (Eigen::Index m = 0; m < ds.ys.cols(); ++m) all.insert(ds.ys(0, m));
  CHECK(seen == all);

  const auto again = split(ds, {0.8, 0.1, 0.1}, 7);
  CHECK(again[1].ys == parts[1].ys);
  CHECK(split(ds, {0.8, 0.1, 0.1}, 8)[1].ys != parts[1].ys);
}

TEST_CASE("split rejects bad fractions and tiny datasets") {
  const auto ds = cheap(2, 50);
  CHECK_THROWS_AS(split(ds, {0.8, 0.1, 0.2}, 1), Error);
  CHECK_THROWS_AS(split(ds, {1.0, 0.0, 0.0}, 1), Error);
  CHECK_THROWS_AS(split(ds, {0.9, -0.1, 0.2}, 1), Error);
  CHECK_THROWS_AS(split(cheap(2, 5), {0.8, 0.1, 0.1}, 1), Error);
  const auto small = split(cheap(2, 10), {0.8, 0.1, 0.1}, 1);
  CHECK(small[0].size() == 8);
  CHECK(small[1].size() == 1);
}

TEST_CASE("binary round trip") {
  TempDir dir;
  const auto ds = cheap(3, 40);
  save(ds, dir.file("a.gflb"));
  const auto back = load(dir.file("a.gflb"), 3);
  CHECK(back.ys == ds.ys);
  CHECK(back.xs == ds.xs);
  CHECK(back.provenance == ds.provenance);
  CHECK(back.digest() == ds.digest());
  save(back, dir.file("b.gflb"));
  CHECK(read_bytes(dir.file("a.gflb")) == read_bytes(dir.file("b.gflb")));
}

TEST_CASE("binary loading errors") {
  TempDir dir;
  const auto ds = cheap(3, 10);
  save(ds, dir.file("good.gflb"));
  const std::string bytes = read_bytes(dir.file("good.gflb"));

  CHECK(kind_of([&] { load(dir.file("missing.gflb")); }) == ErrorKind::kIo);
  CHECK(kind_of([&] { load(dir.file("good.gflb"), 4); }) == ErrorKind::kFormat);

  std::string magic = bytes;
  magic[0] = 'X';
  write_bytes(dir.file("magic.gflb"), magic);
  CHECK(kind_of([&] { load(dir.file("magic.gflb")); }) == ErrorKind::kFormat);

  std::string version = bytes;
  version[4] = 9;
  write_bytes(dir.file("version.gflb"), version);
  CHECK(kind_of([&] { load(dir.file("version.gflb")); }) == ErrorKind::kFormat);

  for (std::size_t cut : {std::size_t{3}, std::size_t{20}, bytes.size() / 2, bytes.size() - 1}) {
    write_bytes(dir.file("short.gflb"), bytes.substr(0, cut));
    CHECK(kind_of([&] { load(dir.file("short.gflb")); }) == ErrorKind::kFormat);
  }
  write_bytes(dir.file("long.gflb"), bytes + "x");
  CHECK(kind_of([&] { load(dir.file("long.gflb")); }) == ErrorKind::kFormat);
}

TEST_CASE("CSV round trip") {
  RngStream rng(4, 0);
  const auto spec = oracle::random_mixture(2, 2, 0.2, 1.0, 1.0, rng);
  const auto ds = generate_labels(spec, 25, heun(10), 2);
  std::stringstream ss;
  export_csv(ds, ss);
  CHECK(ss.str().rfind("y_0,y_1,x_0,x_1\n", 0) == 0);
  const auto back = import_csv(ss);
  REQUIRE(back.size() == 25);
  CHECK((back.ys - ds.ys).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK((back.xs - ds.xs).cwiseAbs().maxCoeff() <= 1e-15);

  std::stringstream bad("y_0,x_0\n1.0,abc\n");
  CHECK_THROWS_AS(import_csv(bad), Error);
}

TEST_CASE("rmse") {
  Matrix a = Matrix::Zero(2, 2), b = Matrix::Zero(2, 2);
  b(0, 0) = 2.0;
  CHECK(rmse(a, b) == doctest::Approx(1.0));
  CHECK(rmse(a, a) == 0.0);
  // Invariant to pair order.
  Matrix c = b;
  c.col(0).swap(c.col(1));
  CHECK(rmse(a, c) == rmse(a, b));
  CHECK_THROWS_AS(rmse(a, Matrix::Zero(3, 2)), Error);
}

TEST_CASE("discretization rmse") {
  RngStream rng(5, 0);
  const auto spec = oracle::random_mixture(3, 1, 0.2, 1.0, 1.0, rng);
  const auto ds = generate_labels(spec, 60, heun(1000), 6);
  CHECK(discretization_rmse(spec, ds, heun(1000)) == 0.0);
  SolveConfig coarse;
  coarse.steps = 10;
  SolveConfig fine;
  fine.steps = 100;
  const double e10 = discretization_rmse(spec, ds, coarse, 2);
  const double e100 = discretization_rmse(spec, ds, fine, 1);
  CHECK(e10 > e100);
  CHECK(e10 / e100 == doctest::Approx(10.0).epsilon(0.3));

  // Against the closed form directly.
  Matrix want(3, 60);
  for (int m = 0; m < 60; ++m) want.col(m) = solve(spec, ds.ys.col(m), coarse).z_final;
  CHECK(e10 == doctest::Approx(rmse(want, ds.xs)).epsilon(1e-14));
}
