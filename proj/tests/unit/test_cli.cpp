// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// Drives the command-line tool as a subprocess.

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path& root() {
  static const fs::path dir = [] {
    const fs::path d = fs::temp_directory_path() / "gmmflow_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string out(const std::string& name) { return (root() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = std::string(GMMFLOW_CLI_PATH) + " " + args + " >>" + out("log.txt") +
                          " 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  return {std::istreambuf_iterator<char>(in), {}};
}

json read_json(const std::string& path) { return json::parse(slurp(path)); }

const std::string kSmallSweep = " --dims 3 --ks 5 10 20 --traj 10 --J 3 --ref-k 100";

}  // namespace

TEST_CASE("verify-h writes outputs and a reproducible manifest") {
  REQUIRE(run("verify-h" + kSmallSweep + " --workers 1 --out " + out("h1")) == 0);
  for (const char* f : {"errors.csv", "summary.json", "manifest.json"})
    CHECK(fs::exists(fs::path(out("h1")) / f));
  const json manifest = read_json(out("h1/manifest.json"));
  CHECK(manifest["subcommand"] == "verify-h");
  CHECK(manifest["config"]["n_traj"] == 10);
  CHECK(manifest["config"]["dims"] == json::array({3}));
  CHECK(manifest["seed"] == 42);
  CHECK(manifest.contains("version"));
  CHECK(manifest["outputs"].size() >= 2);
  CHECK(!fs::exists(out("h1/errors.csv.tmp")));

  REQUIRE(run("verify-h --config " + out("h1/manifest.json") + " --workers 2 --out " + out("h2")) ==
          0);
  CHECK(slurp(out("h1/errors.csv")) == slurp(out("h2/errors.csv")));

  const json summary = read_json(out("h1/summary.json"));
  REQUIRE(summary["h_fits"].size() == 1);
  CHECK(summary["h_fits"][0]["slope"].is_number());

  // An explicit flag beats the config file.
  REQUIRE(run("verify-h --config " + out("h1/manifest.json") + " --seed 5 --out " + out("h3")) == 0);
  CHECK(read_json(out("h3/manifest.json"))["seed"] == 5);
  CHECK(slurp(out("h3/errors.csv")) != slurp(out("h1/errors.csv")));
}

TEST_CASE("verify-dim with one dimension reports an undefined slope") {
  REQUIRE(run("verify-dim --dims 4 --ks 10 --traj 5 --J 2 --ref-k 100 --out " + out("dim")) == 0);
  const json summary = read_json(out("dim/summary.json"));
  REQUIRE(summary["d_fits"].size() >= 1);
  CHECK(summary["d_fits"][0]["slope"].is_null());
  CHECK(summary["d_fits"][0]["note"] == "undefined: single dimension");
}

TEST_CASE("verify-sigma and lcurve") {
  REQUIRE(run("verify-sigma --dims 3 --ks 10 --traj 5 --J 2 --ref-k 100 --sigmas 0.2 0.4 --lcurve "
              "--out " +
              out("sigma")) == 0);
  CHECK(fs::exists(out("sigma/errors.csv")));
  CHECK(slurp(out("sigma/lcurve.csv")).rfind("sigma,L\n", 0) == 0);
  REQUIRE(run("lcurve --sigmas 0.1 0.5 --out " + out("lc")) == 0);
  const std::string curve = slurp(out("lc/lcurve.csv"));
  CHECK(curve.rfind("sigma,L\n0.10000000000000001,", 0) == 0);
  CHECK(curve.find("\n0.5,2\n") != std::string::npos);
}

TEST_CASE("configuration errors exit with status 2") {
  CHECK(run("verify-h --norm l3 --out " + out("bad")) == 2);
  CHECK(run("verify-h --no-such-flag") == 2);
  CHECK(run("no-such-command") == 2);
  CHECK(run("verify-h --dims 3 --ks 2000 --ref-k 1000 --out " + out("bad")) == 2);
  CHECK(run("verify-dim --config " + out("h1/manifest.json") + " --out " + out("bad")) == 2);
  {
    std::ofstream(out("broken.json")) << "{ nope";
  }
  CHECK(run("verify-h --config " + out("broken.json") + " --out " + out("bad")) == 2);
}

TEST_CASE("labels, split, train and eval pipeline") {
  REQUIRE(run("gen-labels --d 2 --J 3 --count 300 --label-k 50 --csv --out " + out("lab")) == 0);
  CHECK(fs::exists(out("lab/labels.gflb")));
  CHECK(slurp(out("lab/labels.csv")).rfind("y_0,y_1,x_0,x_1\n", 0) == 0);

  REQUIRE(run("split --data " + out("lab/labels.gflb") + " --fractions 0.8 0.1 0.1 --out " +
              out("sp")) == 0);
  for (const char* f : {"train.gflb", "val.gflb", "test.gflb"}) CHECK(fs::exists(fs::path(out("sp")) / f));
  CHECK(run("split --data " + out("lab/labels.gflb") + " --fractions 0.8 0.1 0.3 --out " +
            out("bad")) == 2);

  REQUIRE(run("train --train " + out("sp/train.gflb") + " --val " + out("sp/val.gflb") +
              " --hidden 8 --max-epochs 3 --batch 32 --out " + out("tr")) == 0);
  CHECK(fs::exists(out("tr/model.gfmc")));
  CHECK(slurp(out("tr/train_report.csv")).rfind("epoch,train_loss,val_loss\n", 0) == 0);
  CHECK(read_json(out("tr/manifest.json"))["config"]["mlp"]["hidden"] == 8);

  REQUIRE(run("eval --model " + out("tr/model.gfmc") + " --train " + out("sp/train.gflb") +
              " --test " + out("sp/test.gflb") + " --k 10 --out " + out("ev")) == 0);
  std::istringstream rows(slurp(out("ev/eval.csv")));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "metric,value");
  std::string names;
  while (std::getline(rows, line)) names += line.substr(0, line.find(',')) + ";";
  CHECK(names == "ode_discretization_rmse;model_train_rmse;model_test_rmse;");
}

TEST_CASE("file errors exit with status 4") {
  CHECK(run("split --data " + out("missing.gflb") + " --out " + out("bad")) == 4);
  {
    std::ofstream(out("junk.gflb"), std::ios::binary) << "JUNKJUNKJUNKJUNKJUNK";
  }
  CHECK(run("split --data " + out("junk.gflb") + " --out " + out("bad")) == 4);
  CHECK(run("eval --model " + out("junk.gflb") + " --train " + out("junk.gflb") + " --test " +
            out("junk.gflb") + " --out " + out("bad")) == 4);
}

TEST_CASE("score") {
  REQUIRE(run("score --d 2 --J 1 --cov iso:0.5 --t 0.5 --z 0.1 0.2 --mc-samples 50 --out " +
              out("sc")) == 0);
  std::istringstream rows(slurp(out("sc/score.csv")));
  std::string line;
  std::getline(rows, line);
  CHECK(line == "k,z,exact,mc");
  int n = 0;
  while (std::getline(rows, line)) ++n;
  CHECK(n == 2);
  CHECK(run("score --d 2 --z 0.1 0.2 0.3 --out " + out("bad")) == 2);
}
