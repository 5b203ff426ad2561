// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

// gmmflow command line front end. Every subcommand resolves its configuration
// as built-in profile defaults < --config file < explicit flags, writes its
// outputs into --out and records a manifest.json beside them.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gmmflow.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;
constexpr int kExitIo = 4;

struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void die(int code, const std::string& message) { throw CliError{code, message}; }

int exit_code(gf_status s) {
  switch (s) {
    case GF_OK: return 0;
    case GF_ERR_CONFIG: return kExitConfig;
    case GF_ERR_NUMERIC: return kExitNumeric;
    case GF_ERR_IO:
    case GF_ERR_FORMAT: return kExitIo;
    default: return kExitInternal;
  }
}

void check(gf_status s) {
  if (s != GF_OK) die(exit_code(s), gf_last_error_message());
}

struct StringDeleter {
  void operator()(char* p) const { gf_string_free(p); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct HandleDeleter {
  void operator()(gf_mixture* p) const { gf_mixture_destroy(p); }
  void operator()(gf_report* p) const { gf_report_destroy(p); }
  void operator()(gf_dataset* p) const { gf_dataset_destroy(p); }
  void operator()(gf_model* p) const { gf_model_destroy(p); }
};
template <typename T>
using Handle = std::unique_ptr<T, HandleDeleter>;

std::string take(char* s) { return OwnedString(s).get(); }

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) die(kExitIo, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) die(kExitIo, "cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) die(kExitIo, "cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) die(kExitIo, "cannot rename onto '" + path.string() + "': " + ec.message());
}

template <typename T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::istringstream is(item);
    T v{};
    if (!(is >> v) || !(is >> std::ws).eof()) die(kExitConfig, flag + ": bad list item '" + item + "'");
    out.push_back(v);
  }
  if (out.empty()) die(kExitConfig, flag + ": empty list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// One subcommand: its flags bound to JSON pointers in the resolved config.
class Command {
 public:
  Command(CLI::App& app, const std::string& name, const std::string& help,
          std::string seed_pointer)
      : sub_(app.add_subcommand(name, help)), name_(name), seed_pointer_(std::move(seed_pointer)) {
    sub_->add_option("--out", out_dir_, "Output directory")->capture_default_str();
    sub_->add_option("--config", config_path_, "JSON config or a previous manifest.json");
    sub_->add_option("--profile", profile_, "desk (default) or paper")
        ->check(CLI::IsMember({"desk", "paper"}));
    sub_->add_option("--workers", workers_, "Worker threads (default: GMMFLOW_WORKERS or all)");
    bind<std::uint64_t>("--seed", seed_pointer_, "Master seed");
  }

  template <typename T>
  void bind(const std::string& flag, const std::string& pointer, const std::string& help) {
    auto value = std::make_shared<T>();
    CLI::Option* opt = sub_->add_option(flag, *value, help);
    bindings_.push_back({opt, pointer, [value] { return json(*value); }});
  }

  template <typename T>
  void bind_list(const std::string& flag, const std::string& pointer, const std::string& help) {
    auto items = std::make_shared<std::vector<std::string>>();
    CLI::Option* opt = sub_->add_option(flag, *items, help)->delimiter(',');
    bindings_.push_back({opt, pointer, [items, flag] {
                           std::string text;
                           for (const auto& item : *items) text += (text.empty() ? "" : ",") + item;
                           return json(parse_list<T>(text, flag));
                         }});
  }

  CLI::App* app() const { return sub_; }
  const std::string& name() const { return name_; }
  bool paper() const { return profile_ == "paper"; }
  int workers() const { return gf_resolve_workers(workers_); }
  fs::path out_dir() const { return out_dir_; }

  json resolve(json defaults) const {
    if (!config_path_.empty()) {
      json file;
      try {
        file = json::parse(read_text(config_path_));
      } catch (const json::parse_error& e) {
        die(kExitConfig, "'" + config_path_ + "' is not valid JSON: " + e.what());
      }
      if (file.contains("subcommand") && file.contains("config")) {
        if (file["subcommand"] != name_)
          die(kExitConfig, "manifest '" + config_path_ + "' was written by '" +
                               file["subcommand"].get<std::string>() + "'");
        file = file["config"];
      }
      if (!file.is_object()) die(kExitConfig, "'" + config_path_ + "' must hold a JSON object");
      defaults.merge_patch(file);
    }
    for (const auto& b : bindings_)
      if (b.opt->count() > 0) defaults[json::json_pointer(b.pointer)] = b.value();
    return defaults;
  }

  std::uint64_t seed_of(const json& cfg) const {
    return cfg.value(json::json_pointer(seed_pointer_), std::uint64_t{42});
  }

  void prepare_out() const {
    std::error_code ec;
    fs::create_directories(out_dir_, ec);
    if (ec) die(kExitIo, "cannot create '" + out_dir_ + "': " + ec.message());
  }

  void write_manifest(const json& cfg, const std::vector<std::string>& outputs,
                      std::chrono::steady_clock::time_point start) const {
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const json manifest = {{"subcommand", name_},     {"config", cfg},
                           {"seed", seed_of(cfg)},    {"version", gf_version()},
                           {"outputs", outputs},      {"workers", workers()},
                           {"duration_s", secs}};
    write_text(out_dir() / "manifest.json", manifest.dump(2) + "\n");
  }

 private:
  struct Binding {
    CLI::Option* opt;
    std::string pointer;
    std::function<json()> value;
  };

  CLI::App* sub_;
  std::string name_;
  std::string seed_pointer_;
  std::string out_dir_ = ".";
  std::string config_path_;
  std::string profile_ = "desk";
  int workers_ = 0;
  std::vector<Binding> bindings_;
};

json sweep_defaults() {
  return {{"dims", {10}},      {"steps", {5, 10, 20, 50, 100}},
          {"sigma_grid", json::array()}, {"n_traj", 1000},
          {"J", 10},           {"M", 1.0},
          {"mean_sampler", "ball"},      {"cov", "cycle5-spd"},
          {"norm", "l2"},      {"ref_K", 1000},
          {"approx", "euler"}, {"seed", 42}};
}

void bind_sweep_flags(Command& c) {
  c.bind_list<int>("--dims", "/dims", "Dimensions");
  c.bind_list<int>("--ks", "/steps", "Step counts K (h = 1/K)");
  c.bind<int>("--traj", "/n_traj", "Trajectories per cell");
  c.bind<std::string>("--norm", "/norm", "l2, linf or both");
  c.bind<int>("--J", "/J", "Mixture components");
  c.bind<double>("--M", "/M", "Mean radius");
  c.bind<std::string>("--means", "/mean_sampler", "ball, hypercube or corners");
  c.bind<std::string>("--cov", "/cov", "cycle5-spd, cycle5-diag, iso:S or uniform-diag:LO:HI");
  c.bind<int>("--ref-k", "/ref_K", "Heun reference step count");
  c.bind<std::string>("--approx", "/approx", "euler or heun");
}

json run_sweep(const Command& c, const json& cfg, bool sigma, std::vector<std::string>& outputs) {
  gf_report* raw = nullptr;
  const std::string text = cfg.dump();
  check(sigma ? gf_sigma_sweep(text.c_str(), c.workers(), &raw)
              : gf_error_sweep(text.c_str(), c.workers(), &raw));
  Handle<gf_report> report(raw);
  char* csv = nullptr;
  check(gf_report_csv(report.get(), &csv));
  write_text(c.out_dir() / "errors.csv", take(csv));
  char* summary = nullptr;
  check(gf_report_summary(report.get(), &summary));
  const json s = json::parse(take(summary));
  write_text(c.out_dir() / "summary.json", s.dump(2) + "\n");
  outputs.push_back("errors.csv");
  outputs.push_back("summary.json");
  return s;
}

void print_fit(const json& f, const std::string& label) {
  if (f["slope"].is_null()) {
    std::cout << label << ": slope " << f.value("note", std::string("undefined")) << "\n";
    return;
  }
  std::cout << label << ": slope " << fmt(f["slope"]) << " (r2 " << fmt(f["r2"]) << ")";
  if (f.contains("log_growth_r2"))
    std::cout << ", a+b ln d r2 " << fmt(f["log_growth_r2"]) << ", a+b d r2 "
              << fmt(f["linear_r2"]) << ", error ratio " << fmt(f["ratio_max_min_d"]);
  std::cout << "\n";
}

std::string lcurve_csv(const std::vector<double>& sigmas) {
  char* csv = nullptr;
  check(gf_lcurve_csv(sigmas.data(), static_cast<int>(sigmas.size()), &csv));
  return take(csv);
}

std::vector<double> default_lcurve_grid() {
  std::vector<double> g;
  for (int i = 1; i <= 100; ++i) g.push_back(i / 100.0);
  return g;
}

Handle<gf_dataset> load_dataset(const std::string& path, int expected_d = 0) {
  gf_dataset* raw = nullptr;
  check(gf_dataset_load(path.c_str(), expected_d, &raw));
  return Handle<gf_dataset>(raw);
}

json dataset_info(const gf_dataset* ds) {
  char* info = nullptr;
  check(gf_dataset_info(ds, &info));
  return json::parse(take(info));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("gmmflow: reverse-flow sampling of Gaussian mixtures and its error analysis");
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(gf_version()));

  Command verify_h(app, "verify-h", "Error against step size; fits the convergence slope", "/seed");
  bind_sweep_flags(verify_h);
  Command verify_dim(app, "verify-dim", "Error against dimension at fixed step size", "/seed");
  bind_sweep_flags(verify_dim);
  Command verify_sigma(app, "verify-sigma", "Error against isotropic covariance scale", "/seed");
  bind_sweep_flags(verify_sigma);
  verify_sigma.bind_list<double>("--sigmas", "/sigma_grid", "Covariance scales");
  bool with_lcurve = false;
  verify_sigma.app()->add_flag("--lcurve", with_lcurve, "Also export the bound curve L(sigma)");

  Command lcurve(app, "lcurve", "Export the drift linear-part bound L(sigma)", "/seed");
  lcurve.bind_list<double>("--sigmas", "/sigmas", "Covariance scales");

  Command gen_labels(app, "gen-labels", "Solve the reverse flow from Gaussian noise into labels",
                     "/seed");
  gen_labels.bind<int>("--d", "/instance/d", "Dimension");
  gen_labels.bind<int>("--J", "/instance/J", "Mixture components");
  gen_labels.bind<double>("--M", "/instance/M", "Mean radius");
  gen_labels.bind<std::string>("--means", "/instance/mean_sampler", "ball, hypercube or corners");
  gen_labels.bind<std::string>("--cov", "/instance/cov", "Covariance spec");
  gen_labels.bind<std::uint64_t>("--instance-seed", "/instance/seed", "Seed of the mixture");
  gen_labels.bind<int>("--count", "/count", "Number of pairs");
  gen_labels.bind<int>("--label-k", "/label_K", "Step count of the labelling solver");
  gen_labels.bind<std::string>("--label-integrator", "/label_integrator", "euler or heun");
  bool with_csv = false;
  gen_labels.app()->add_flag("--csv", with_csv, "Also export labels.csv");

  Command split(app, "split", "Seeded train/validation/test split of a dataset", "/seed");
  split.bind<std::string>("--data", "/data", "Dataset to split");
  split.bind_list<double>("--fractions", "/fractions", "Train, validation and test fractions");

  Command train(app, "train", "Fit the noise-to-sample network", "/mlp/seed");
  train.bind<std::string>("--train", "/train", "Training set");
  train.bind<std::string>("--val", "/val", "Validation set");
  train.bind<int>("--hidden", "/mlp/hidden", "Hidden width");
  train.bind<double>("--lr", "/mlp/lr", "Learning rate");
  train.bind<double>("--weight-decay", "/mlp/weight_decay", "Decoupled weight decay");
  train.bind<int>("--batch", "/mlp/batch_size", "Batch size");
  train.bind<int>("--patience", "/mlp/patience", "Early-stopping patience in epochs");
  train.bind<int>("--max-epochs", "/mlp/max_epochs", "Epoch cap");

  Command eval(app, "eval", "Compare model RMSE with the solver discretization RMSE", "/seed");
  eval.bind<std::string>("--model", "/model", "Checkpoint");
  eval.bind<std::string>("--train", "/train", "Training set");
  eval.bind<std::string>("--test", "/test", "Test set");
  eval.bind<int>("--k", "/K", "Step count of the approximate solver");
  eval.bind<std::string>("--approx", "/approx", "euler or heun");

  Command score(app, "score", "Exact and Monte-Carlo score at one point", "/seed");
  score.bind<int>("--d", "/instance/d", "Dimension");
  score.bind<int>("--J", "/instance/J", "Mixture components");
  score.bind<double>("--M", "/instance/M", "Mean radius");
  score.bind<std::string>("--means", "/instance/mean_sampler", "ball, hypercube or corners");
  score.bind<std::string>("--cov", "/instance/cov", "Covariance spec");
  score.bind<std::uint64_t>("--instance-seed", "/instance/seed", "Seed of the mixture");
  score.bind<double>("--t", "/t", "Time in [0, 1]");
  score.bind_list<double>("--z", "/z", "Evaluation point (default: origin)");
  score.bind<int>("--mc-samples", "/mc_samples", "Samples for the Monte-Carlo estimate (0: skip)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  const auto start = std::chrono::steady_clock::now();
  std::vector<std::string> outputs;
  try {
    if (verify_h.app()->parsed()) {
      json d = sweep_defaults();
      if (verify_h.paper()) d["dims"] = {10, 100};
      const json cfg = verify_h.resolve(d);
      verify_h.prepare_out();
      const json s = run_sweep(verify_h, cfg, false, outputs);
      for (const auto& f : s["h_fits"])
        print_fit(f, "d=" + std::to_string(f["d"].get<int>()) + " " + f["norm"].get<std::string>() +
                         " error vs h");
      verify_h.write_manifest(cfg, outputs, start);
    } else if (verify_dim.app()->parsed()) {
      json d = sweep_defaults();
      d["dims"] = verify_dim.paper() ? json{10, 100, 1000, 10000} : json{10, 100, 1000};
      d["steps"] = {100};
      json cfg = verify_dim.resolve(d);
      if (cfg["norm"] == "linf" &&
          (cfg["cov"] != "cycle5-diag" || cfg["mean_sampler"] != "hypercube")) {
        std::cerr << "note: linf mode uses cycle5-diag covariance and hypercube means\n";
        cfg["cov"] = "cycle5-diag";
        cfg["mean_sampler"] = "hypercube";
      }
      verify_dim.prepare_out();
      const json s = run_sweep(verify_dim, cfg, false, outputs);
      for (const auto& f : s["d_fits"])
        print_fit(f, "K=" + std::to_string(f["K"].get<int>()) + " " + f["norm"].get<std::string>() +
                         " error vs d");
      verify_dim.write_manifest(cfg, outputs, start);
    } else if (verify_sigma.app()->parsed()) {
      json d = sweep_defaults();
      d["steps"] = {100};
      d["sigma_grid"] = {0.1, 0.2, 0.3, 0.4, 0.5, 0.6};
      json cfg = verify_sigma.resolve(d);
      cfg["lcurve"] = cfg.value("lcurve", false) || with_lcurve;
      verify_sigma.prepare_out();
      const json s = run_sweep(verify_sigma, cfg, true, outputs);
      for (const auto& f : s["sigma_fits"])
        std::cout << "d=" << f["d"] << " K=" << f["K"] << " " << f["norm"].get<std::string>()
                  << ": argmin sigma " << f["argmin_tag"].get<std::string>()
                  << (f["interior"].get<bool>() ? " (interior)" : " (at grid edge)") << "\n";
      if (cfg["lcurve"].get<bool>()) {
        write_text(verify_sigma.out_dir() / "lcurve.csv", lcurve_csv(default_lcurve_grid()));
        outputs.push_back("lcurve.csv");
      }
      verify_sigma.write_manifest(cfg, outputs, start);
    } else if (lcurve.app()->parsed()) {
      const json cfg = lcurve.resolve({{"sigmas", default_lcurve_grid()}, {"seed", 42}});
      lcurve.prepare_out();
      write_text(lcurve.out_dir() / "lcurve.csv",
                 lcurve_csv(cfg["sigmas"].get<std::vector<double>>()));
      outputs.push_back("lcurve.csv");
      lcurve.write_manifest(cfg, outputs, start);
    } else if (gen_labels.app()->parsed()) {
      const json d = {{"instance",
                       {{"d", 8},
                        {"J", 10},
                        {"M", 1.0},
                        {"mean_sampler", "corners"},
                        {"cov", "uniform-diag:0.2:0.4"},
                        {"seed", 42}}},
                      {"count", gen_labels.paper() ? 100000 : 20000},
                      {"label_K", 1000},
                      {"label_integrator", "heun"},
                      {"seed", 42}};
      json cfg = gen_labels.resolve(d);
      cfg["csv"] = cfg.value("csv", false) || with_csv;
      gen_labels.prepare_out();
      gf_dataset* raw = nullptr;
      check(gf_dataset_generate(cfg["instance"].dump().c_str(), cfg["count"].get<int>(),
                                cfg["label_K"].get<int>(),
                                cfg["label_integrator"].get<std::string>().c_str(),
                                cfg["seed"].get<std::uint64_t>(), gen_labels.workers(), &raw));
      Handle<gf_dataset> ds(raw);
      const std::string path = (gen_labels.out_dir() / "labels.gflb").string();
      check(gf_dataset_save(ds.get(), path.c_str()));
      outputs.push_back("labels.gflb");
      if (cfg["csv"].get<bool>()) {
        const std::string csv = (gen_labels.out_dir() / "labels.csv").string();
        check(gf_dataset_export_csv(ds.get(), csv.c_str()));
        outputs.push_back("labels.csv");
      }
      std::cout << "wrote " << cfg["count"] << " pairs, digest "
                << dataset_info(ds.get())["digest"].get<std::string>() << "\n";
      gen_labels.write_manifest(cfg, outputs, start);
    } else if (split.app()->parsed()) {
      const json cfg = split.resolve(
          {{"data", "labels.gflb"}, {"fractions", {0.8, 0.1, 0.1}}, {"seed", 42}});
      const auto fr = cfg["fractions"].get<std::vector<double>>();
      if (fr.size() != 3) die(kExitConfig, "--fractions needs three values");
      split.prepare_out();
      auto ds = load_dataset(cfg["data"].get<std::string>());
      gf_dataset* parts[3] = {nullptr, nullptr, nullptr};
      check(gf_dataset_split(ds.get(), fr[0], fr[1], fr[2], cfg["seed"].get<std::uint64_t>(),
                             parts));
      const char* names[3] = {"train.gflb", "val.gflb", "test.gflb"};
      Handle<gf_dataset> owned[3] = {Handle<gf_dataset>(parts[0]), Handle<gf_dataset>(parts[1]),
                                     Handle<gf_dataset>(parts[2])};
      for (int i = 0; i < 3; ++i) {
        const std::string p = (split.out_dir() / names[i]).string();
        check(gf_dataset_save(owned[i].get(), p.c_str()));
        outputs.push_back(names[i]);
        std::cout << names[i] << ": " << dataset_info(owned[i].get())["count"] << " pairs\n";
      }
      split.write_manifest(cfg, outputs, start);
    } else if (train.app()->parsed()) {
      json cfg = train.resolve({{"train", "train.gflb"},
                                {"val", "val.gflb"},
                                {"mlp",
                                 {{"hidden", 128},
                                  {"lr", 1e-3},
                                  {"weight_decay", 1e-4},
                                  {"batch_size", 256},
                                  {"patience", 50},
                                  {"max_epochs", 1000},
                                  {"seed", 42}}}});
      auto tr = load_dataset(cfg["train"].get<std::string>());
      const int d = dataset_info(tr.get())["d"].get<int>();
      auto va = load_dataset(cfg["val"].get<std::string>(), d);
      cfg["mlp"]["d"] = d;
      train.prepare_out();
      gf_model* raw = nullptr;
      check(gf_model_create(cfg["mlp"].dump().c_str(), &raw));
      Handle<gf_model> model(raw);
      char* report = nullptr;
      char* summary = nullptr;
      check(gf_model_train(model.get(), tr.get(), va.get(), &report, &summary));
      write_text(train.out_dir() / "train_report.csv", take(report));
      const json s = json::parse(take(summary));
      const std::string path = (train.out_dir() / "model.gfmc").string();
      check(gf_model_save(model.get(), path.c_str()));
      outputs.push_back("model.gfmc");
      outputs.push_back("train_report.csv");
      std::cout << "best epoch " << s["best_epoch"] << " of " << s["epochs_run"]
                << ", validation MSE " << fmt(s["best_val_loss"]) << " ("
                << s["stop_reason"].get<std::string>() << ")\n";
      train.write_manifest(cfg, outputs, start);
    } else if (eval.app()->parsed()) {
      const json cfg = eval.resolve({{"model", "model.gfmc"},
                                     {"train", "train.gflb"},
                                     {"test", "test.gflb"},
                                     {"K", 100},
                                     {"approx", "euler"},
                                     {"seed", 42}});
      gf_model* raw = nullptr;
      check(gf_model_load(cfg["model"].get<std::string>().c_str(), &raw));
      Handle<gf_model> model(raw);
      auto tr = load_dataset(cfg["train"].get<std::string>());
      auto te = load_dataset(cfg["test"].get<std::string>());
      eval.prepare_out();
      double disc = 0.0, train_rmse = 0.0, test_rmse = 0.0;
      check(gf_dataset_discretization_rmse(te.get(), cfg["K"].get<int>(),
                                           cfg["approx"].get<std::string>().c_str(),
                                           eval.workers(), &disc));
      check(gf_model_evaluate(model.get(), tr.get(), &train_rmse));
      check(gf_model_evaluate(model.get(), te.get(), &test_rmse));
      std::ostringstream csv;
      csv.precision(17);
      csv << "metric,value\n"
          << "ode_discretization_rmse," << disc << "\n"
          << "model_train_rmse," << train_rmse << "\n"
          << "model_test_rmse," << test_rmse << "\n";
      write_text(eval.out_dir() / "eval.csv", csv.str());
      outputs.push_back("eval.csv");
      std::cout << "ODE discretization RMSE " << fmt(disc) << ", model train RMSE "
                << fmt(train_rmse) << ", model test RMSE " << fmt(test_rmse) << "\n";
      eval.write_manifest(cfg, outputs, start);
    } else if (score.app()->parsed()) {
      json cfg = score.resolve({{"instance",
                                 {{"d", 2},
                                  {"J", 10},
                                  {"M", 1.0},
                                  {"mean_sampler", "ball"},
                                  {"cov", "cycle5-spd"},
                                  {"seed", 42}}},
                                {"t", 0.5},
                                {"mc_samples", 0},
                                {"seed", 42}});
      const int d = cfg["instance"]["d"].get<int>();
      if (!cfg.contains("z")) cfg["z"] = std::vector<double>(static_cast<std::size_t>(d), 0.0);
      const auto z = cfg["z"].get<std::vector<double>>();
      if (static_cast<int>(z.size()) != d)
        die(kExitConfig, "--z has " + std::to_string(z.size()) + " entries, expected " +
                             std::to_string(d));
      gf_mixture* raw = nullptr;
      check(gf_mixture_create(cfg["instance"].dump().c_str(), &raw));
      Handle<gf_mixture> mix(raw);
      const double t = cfg["t"].get<double>();
      std::vector<double> exact(z.size()), mc(z.size());
      check(gf_exact_score(mix.get(), z.data(), t, exact.data()));
      const int n_mc = cfg["mc_samples"].get<int>();
      if (n_mc > 0)
        check(gf_mc_score(mix.get(), n_mc, cfg["seed"].get<std::uint64_t>(), z.data(), t,
                          mc.data()));
      score.prepare_out();
      std::ostringstream csv;
      csv.precision(17);
      csv << "k,z,exact" << (n_mc > 0 ? ",mc" : "") << "\n";
      for (std::size_t k = 0; k < z.size(); ++k) {
        csv << k << ',' << z[k] << ',' << exact[k];
        if (n_mc > 0) csv << ',' << mc[k];
        csv << "\n";
      }
      write_text(score.out_dir() / "score.csv", csv.str());
      outputs.push_back("score.csv");
      std::cout << csv.str();
      score.write_manifest(cfg, outputs, start);
    }
  } catch (const CliError& e) {
    std::cerr << "error: " << e.message << "\n";
    return e.code;
  } catch (const json::exception& e) {
    std::cerr << "error: invalid configuration: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInternal;
  }
  return 0;
}
