// Copyright 2026 The gmmflow Authors
// SPDX-License-Identifier: Apache-2.0

#include "gmmflow.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "gmmflow/bounds.hpp"
#include "gmmflow/error.hpp"
#include "gmmflow/experiments.hpp"
#include "gmmflow/format.hpp"
#include "gmmflow/labels.hpp"
#include "gmmflow/mlp.hpp"
#include "gmmflow/parallel.hpp"

#ifndef GMMFLOW_VERSION
#define GMMFLOW_VERSION "0.0.0"
#endif

struct gf_mixture {
  gmmflow::MixtureSpec spec;
};

struct gf_report {
  gmmflow::ErrorReport report;
};

struct gf_dataset {
  gmmflow::LabeledDataset ds;
};

struct gf_model {
  gmmflow::MlpModel model;
};

namespace {

using gmmflow::ErrorKind;

thread_local std::string g_last_error;

gf_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return GF_ERR_CONFIG;
    case ErrorKind::kNumerical: return GF_ERR_NUMERIC;
    case ErrorKind::kIo: return GF_ERR_IO;
    case ErrorKind::kFormat: return GF_ERR_FORMAT;
  }
  return GF_ERR_INTERNAL;
}

template <typename F>
gf_status guarded(F&& body) {
  try {
    g_last_error.clear();
    body();
    return GF_OK;
  } catch (const gmmflow::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const nlohmann::json::exception& e) {
    g_last_error = std::string("invalid JSON configuration: ") + e.what();
    return GF_ERR_CONFIG;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return GF_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return GF_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  gmmflow::require(p != nullptr, std::string(what) + " must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

nlohmann::json parse_json(const char* text) {
  need(text, "configuration");
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    gmmflow::fail(ErrorKind::kInvalidArgument, std::string("malformed JSON: ") + e.what());
  }
}

gmmflow::Vector to_vector(const double* p, int d) {
  return Eigen::Map<const gmmflow::Vector>(p, d);
}

void from_vector(const gmmflow::Vector& v, double* out) {
  Eigen::Map<gmmflow::Vector>(out, v.size()) = v;
}

gmmflow::SolveConfig solve_config(int steps, const char* integrator) {
  need(integrator, "integrator");
  gmmflow::SolveConfig cfg;
  cfg.steps = steps;
  cfg.integrator = gmmflow::parse_integrator(integrator);
  gmmflow::require(steps >= 1, "step count must be >= 1");
  return cfg;
}

template <typename T>
T* make(T value) {
  return new T{std::move(value)};
}

}  // namespace

extern "C" {

const char* gf_version(void) { return GMMFLOW_VERSION; }

const char* gf_last_error_message(void) { return g_last_error.c_str(); }

void gf_string_free(char* s) { std::free(s); }

int gf_resolve_workers(int requested) { return gmmflow::resolve_workers(requested); }

gf_status gf_mixture_create(const char* instance_json, gf_mixture** out) {
  return guarded([&] {
    need(out, "out");
    const auto ic = parse_json(instance_json).get<gmmflow::InstanceConfig>();
    *out = make(gf_mixture{gmmflow::build_instance(ic)});
  });
}

gf_status gf_mixture_from_arrays(int d, int num_components, const double* means,
                                 const double* eigenvalues, const double* basis,
                                 gf_mixture** out) {
  return guarded([&] {
    need(out, "out");
    need(means, "means");
    need(eigenvalues, "eigenvalues");
    gmmflow::require(d >= 1 && num_components >= 1, "d and J must be >= 1");
    std::vector<gmmflow::Vector> mus;
    for (int j = 0; j < num_components; ++j) mus.push_back(to_vector(means + j * d, d));
    gmmflow::Vector lambda = to_vector(eigenvalues, d);
    auto cov = basis == nullptr
                   ? gmmflow::CovarianceSpec::diagonal(std::move(lambda))
                   : gmmflow::CovarianceSpec::eigen_factored(
                         Eigen::Map<const gmmflow::Matrix>(basis, d, d), std::move(lambda));
    *out = make(gf_mixture{gmmflow::MixtureSpec(std::move(mus), std::move(cov))});
  });
}

void gf_mixture_destroy(gf_mixture* mixture) { delete mixture; }

int gf_mixture_dim(const gf_mixture* mixture) {
  return mixture == nullptr ? 0 : mixture->spec.dim();
}

gf_status gf_exact_score(const gf_mixture* mixture, const double* z, double t, double* out) {
  return guarded([&] {
    need(mixture, "mixture");
    need(z, "z");
    need(out, "out");
    from_vector(gmmflow::exact_score(mixture->spec, to_vector(z, mixture->spec.dim()), t), out);
  });
}

gf_status gf_mc_score(const gf_mixture* mixture, int n_samples, uint64_t seed, const double* z,
                      double t, double* out) {
  return guarded([&] {
    need(mixture, "mixture");
    need(z, "z");
    need(out, "out");
    gmmflow::require(n_samples >= 1, "sample count must be >= 1");
    gmmflow::RngStream rng(seed, 0);
    const auto data = gmmflow::sample_mixture(mixture->spec, n_samples, rng);
    from_vector(gmmflow::mc_score(data, to_vector(z, mixture->spec.dim()), t), out);
  });
}

gf_status gf_solve(const gf_mixture* mixture, const double* z1, int steps, const char* integrator,
                   double* out) {
  return guarded([&] {
    need(mixture, "mixture");
    need(z1, "z1");
    need(out, "out");
    const auto cfg = solve_config(steps, integrator);
    from_vector(gmmflow::solve(mixture->spec, to_vector(z1, mixture->spec.dim()), cfg).z_final,
                out);
  });
}

gf_status gf_error_sweep(const char* sweep_json, int workers, gf_report** out) {
  return guarded([&] {
    need(out, "out");
    auto cfg = parse_json(sweep_json).get<gmmflow::SweepConfig>();
    cfg.workers = workers;
    *out = make(gf_report{gmmflow::run_error_sweep(cfg)});
  });
}

gf_status gf_sigma_sweep(const char* sweep_json, int workers, gf_report** out) {
  return guarded([&] {
    need(out, "out");
    auto cfg = parse_json(sweep_json).get<gmmflow::SweepConfig>();
    cfg.workers = workers;
    *out = make(gf_report{gmmflow::run_sigma_sweep(cfg)});
  });
}

void gf_report_destroy(gf_report* report) { delete report; }

gf_status gf_report_csv(const gf_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    std::ostringstream os;
    gmmflow::write_error_csv(os, report->report);
    *out = dup_string(os.str());
  });
}

gf_status gf_report_summary(const gf_report* report, char** out) {
  return guarded([&] {
    need(report, "report");
    need(out, "out");
    *out = dup_string(gmmflow::summarize(report->report).dump(2));
  });
}

gf_status gf_lcurve_csv(const double* sigmas, int n, char** out) {
  return guarded([&] {
    need(sigmas, "sigmas");
    need(out, "out");
    gmmflow::require(n >= 1, "sigma grid must be non-empty");
    std::ostringstream os;
    gmmflow::write_lcurve_csv(os, gmmflow::lcurve(std::vector<double>(sigmas, sigmas + n)));
    *out = dup_string(os.str());
  });
}

gf_status gf_dataset_generate(const char* instance_json, int count, int steps,
                              const char* integrator, uint64_t seed, int workers,
                              gf_dataset** out) {
  return guarded([&] {
    need(out, "out");
    const auto ic = parse_json(instance_json).get<gmmflow::InstanceConfig>();
    const auto cfg = solve_config(steps, integrator);
    const auto spec = gmmflow::build_instance(ic);
    const nlohmann::json extra = {{"instance", ic}};
    *out = make(gf_dataset{gmmflow::generate_labels(spec, count, cfg, seed, workers, extra)});
  });
}

gf_status gf_dataset_load(const char* path, int expected_d, gf_dataset** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = make(gf_dataset{gmmflow::load(path, expected_d)});
  });
}

gf_status gf_dataset_save(const gf_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    gmmflow::save(ds->ds, path);
  });
}

gf_status gf_dataset_export_csv(const gf_dataset* ds, const char* path) {
  return guarded([&] {
    need(ds, "dataset");
    need(path, "path");
    std::ostringstream os;
    gmmflow::export_csv(ds->ds, os);
    gmmflow::write_file_atomic(path, os.str());
  });
}

gf_status gf_dataset_split(const gf_dataset* ds, double train, double val, double test,
                           uint64_t seed, gf_dataset* out[3]) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    auto parts = gmmflow::split(ds->ds, {train, val, test}, seed);
    for (int i = 0; i < 3; ++i) out[i] = make(gf_dataset{std::move(parts[i])});
  });
}

gf_status gf_dataset_info(const gf_dataset* ds, char** out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    const nlohmann::json info = {{"d", ds->ds.d},
                                 {"count", ds->ds.size()},
                                 {"digest", ds->ds.digest()},
                                 {"provenance", ds->ds.provenance}};
    *out = dup_string(info.dump(2));
  });
}

gf_status gf_dataset_discretization_rmse(const gf_dataset* ds, int steps, const char* integrator,
                                         int workers, double* out) {
  return guarded([&] {
    need(ds, "dataset");
    need(out, "out");
    const nlohmann::json& prov = ds->ds.provenance;
    if (!prov.contains("instance") || !prov.contains("solve") || !prov.contains("spec_digest"))
      gmmflow::fail(ErrorKind::kFormat, "dataset provenance does not record its instance");
    const auto spec = gmmflow::build_instance(prov.at("instance").get<gmmflow::InstanceConfig>());
    const auto label_cfg =
        solve_config(prov.at("solve").at("K").get<int>(),
                     prov.at("solve").at("integrator").get<std::string>().c_str());
    if (gmmflow::spec_digest(spec, label_cfg) != prov.at("spec_digest").get<std::string>())
      gmmflow::fail(ErrorKind::kFormat, "rebuilt instance does not match the recorded digest");
    *out = gmmflow::discretization_rmse(spec, ds->ds, solve_config(steps, integrator), workers);
  });
}

void gf_dataset_destroy(gf_dataset* ds) { delete ds; }

gf_status gf_model_create(const char* config_json, gf_model** out) {
  return guarded([&] {
    need(out, "out");
    const auto cfg = parse_json(config_json).get<gmmflow::MlpConfig>();
    *out = make(gf_model{gmmflow::create_model(cfg)});
  });
}

gf_status gf_model_train(gf_model* model, const gf_dataset* train, const gf_dataset* val,
                         char** report_csv, char** summary_json) {
  return guarded([&] {
    need(model, "model");
    need(train, "training set");
    need(val, "validation set");
    const auto report = gmmflow::train(model->model, train->ds, val->ds);
    if (report_csv != nullptr) {
      std::ostringstream os;
      gmmflow::write_train_report_csv(report, os);
      *report_csv = dup_string(os.str());
    }
    if (summary_json != nullptr) {
      const nlohmann::json s = {{"epochs_run", report.train_loss.size() - 1},
                                {"best_epoch", report.best_epoch},
                                {"best_val_loss", report.best_val_loss},
                                {"stop_reason", report.stop_reason}};
      *summary_json = dup_string(s.dump(2));
    }
  });
}

gf_status gf_model_evaluate(const gf_model* model, const gf_dataset* ds, double* rmse) {
  return guarded([&] {
    need(model, "model");
    need(ds, "dataset");
    need(rmse, "rmse");
    *rmse = gmmflow::evaluate(model->model.params, ds->ds);
  });
}

gf_status gf_model_predict(const gf_model* model, const double* y, double* out) {
  return guarded([&] {
    need(model, "model");
    need(y, "y");
    need(out, "out");
    const int d = model->model.params.dim();
    from_vector(gmmflow::forward(model->model.params, to_vector(y, d)), out);
  });
}

gf_status gf_model_save(const gf_model* model, const char* path) {
  return guarded([&] {
    need(model, "model");
    need(path, "path");
    gmmflow::save_checkpoint(model->model, path);
  });
}

gf_status gf_model_load(const char* path, gf_model** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = make(gf_model{gmmflow::load_checkpoint(path)});
  });
}

gf_status gf_model_info(const gf_model* model, char** out) {
  return guarded([&] {
    need(model, "model");
    need(out, "out");
    const nlohmann::json info = {{"config", model->model.config},
                                 {"epoch", model->model.epoch},
                                 {"val_loss", model->model.val_loss},
                                 {"n_params", model->model.params.size()}};
    *out = dup_string(info.dump(2));
  });
}

void gf_model_destroy(gf_model* model) { delete model; }

}  // extern "C"
