/* Copyright 2026 The gmmflow Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * C interface to libgmmflow. Objects are opaque handles released with the
 * matching *_destroy function. Every call returns a gf_status; on failure
 * gf_last_error_message() describes the error on the calling thread.
 * Strings returned through char** are owned by the caller and released
 * with gf_string_free. Configurations are passed as JSON text.
 */

#ifndef GMMFLOW_H_
#define GMMFLOW_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GF_API __declspec(dllexport)
#else
#define GF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gf_status {
  GF_OK = 0,
  GF_ERR_INTERNAL = 1,
  GF_ERR_CONFIG = 2,  /* invalid argument or configuration */
  GF_ERR_NUMERIC = 3, /* non-finite state or loss */
  GF_ERR_IO = 4,
  GF_ERR_FORMAT = 5 /* malformed file or number */
} gf_status;

typedef struct gf_mixture gf_mixture;
typedef struct gf_report gf_report;
typedef struct gf_dataset gf_dataset;
typedef struct gf_model gf_model;

GF_API const char* gf_version(void);
GF_API const char* gf_last_error_message(void);
GF_API void gf_string_free(char* s);
/* A positive request wins, then GMMFLOW_WORKERS, then hardware threads. */
GF_API int gf_resolve_workers(int requested);

/* Mixtures. instance_json keys: d, J, M, mean_sampler, cov, seed. */
GF_API gf_status gf_mixture_create(const char* instance_json, gf_mixture** out);
/* means: J x d row-major; eigenvalues: d; basis: d x d column-major
 * orthogonal matrix or NULL for a diagonal covariance. */
GF_API gf_status gf_mixture_from_arrays(int d, int num_components, const double* means,
                                        const double* eigenvalues, const double* basis,
                                        gf_mixture** out);
GF_API void gf_mixture_destroy(gf_mixture* mixture);
GF_API int gf_mixture_dim(const gf_mixture* mixture);
GF_API gf_status gf_exact_score(const gf_mixture* mixture, const double* z, double t, double* out);
/* Score estimate from n_samples mixture draws taken with the given seed. */
GF_API gf_status gf_mc_score(const gf_mixture* mixture, int n_samples, uint64_t seed,
                             const double* z, double t, double* out);
/* integrator: "euler" or "heun". Writes the t = 0 endpoint into out. */
GF_API gf_status gf_solve(const gf_mixture* mixture, const double* z1, int steps,
                          const char* integrator, double* out);

/* Error sweeps. sweep_json keys: dims, steps, sigma_grid, n_traj, J, M,
 * mean_sampler, cov, norm, ref_K, approx, seed. */
GF_API gf_status gf_error_sweep(const char* sweep_json, int workers, gf_report** out);
GF_API gf_status gf_sigma_sweep(const char* sweep_json, int workers, gf_report** out);
GF_API void gf_report_destroy(gf_report* report);
GF_API gf_status gf_report_csv(const gf_report* report, char** out);
/* Fitted slopes and regressions as JSON. */
GF_API gf_status gf_report_summary(const gf_report* report, char** out);

/* (sigma, L(sigma)) CSV for the drift linear-part bound. */
GF_API gf_status gf_lcurve_csv(const double* sigmas, int n, char** out);

/* Labeled datasets. */
GF_API gf_status gf_dataset_generate(const char* instance_json, int count, int steps,
                                     const char* integrator, uint64_t seed, int workers,
                                     gf_dataset** out);
GF_API gf_status gf_dataset_load(const char* path, int expected_d, gf_dataset** out);
GF_API gf_status gf_dataset_save(const gf_dataset* ds, const char* path);
GF_API gf_status gf_dataset_export_csv(const gf_dataset* ds, const char* path);
/* out receives train, validation and test handles. */
GF_API gf_status gf_dataset_split(const gf_dataset* ds, double train, double val, double test,
                                  uint64_t seed, gf_dataset* out[3]);
/* JSON with d, count, digest and provenance. */
GF_API gf_status gf_dataset_info(const gf_dataset* ds, char** out);
/* RMSE of endpoints re-solved with (steps, integrator) against the stored
 * labels. The mixture is rebuilt from the instance recorded at generation. */
GF_API gf_status gf_dataset_discretization_rmse(const gf_dataset* ds, int steps,
                                                const char* integrator, int workers,
                                                double* out);
GF_API void gf_dataset_destroy(gf_dataset* ds);

/* Models. config_json keys: d, hidden, lr, weight_decay, batch_size,
 * patience, max_epochs, seed, beta1, beta2, eps. */
GF_API gf_status gf_model_create(const char* config_json, gf_model** out);
/* Trains to the best validation snapshot. report_csv and summary_json may be
 * NULL. */
GF_API gf_status gf_model_train(gf_model* model, const gf_dataset* train, const gf_dataset* val,
                                char** report_csv, char** summary_json);
GF_API gf_status gf_model_evaluate(const gf_model* model, const gf_dataset* ds, double* rmse);
GF_API gf_status gf_model_predict(const gf_model* model, const double* y, double* out);
GF_API gf_status gf_model_save(const gf_model* model, const char* path);
GF_API gf_status gf_model_load(const char* path, gf_model** out);
GF_API gf_status gf_model_info(const gf_model* model, char** out);
GF_API void gf_model_destroy(gf_model* model);

#ifdef __cplusplus
}
#endif

#endif /* GMMFLOW_H_ */
