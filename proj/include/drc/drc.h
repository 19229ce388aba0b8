#ifndef DRC_H
#define DRC_H

#include <stddef.h>
#include <stdint.h>

#if defined(DRC_BUILDING_LIBRARY)
#define DRC_API __attribute__((visibility("default")))
#else
#define DRC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drc_status {
  DRC_OK = 0,
  DRC_ERR_INVALID_ARGUMENT = 1,
  DRC_ERR_PARSE = 2,
  DRC_ERR_SINGULAR_MATRIX = 3,
  DRC_ERR_NUMERIC = 4,
  DRC_ERR_IO = 5,
  DRC_ERR_INTERNAL = 6
} drc_status;

typedef enum drc_nonlinearity { DRC_SINE = 0, DRC_TANH = 1 } drc_nonlinearity;

typedef struct drc_config drc_config;
typedef struct drc_dataset drc_dataset;
typedef struct drc_run drc_run;
typedef struct drc_cmaes drc_cmaes;

/* Called once per progress line during long runs. */
typedef void (*drc_progress_fn)(const char* line, void* user);

DRC_API const char* drc_version(void);
/* Stable snake_case name, e.g. "invalid_argument". */
DRC_API const char* drc_status_name(drc_status status);
/* Message of the last failure on the calling thread ("" after a success). */
DRC_API const char* drc_last_error(void);
/* Frees strings returned through char** out-parameters. */
DRC_API void drc_string_free(char* text);

/* Configs: INI text with [run], [task], [architecture], [hyper], [protocol]. */
DRC_API drc_status drc_config_load(const char* path, drc_config** out);
DRC_API drc_status drc_config_parse(const char* text, drc_config** out);
DRC_API void drc_config_free(drc_config* config);
DRC_API drc_status drc_config_set_base_seed(drc_config* config, int64_t seed);
DRC_API drc_status drc_config_base_seed(const drc_config* config, int64_t* seed);
DRC_API drc_status drc_config_set_repeats(drc_config* config, size_t repeats);
/* A non-finite value removes the noise setting. */
DRC_API drc_status drc_config_set_snr_db(drc_config* config, double snr_db);
DRC_API drc_status drc_config_set_output_dir(drc_config* config, const char* dir);
DRC_API drc_status drc_config_output_dir(const drc_config* config, char** out);
DRC_API drc_status drc_config_text(const drc_config* config, char** out);
DRC_API drc_status drc_config_fingerprint(const drc_config* config, char** out);

/* Datasets: the task named by a config, unscaled. */
DRC_API drc_status drc_dataset_from_config(const drc_config* config, drc_dataset** out);
DRC_API void drc_dataset_free(drc_dataset* dataset);
DRC_API drc_status drc_dataset_summary(const drc_dataset* dataset, char** json_line);
/* Writes dataset.csv and dataset.json under dir. */
DRC_API drc_status drc_dataset_persist(const drc_dataset* dataset, const char* dir);

/* Experiments. progress may be NULL. */
DRC_API drc_status drc_run_experiment(const drc_config* config, drc_progress_fn progress, void* user,
                                      drc_run** out);
DRC_API void drc_run_free(drc_run* run);
DRC_API drc_status drc_run_error(const drc_run* run, double* mean, double* sd);
DRC_API drc_status drc_run_records(const drc_run* run, char** jsonl);
DRC_API drc_status drc_run_persist(const drc_run* run, const char* dir);

/* Standalone searches. dir may be NULL to skip persistence; json_line
   receives the result record. */
DRC_API drc_status drc_optimize_hyper(const drc_config* config, int64_t seed, const char* dir, char** json_line);
DRC_API drc_status drc_optimize_interlayer(const drc_config* config, int64_t seed, const char* dir,
                                           char** json_line);

/* Groups "repeat" records of the given results.jsonl files. architecture may
   be NULL or "" for all. Either output may be NULL. */
DRC_API drc_status drc_report(const char* const* result_paths, size_t count, const char* architecture,
                              const char* title, char** table, char** svg);

/* Numerical primitives. Matrices are dense row-major. */
DRC_API drc_status drc_mask_uniform(size_t rows, size_t cols, int64_t seed, double* out);
/* inputs: timesteps x input_dim, mask: nodes x input_dim,
   states: timesteps x nodes, zero initial loop. */
DRC_API drc_status drc_delay_run(const double* inputs, size_t timesteps, size_t input_dim, const double* mask,
                                 size_t nodes, size_t delay_steps, double feedback_gain, double input_gain,
                                 drc_nonlinearity nonlinearity, double* states);
/* states: rows x features, targets: rows x outputs,
   weights: outputs x features. */
DRC_API drc_status drc_ridge_train(const double* states, size_t rows, size_t features, const double* targets,
                                   size_t outputs, double lambda, double* weights);
/* Minimisation form. */
DRC_API drc_status drc_expected_improvement(double mean, double variance, double best, double* out);

/* CMA-ES ask/tell. popsize 0 selects the default. */
DRC_API drc_status drc_cmaes_create(size_t dim, const double* mean0, double sigma0, int64_t seed, size_t popsize,
                                    int diagonal, drc_cmaes** out);
DRC_API void drc_cmaes_free(drc_cmaes* es);
DRC_API drc_status drc_cmaes_popsize(const drc_cmaes* es, size_t* popsize);
/* candidates: popsize x dim. */
DRC_API drc_status drc_cmaes_ask(const drc_cmaes* es, double* candidates);
DRC_API drc_status drc_cmaes_tell(drc_cmaes* es, const double* candidates, const double* fitness);
/* mean: dim entries; step_size may be NULL. */
DRC_API drc_status drc_cmaes_mean(const drc_cmaes* es, double* mean, double* step_size);

#ifdef __cplusplus
}
#endif

#endif
