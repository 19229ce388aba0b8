#include "drc/drc.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

#include "drc/cmaes.hpp"
#include "drc/config.hpp"
#include "drc/data_io.hpp"
#include "drc/error.hpp"
#include "drc/experiment.hpp"
#include "drc/gp.hpp"
#include "drc/mask.hpp"
#include "drc/readout.hpp"
#include "drc/report.hpp"
#include "drc/reservoir.hpp"

struct drc_config {
  drc::ExperimentConfig value;
};

struct drc_dataset {
  drc::Dataset value;
};

struct drc_run {
  drc::RunRecord value;
};

struct drc_cmaes {
  drc::CmaesState value;
};

namespace {

thread_local std::string last_error;

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

drc_status fail(drc_status status, const std::string& message) {
  last_error = message;
  return status;
}

drc_status status_of(drc::ErrorCode code) {
  switch (code) {
    case drc::ErrorCode::invalid_argument: return DRC_ERR_INVALID_ARGUMENT;
    case drc::ErrorCode::parse: return DRC_ERR_PARSE;
    case drc::ErrorCode::singular_matrix: return DRC_ERR_SINGULAR_MATRIX;
    case drc::ErrorCode::numeric: return DRC_ERR_NUMERIC;
    case drc::ErrorCode::io: return DRC_ERR_IO;
    case drc::ErrorCode::internal: return DRC_ERR_INTERNAL;
  }
  return DRC_ERR_INTERNAL;
}

// Runs body, mapping every exception onto a status and the thread-local message.
template <class Body>
drc_status guarded(Body&& body) {
  try {
    body();
    last_error.clear();
    return DRC_OK;
  } catch (const drc::Error& e) {
    return fail(status_of(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return fail(DRC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(DRC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(DRC_ERR_INTERNAL, "unknown failure");
  }
}

void need(const void* p, const char* name) {
  if (!p) drc::throw_invalid(std::string(name) + " is null");
}

char* copy_out(const std::string& text) {
  char* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, text.data(), text.size() + 1);
  return out;
}

drc::Index index_of(size_t n, const char* name) {
  if (n == 0) drc::throw_invalid(std::string(name) + " must be positive");
  return static_cast<drc::Index>(n);
}

}  // namespace

extern "C" {

const char* drc_version(void) { return "1.0.0"; }

const char* drc_status_name(drc_status status) {
  if (status == DRC_OK) return "ok";
  if (status < DRC_OK || status > DRC_ERR_INTERNAL) return "unknown";
  return drc::error_code_name(static_cast<drc::ErrorCode>(status));
}

const char* drc_last_error(void) { return last_error.c_str(); }

void drc_string_free(char* text) { std::free(text); }

drc_status drc_config_load(const char* path, drc_config** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    *out = new drc_config{drc::load_config(path)};
  });
}

drc_status drc_config_parse(const char* text, drc_config** out) {
  return guarded([&] {
    need(text, "text");
    need(out, "out");
    *out = new drc_config{drc::parse_config(text)};
  });
}

void drc_config_free(drc_config* config) { delete config; }

drc_status drc_config_set_base_seed(drc_config* config, int64_t seed) {
  return guarded([&] {
    need(config, "config");
    config->value.base_seed = seed;
  });
}

drc_status drc_config_base_seed(const drc_config* config, int64_t* seed) {
  return guarded([&] {
    need(config, "config");
    need(seed, "seed");
    *seed = config->value.base_seed;
  });
}

drc_status drc_config_set_repeats(drc_config* config, size_t repeats) {
  return guarded([&] {
    need(config, "config");
    drc::require(repeats >= 1, "run.repeats: must be at least 1");
    config->value.repeats = repeats;
  });
}

drc_status drc_config_set_snr_db(drc_config* config, double snr_db) {
  return guarded([&] {
    need(config, "config");
    if (std::isfinite(snr_db))
      config->value.noise_snr_db = snr_db;
    else
      config->value.noise_snr_db.reset();
  });
}

drc_status drc_config_set_output_dir(drc_config* config, const char* dir) {
  return guarded([&] {
    need(config, "config");
    need(dir, "dir");
    config->value.output_dir = dir;
  });
}

drc_status drc_config_output_dir(const drc_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = copy_out(config->value.output_dir);
  });
}

drc_status drc_config_text(const drc_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = copy_out(drc::to_text(config->value));
  });
}

drc_status drc_config_fingerprint(const drc_config* config, char** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    *out = copy_out(drc::config_fingerprint(config->value));
  });
}

drc_status drc_dataset_from_config(const drc_config* config, drc_dataset** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    drc::validate(config->value);
    *out = new drc_dataset{drc::load_task(config->value)};
  });
}

void drc_dataset_free(drc_dataset* dataset) { delete dataset; }

drc_status drc_dataset_summary(const drc_dataset* dataset, char** json_line) {
  return guarded([&] {
    need(dataset, "dataset");
    need(json_line, "json_line");
    *json_line = copy_out(drc::dataset_summary(dataset->value));
  });
}

drc_status drc_dataset_persist(const drc_dataset* dataset, const char* dir) {
  return guarded([&] {
    need(dataset, "dataset");
    need(dir, "dir");
    drc::persist_dataset(dataset->value, dir);
  });
}

drc_status drc_run_experiment(const drc_config* config, drc_progress_fn progress, void* user, drc_run** out) {
  return guarded([&] {
    need(config, "config");
    need(out, "out");
    drc::ProgressSink sink;
    if (progress) sink = [&](const std::string& line) { progress(line.c_str(), user); };
    *out = new drc_run{drc::run_experiment(config->value, sink)};
  });
}

void drc_run_free(drc_run* run) { delete run; }

drc_status drc_run_error(const drc_run* run, double* mean, double* sd) {
  return guarded([&] {
    need(run, "run");
    if (mean) *mean = run->value.mean_error;
    if (sd) *sd = run->value.sd_error;
  });
}

drc_status drc_run_records(const drc_run* run, char** jsonl) {
  return guarded([&] {
    need(run, "run");
    need(jsonl, "jsonl");
    *jsonl = copy_out(drc::result_lines(run->value));
  });
}

drc_status drc_run_persist(const drc_run* run, const char* dir) {
  return guarded([&] {
    need(run, "run");
    need(dir, "dir");
    drc::persist(run->value, dir);
  });
}

drc_status drc_optimize_hyper(const drc_config* config, int64_t seed, const char* dir, char** json_line) {
  return guarded([&] {
    need(config, "config");
    const auto result = drc::optimize_hyper(config->value, seed);
    if (dir) drc::persist_hyper_search(config->value, seed, result, dir);
    if (json_line) *json_line = copy_out(drc::hyper_search_line(config->value, seed, result));
  });
}

drc_status drc_optimize_interlayer(const drc_config* config, int64_t seed, const char* dir, char** json_line) {
  return guarded([&] {
    need(config, "config");
    const auto result = drc::optimize_interlayer_for(config->value, seed);
    if (dir) drc::persist_interlayer(config->value, seed, result, dir);
    if (json_line) *json_line = copy_out(drc::interlayer_line(config->value, seed, result));
  });
}

drc_status drc_report(const char* const* result_paths, size_t count, const char* architecture, const char* title,
                      char** table, char** svg) {
  return guarded([&] {
    drc::require(count == 0 || result_paths, "result_paths is null");
    std::vector<std::string> texts;
    for (size_t i = 0; i < count; ++i) {
      need(result_paths[i], "result path");
      texts.push_back(drc::read_text_file(result_paths[i]));
    }
    const auto groups = drc::collect_groups(texts, architecture ? architecture : "");
    std::string t = table ? drc::report_table(groups) : std::string();
    std::string s = svg ? drc::report_svg(groups, title ? title : "") : std::string();
    if (table) *table = copy_out(t);
    if (svg) *svg = copy_out(s);
  });
}

drc_status drc_mask_uniform(size_t rows, size_t cols, int64_t seed, double* out) {
  return guarded([&] {
    need(out, "out");
    const auto mask = drc::generate_uniform_mask(index_of(rows, "rows"), index_of(cols, "cols"), seed);
    Eigen::Map<RowMajor>(out, mask.rows(), mask.cols()) = mask.values;
  });
}

drc_status drc_delay_run(const double* inputs, size_t timesteps, size_t input_dim, const double* mask, size_t nodes,
                         size_t delay_steps, double feedback_gain, double input_gain, drc_nonlinearity nonlinearity,
                         double* states) {
  return guarded([&] {
    need(inputs, "inputs");
    need(mask, "mask");
    need(states, "states");
    const auto t = index_of(timesteps, "timesteps"), k = index_of(input_dim, "input_dim"),
               n = index_of(nodes, "nodes");
    drc::require(nonlinearity == DRC_SINE || nonlinearity == DRC_TANH, "unknown nonlinearity");
    drc::Mask m;
    m.values = Eigen::Map<const RowMajor>(mask, n, k);
    drc::DelayReservoirParams p;
    p.n_nodes = n;
    p.delay_steps = index_of(delay_steps, "delay_steps");
    p.feedback_gain = feedback_gain;
    p.input_gain = input_gain;
    p.nonlinearity = nonlinearity == DRC_SINE ? drc::Nonlinearity::sine : drc::Nonlinearity::tanh;
    const drc::Matrix u = Eigen::Map<const RowMajor>(inputs, t, k);
    const auto run = drc::delay_reservoir_run(u, m, p);
    Eigen::Map<RowMajor>(states, t, n) = run.values;
  });
}

drc_status drc_ridge_train(const double* states, size_t rows, size_t features, const double* targets, size_t outputs,
                           double lambda, double* weights) {
  return guarded([&] {
    need(states, "states");
    need(targets, "targets");
    need(weights, "weights");
    const auto r = index_of(rows, "rows"), f = index_of(features, "features"), o = index_of(outputs, "outputs");
    const drc::Matrix x = Eigen::Map<const RowMajor>(states, r, f);
    const drc::Matrix y = Eigen::Map<const RowMajor>(targets, r, o);
    const auto w = drc::ridge_train(x, y, lambda);
    Eigen::Map<RowMajor>(weights, o, f) = w.values;
  });
}

drc_status drc_expected_improvement(double mean, double variance, double best, double* out) {
  return guarded([&] {
    need(out, "out");
    *out = drc::expected_improvement(mean, variance, best);
  });
}

drc_status drc_cmaes_create(size_t dim, const double* mean0, double sigma0, int64_t seed, size_t popsize,
                            int diagonal, drc_cmaes** out) {
  return guarded([&] {
    need(mean0, "mean0");
    need(out, "out");
    const auto n = index_of(dim, "dim");
    drc::CmaesOptions options;
    options.popsize = popsize;
    options.diagonal = diagonal != 0;
    const drc::Vector m = Eigen::Map<const drc::Vector>(mean0, n);
    *out = new drc_cmaes{drc::cmaes_init(n, m, sigma0, seed, options)};
  });
}

void drc_cmaes_free(drc_cmaes* es) { delete es; }

drc_status drc_cmaes_popsize(const drc_cmaes* es, size_t* popsize) {
  return guarded([&] {
    need(es, "es");
    need(popsize, "popsize");
    *popsize = es->value.popsize;
  });
}

drc_status drc_cmaes_ask(const drc_cmaes* es, double* candidates) {
  return guarded([&] {
    need(es, "es");
    need(candidates, "candidates");
    const auto batch = drc::cmaes_ask(es->value);
    const auto n = es->value.dim;
    for (std::size_t i = 0; i < batch.size(); ++i)
      Eigen::Map<drc::Vector>(candidates + static_cast<std::ptrdiff_t>(i) * n, n) = batch[i];
  });
}

drc_status drc_cmaes_tell(drc_cmaes* es, const double* candidates, const double* fitness) {
  return guarded([&] {
    need(es, "es");
    need(candidates, "candidates");
    need(fitness, "fitness");
    const auto n = es->value.dim;
    std::vector<drc::Vector> batch;
    for (std::size_t i = 0; i < es->value.popsize; ++i)
      batch.emplace_back(Eigen::Map<const drc::Vector>(candidates + static_cast<std::ptrdiff_t>(i) * n, n));
    drc::cmaes_tell(es->value, batch, std::span<const double>(fitness, es->value.popsize));
  });
}

drc_status drc_cmaes_mean(const drc_cmaes* es, double* mean, double* step_size) {
  return guarded([&] {
    need(es, "es");
    need(mean, "mean");
    Eigen::Map<drc::Vector>(mean, es->value.dim) = es->value.mean;
    if (step_size) *step_size = es->value.step_size;
  });
}

}  // extern "C"
