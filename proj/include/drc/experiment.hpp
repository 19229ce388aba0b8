#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drc/bayes_opt.hpp"
#include "drc/config.hpp"
#include "drc/interlayer.hpp"
#include "drc/pipeline.hpp"

namespace drc {

struct RepeatResult {
  std::size_t repeat = 0;
  std::int64_t seed = 0;
  EvalResult eval;
  /// Hyperparameters used on each fold (one entry for the split protocol).
  std::vector<HyperPoint> hyper;
  std::vector<std::vector<BoTraceEntry>> bo_traces;
  std::optional<InterlayerOptResult> interlayer;
};

struct RunRecord {
  ExperimentConfig config;
  std::string config_fingerprint;
  std::vector<RepeatResult> repeats;
  double mean_error = 0.0;
  double sd_error = 0.0;
  double wall_seconds = 0.0;
};

/// Loads the task named by the config: parsed or generated, unscaled, no noise.
Dataset load_task(const ExperimentConfig& config);

/// Noise (when configured) then scaling, as applied to one repeat.
Dataset prepare_repeat_data(const Dataset& raw, const ExperimentConfig& config, std::int64_t repeat_seed);

/// Repeat r draws every random stream from derive_seed(base_seed, r).
std::int64_t repeat_seed(const ExperimentConfig& config, std::size_t repeat);

using ProgressSink = std::function<void(const std::string&)>;

RunRecord run_experiment(const ExperimentConfig& config, const ProgressSink& progress = {});

/// One JSON object per line: fold lines, then one line per repeat.
/// Contains no timing, so identical configs give identical bytes.
std::string result_lines(const RunRecord& record);

/// Writes config.ini, results.jsonl, timing.json and traces/ under `dir`.
void persist(const RunRecord& record, const std::string& dir);

/// Standalone hyperparameter search on the first training set of the config
/// (holdout validation error as the objective).
HyperSearchResult optimize_hyper(const ExperimentConfig& config, std::int64_t seed);

/// Standalone interlayer optimisation for a two-layer reservoir on a task
/// with a train/test split, using the config's fixed gains and lambda.
InterlayerOptResult optimize_interlayer_for(const ExperimentConfig& config, std::int64_t seed);

/// One JSON object describing a loaded task: sizes, lengths, class counts,
/// split sizes and a content fingerprint.
std::string dataset_summary(const Dataset& dataset);

/// Writes dataset.csv (the generic feature table) and dataset.json (the
/// summary plus split membership by item id) under `dir`.
void persist_dataset(const Dataset& dataset, const std::string& dir);

std::string hyper_search_line(const ExperimentConfig& config, std::int64_t seed, const HyperSearchResult& result);
std::string interlayer_line(const ExperimentConfig& config, std::int64_t seed, const InterlayerOptResult& result);

/// config.ini, results.jsonl and traces/bo.tsv.
void persist_hyper_search(const ExperimentConfig& config, std::int64_t seed, const HyperSearchResult& result,
                          const std::string& dir);
/// config.ini, results.jsonl, traces/cmaes.tsv and best_mask.tsv.
void persist_interlayer(const ExperimentConfig& config, std::int64_t seed, const InterlayerOptResult& result,
                        const std::string& dir);

}  // namespace drc
