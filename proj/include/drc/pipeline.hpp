#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "drc/dataset.hpp"
#include "drc/readout.hpp"
#include "drc/reservoir.hpp"

namespace drc {

/// Layer sizes plus the gains shared by every layer. Each layer's delay is
/// n_nodes + delay_offset node steps.
struct ReservoirArchitecture {
  std::vector<Index> layer_nodes{50};
  double feedback_gain = 0.8;
  double input_gain = 0.5;
  Index delay_offset = 1;
  Nonlinearity nonlinearity = Nonlinearity::sine;

  Index total_nodes() const;
  std::string describe() const;
};

/// Input mask from derive_seed(mask_seed, 0), interlayer mask l from
/// derive_seed(mask_seed, l). Every mask is independent.
DeepConfig make_deep_config(const ReservoirArchitecture& arch, Index input_dim, std::int64_t mask_seed);

DeepConfig with_gains(DeepConfig config, double feedback_gain, double input_gain);

struct ReadoutOptions {
  bool bias = false;
  VoteRule vote = VoteRule::majority;
  /// Leading timesteps of every utterance left out of the regression.
  Index washout = 0;
  /// Carry the delay buffer from one utterance to the next (in item order)
  /// instead of re-zeroing it.
  bool continuous_feed = false;
};

/// Concatenated layer states per sequence. Entries outside `items` are left
/// empty. Items are processed in the order given (this matters only for
/// continuous feed).
std::vector<Matrix> compute_features(const Dataset& dataset, const DeepConfig& config,
                                     const std::vector<std::size_t>& items, bool continuous_feed = false);

std::vector<Matrix> compute_features(const Dataset& dataset, const DeepConfig& config,
                                     bool continuous_feed = false);

RidgeSystem accumulate_system(const std::vector<Matrix>& features, const std::vector<int>& labels,
                              const std::vector<std::size_t>& items, int n_classes,
                              const ReadoutOptions& options);

ReadoutWeights fit_readout(const std::vector<Matrix>& features, const std::vector<int>& labels,
                           const std::vector<std::size_t>& items, int n_classes, double lambda,
                           const ReadoutOptions& options);

std::vector<int> predict(const std::vector<Matrix>& features, const std::vector<std::size_t>& items,
                         const ReadoutWeights& weights, const ReadoutOptions& options);

/// Error on `eval_items` of a readout fitted on `fit_items`.
double holdout_error(const std::vector<Matrix>& features, const std::vector<int>& labels,
                     const std::vector<std::size_t>& fit_items, const std::vector<std::size_t>& eval_items,
                     int n_classes, double lambda, const ReadoutOptions& options);

/// Per-class seeded split of `items` into (fit, validation). Every class with
/// at least two items keeps one in each part.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<std::size_t>& items, const std::vector<int>& labels, double validation_fraction,
    std::int64_t seed);

/// log10 grid from 1e-9 to 1e0.
std::vector<double> default_lambda_grid();

struct LambdaChoice {
  std::optional<double> fixed;
  std::vector<double> grid = default_lambda_grid();
  std::size_t inner_folds = 3;

  static LambdaChoice fixed_value(double lambda) { return LambdaChoice{lambda, {}, 3}; }
};

/// Misclassified items per lambda, summed over a seeded k-fold partition of
/// `train_items` (each fold scored by a readout fitted on the others).
std::vector<std::size_t> inner_fold_errors(const std::vector<Matrix>& features, const std::vector<int>& labels,
                                           const std::vector<std::size_t>& train_items, int n_classes,
                                           std::size_t k, const std::vector<double>& lambdas,
                                           const ReadoutOptions& options, std::int64_t seed);

/// Picks the grid value with the lowest inner k-fold error over `train_items`
/// only; ties go to the larger lambda.
double select_lambda(const std::vector<Matrix>& features, const std::vector<int>& labels,
                     const std::vector<std::size_t>& train_items, int n_classes, const LambdaChoice& choice,
                     const ReadoutOptions& options, std::int64_t seed);

struct Protocol {
  enum class Kind { kfold, fixed_split };
  Kind kind = Kind::fixed_split;
  std::size_t k = 10;
  std::int64_t fold_seed = 0;

  std::string describe() const;
};

struct EvalResult {
  double error_rate = 0.0;
  std::vector<double> per_fold_rates;
  std::vector<std::size_t> fold_sizes;
  std::vector<double> lambdas;
  /// confusion(true, predicted)
  Eigen::MatrixXi confusion;
  std::size_t n_items = 0;
  std::string config_fingerprint;
};

/// Runs the reservoir over every utterance, fits the readout on training
/// items only and scores the held-out utterances (one fold per test set).
EvalResult evaluate_pipeline(const Dataset& dataset, const DeepConfig& config, const Protocol& protocol,
                             const LambdaChoice& lambda, const ReadoutOptions& options = {},
                             std::int64_t seed = 0);

struct FoldItems {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

/// The split's (train, test) pair, or k seeded folds with the rest as train.
std::vector<FoldItems> protocol_folds(const Dataset& dataset, const Protocol& protocol);

struct FoldSetup {
  DeepConfig config;
  double lambda = 1e-4;
};

/// Chooses the reservoir and lambda for one fold. It sees the fold's training
/// items only.
using FoldTuner = std::function<FoldSetup(const std::vector<std::size_t>& train_items, std::size_t fold)>;

/// Like evaluate_pipeline, but every fold gets its own tuned configuration.
EvalResult evaluate_tuned(const Dataset& dataset, const Protocol& protocol, const FoldTuner& tune,
                          const ReadoutOptions& options = {});

/// One JSON object per line: every fold, then (if `summary`) an "all" line.
/// `extra_json` is an object merged into every line.
std::string to_record_lines(const EvalResult& result, std::int64_t seed, const std::string& extra_json = "{}",
                            bool summary = true);

}  // namespace drc
