#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drc/cmaes.hpp"
#include "drc/dataset.hpp"
#include "drc/pipeline.hpp"

namespace drc {

struct InterlayerOptions {
  std::size_t budget_iterations = 40;
  double sigma0 = 0.2;
  std::size_t popsize = 0;
  /// Diagonal covariance; defaults to on for layers of 64 nodes or more.
  std::optional<bool> diagonal;
  /// Clip candidate masks into [-1, 1] before evaluating them.
  bool clip = true;
  /// Stop after this many generations without a new running best.
  std::size_t patience = 10;
  /// Fraction of the training utterances held out to score offspring.
  double validation_fraction = 1.0 / 3.0;
  double lambda = 1e-4;
  ReadoutOptions readout;
  /// Also score each generation's best offspring on the test split.
  bool track_test = true;
};

struct InterlayerGeneration {
  std::size_t generation = 0;
  double best = 0.0;
  double mean = 0.0;
  double sigma = 0.0;
  double running_best = 0.0;
  std::optional<double> test_error;
};

struct InterlayerOptResult {
  Mask best_mask;
  double best_fitness = 0.0;
  /// Validation / test error of the starting (random) mask.
  double baseline_fitness = 0.0;
  std::optional<double> baseline_test_error;
  std::optional<double> best_test_error;
  std::vector<InterlayerGeneration> history;
  std::size_t iterations_run = 0;
};

/// Validation error of a two-layer reservoir as a function of its interlayer
/// mask. Layer 1 states are computed once.
class InterlayerFitness {
 public:
  InterlayerFitness(const Dataset& dataset, const DeepConfig& base, const InterlayerOptions& options,
                    std::int64_t seed);

  double validation_error(const Mask& mask) const;
  /// Readout fitted on every training utterance, scored on the test split.
  double test_error(const Mask& mask) const;

  Index mask_rows() const { return base_.layers[1].n_nodes; }
  Index mask_cols() const { return base_.layers[0].n_nodes; }
  const std::vector<std::size_t>& fit_items() const { return fit_; }
  const std::vector<std::size_t>& validation_items() const { return validation_; }

 private:
  std::vector<Matrix> features(const Mask& mask, const std::vector<std::size_t>& items) const;

  const Dataset& dataset_;
  DeepConfig base_;
  InterlayerOptions options_;
  std::vector<int> labels_;
  std::vector<Matrix> layer1_;
  std::vector<std::size_t> fit_, validation_, train_, test_;
};

/// CMA-ES over the flattened (row-major) interlayer mask of a two-layer
/// reservoir, starting from base.interlayer_masks[0].
InterlayerOptResult optimize_interlayer(const Dataset& dataset, const DeepConfig& base,
                                        const InterlayerOptions& options, std::int64_t seed);

/// generation, best, mean, sigma, running_best, test_error (tab separated).
std::string interlayer_trace_text(const InterlayerOptResult& result);

}  // namespace drc
