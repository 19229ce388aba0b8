#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "drc/gp.hpp"

namespace drc {

struct BoOptions {
  std::size_t budget = 30;
  std::size_t init_count = 5;
  std::size_t candidate_count = 4096;
  std::size_t local_count = 512;
  /// Recorded for evaluations that throw or return a non-finite value.
  double failure_value = 1.0;
  /// Stop as soon as the incumbent reaches this value.
  std::optional<double> target;
  GpFitOptions gp;
};

struct BoTraceEntry {
  std::size_t iteration = 0;
  Vector point;
  double value = 0.0;
  double incumbent = 0.0;
  bool failed = false;
};

struct BoResult {
  Vector best_point;
  double best_value = 0.0;
  std::vector<BoTraceEntry> trace;
};

using Box = std::vector<std::pair<double, double>>;

/// Sequential GP/EI minimisation over a box. The first init_count points are
/// a seeded Latin hypercube; each later point maximises EI over a seeded
/// uniform candidate set plus Gaussian perturbations of the incumbent and the
/// best random candidates.
BoResult bo_minimize(const std::function<double(const Vector&)>& objective, const Box& bounds,
                     const BoOptions& options, std::int64_t seed);

/// Reservoir hyperparameters. lambda = 10^log10_lambda.
struct HyperPoint {
  double feedback_gain = 0.8;
  double input_gain = 0.5;
  double log10_lambda = -4.0;

  double lambda() const;
  Vector as_vector() const;
  static HyperPoint from_vector(const Vector& v);
};

struct HyperBounds {
  std::pair<double, double> feedback_gain{0.0, 1.2};
  std::pair<double, double> input_gain{0.0, 2.0};
  std::pair<double, double> log10_lambda{-9.0, 0.0};

  Box box() const { return {feedback_gain, input_gain, log10_lambda}; }
};

struct HyperSearchResult {
  HyperPoint best;
  double best_value = 0.0;
  std::vector<BoTraceEntry> trace;
};

HyperSearchResult bo_optimize(const std::function<double(const HyperPoint&)>& objective,
                              const HyperBounds& bounds, const BoOptions& options, std::int64_t seed);

/// Tab-separated trace: iteration, point coordinates, value, incumbent.
std::string bo_trace_text(const std::vector<BoTraceEntry>& trace, const std::vector<std::string>& names);

}  // namespace drc
