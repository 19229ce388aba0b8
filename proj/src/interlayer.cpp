#include "drc/interlayer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "drc/error.hpp"

namespace drc {

namespace {

Mask mask_from_vector(const Vector& v, Index rows, Index cols, bool clip, std::int64_t seed) {
  Mask m{Matrix(rows, cols), seed};
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) m.values(r, c) = v[r * cols + c];
  return clip ? clipped(std::move(m)) : m;
}

Vector vector_from_mask(const Mask& m) {
  Vector v(m.rows() * m.cols());
  for (Index r = 0; r < m.rows(); ++r)
    for (Index c = 0; c < m.cols(); ++c) v[r * m.cols() + c] = m.values(r, c);
  return v;
}

}  // namespace

InterlayerFitness::InterlayerFitness(const Dataset& dataset, const DeepConfig& base,
                                     const InterlayerOptions& options, std::int64_t seed)
    : dataset_(dataset), base_(base), options_(options), labels_(dataset.labels()) {
  require(base.depth() == 2, "interlayer optimisation is defined for two-layer reservoirs");
  require(dataset.split.has_value(), "interlayer optimisation needs a train/test split");
  base.validate(dataset.input_dim);
  train_ = dataset.split->train;
  test_ = dataset.split->test;
  std::tie(fit_, validation_) = stratified_holdout(train_, labels_, options.validation_fraction, seed);
  require(!validation_.empty(), "validation split is empty");

  std::vector<std::size_t> items = train_;
  if (options.track_test) items.insert(items.end(), test_.begin(), test_.end());
  layer1_.resize(dataset.size());
  for (std::size_t idx : items)
    layer1_[idx] = delay_reservoir_run(dataset.sequences[idx].values, base.input_mask, base.layers[0]).values;
}

std::vector<Matrix> InterlayerFitness::features(const Mask& mask, const std::vector<std::size_t>& items) const {
  std::vector<Matrix> out(dataset_.size());
  for (std::size_t idx : items) {
    const Matrix& first = layer1_[idx];
    const Matrix second = delay_reservoir_run(first, mask, base_.layers[1]).values;
    Matrix both(first.rows(), first.cols() + second.cols());
    both << first, second;
    out[idx] = std::move(both);
  }
  return out;
}

double InterlayerFitness::validation_error(const Mask& mask) const {
  std::vector<std::size_t> items = fit_;
  items.insert(items.end(), validation_.begin(), validation_.end());
  const auto feats = features(mask, items);
  return holdout_error(feats, labels_, fit_, validation_, dataset_.n_classes, options_.lambda, options_.readout);
}

double InterlayerFitness::test_error(const Mask& mask) const {
  require(options_.track_test, "test tracking is disabled");
  std::vector<std::size_t> items = train_;
  items.insert(items.end(), test_.begin(), test_.end());
  const auto feats = features(mask, items);
  return holdout_error(feats, labels_, train_, test_, dataset_.n_classes, options_.lambda, options_.readout);
}

InterlayerOptResult optimize_interlayer(const Dataset& dataset, const DeepConfig& base,
                                        const InterlayerOptions& options, std::int64_t seed) {
  require(options.budget_iterations >= 1, "CMA-ES budget must be at least one iteration");
  const InterlayerFitness fitness(dataset, base, options, seed);
  const Index rows = fitness.mask_rows();
  const Index cols = fitness.mask_cols();
  const Mask& start = base.interlayer_masks[0];

  CmaesOptions cma;
  cma.popsize = options.popsize;
  cma.diagonal = options.diagonal.value_or(std::max(rows, cols) >= 64);
  CmaesState state = cmaes_init(rows * cols, vector_from_mask(start), options.sigma0,
                                static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(seed), 1)), cma);

  InterlayerOptResult result;
  result.best_mask = start;
  result.baseline_fitness = fitness.validation_error(start);
  result.best_fitness = result.baseline_fitness;
  if (options.track_test) {
    result.baseline_test_error = fitness.test_error(start);
    result.best_test_error = result.baseline_test_error;
  }

  std::size_t stale = 0;
  for (std::size_t gen = 1; gen <= options.budget_iterations; ++gen) {
    const auto candidates = cmaes_ask(state);
    std::vector<double> values;
    values.reserve(candidates.size());
    std::vector<Mask> masks;
    for (const auto& c : candidates) {
      masks.push_back(mask_from_vector(c, rows, cols, options.clip, start.seed));
      values.push_back(fitness.validation_error(masks.back()));
    }
    const std::size_t gen_best = static_cast<std::size_t>(std::min_element(values.begin(), values.end()) - values.begin());
    InterlayerGeneration g;
    g.generation = gen;
    g.best = values[gen_best];
    g.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    g.sigma = state.step_size;
    if (options.track_test) g.test_error = fitness.test_error(masks[gen_best]);
    if (g.best < result.best_fitness) {
      result.best_fitness = g.best;
      result.best_mask = masks[gen_best];
      result.best_test_error = g.test_error;
      stale = 0;
    } else {
      ++stale;
    }
    g.running_best = result.best_fitness;
    result.history.push_back(g);
    result.iterations_run = gen;
    cmaes_tell(state, candidates, values);
    if (stale >= options.patience) break;
  }
  return result;
}

std::string interlayer_trace_text(const InterlayerOptResult& result) {
  std::ostringstream os;
  os.precision(10);
  os << "generation\tbest\tmean\tsigma\trunning_best\ttest_error\n";
  os << 0 << '\t' << result.baseline_fitness << '\t' << result.baseline_fitness << "\tnan\t"
     << result.baseline_fitness << '\t';
  if (result.baseline_test_error) os << *result.baseline_test_error; else os << "nan";
  os << '\n';
  for (const auto& g : result.history) {
    os << g.generation << '\t' << g.best << '\t' << g.mean << '\t' << g.sigma << '\t' << g.running_best << '\t';
    if (g.test_error) os << *g.test_error; else os << "nan";
    os << '\n';
  }
  return os.str();
}

}  // namespace drc
