#include "drc/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "drc/data_io.hpp"
#include "drc/error.hpp"
#include "drc/hash.hpp"

namespace drc {

Index ReservoirArchitecture::total_nodes() const {
  return std::accumulate(layer_nodes.begin(), layer_nodes.end(), Index{0});
}

std::string ReservoirArchitecture::describe() const {
  std::ostringstream os;
  os << "layers=";
  for (std::size_t l = 0; l < layer_nodes.size(); ++l) os << (l ? "x" : "") << layer_nodes[l];
  os << ";alpha=" << format_double(feedback_gain) << ";beta=" << format_double(input_gain) << ";delay_offset=" << delay_offset
     << ";f=" << to_string(nonlinearity);
  return os.str();
}

DeepConfig make_deep_config(const ReservoirArchitecture& arch, Index input_dim, std::int64_t mask_seed) {
  require(!arch.layer_nodes.empty(), "architecture needs at least one layer");
  DeepConfig config;
  const auto base = static_cast<std::uint64_t>(mask_seed);
  for (std::size_t l = 0; l < arch.layer_nodes.size(); ++l) {
    const Index n = arch.layer_nodes[l];
    require(n >= 1, "layer sizes must be positive");
    require(n + arch.delay_offset >= 1, "delay_offset makes the delay shorter than one step");
    config.layers.push_back({n, n + arch.delay_offset, arch.feedback_gain, arch.input_gain, arch.nonlinearity});
    const auto seed = static_cast<std::int64_t>(derive_seed(base, l));
    if (l == 0)
      config.input_mask = generate_uniform_mask(n, input_dim, seed);
    else
      config.interlayer_masks.push_back(generate_uniform_mask(n, arch.layer_nodes[l - 1], seed));
  }
  config.shared_gains = true;
  return config;
}

DeepConfig with_gains(DeepConfig config, double feedback_gain, double input_gain) {
  for (auto& layer : config.layers) {
    layer.feedback_gain = feedback_gain;
    layer.input_gain = input_gain;
  }
  return config;
}

std::vector<Matrix> compute_features(const Dataset& dataset, const DeepConfig& config,
                                     const std::vector<std::size_t>& items, bool continuous_feed) {
  config.validate(dataset.input_dim);
  std::vector<Matrix> features(dataset.size());
  std::vector<Vector> carry;
  for (std::size_t idx : items) {
    require(idx < dataset.size(), "feature item index out of range");
    const auto layers = deep_run(dataset.sequences[idx].values, config, carry);
    if (continuous_feed) {
      std::vector<Vector> next;
      for (std::size_t l = 0; l < layers.size(); ++l) {
        std::span<const double> init;
        if (!carry.empty()) init = {carry[l].data(), static_cast<std::size_t>(carry[l].size())};
        next.push_back(delay_buffer_tail(layers[l], init, config.layers[l].delay_steps));
      }
      carry = std::move(next);
    }
    features[idx] = layers.size() == 1 ? layers.front().values : concat_states(layers).values;
  }
  return features;
}

std::vector<Matrix> compute_features(const Dataset& dataset, const DeepConfig& config, bool continuous_feed) {
  std::vector<std::size_t> all(dataset.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return compute_features(dataset, config, all, continuous_feed);
}

namespace {

Matrix training_rows(const Matrix& states, const ReadoutOptions& options) {
  const Index keep = std::max<Index>(0, states.rows() - options.washout);
  Matrix rows(keep, states.cols() + (options.bias ? 1 : 0));
  rows.leftCols(states.cols()) = states.bottomRows(keep);
  if (options.bias) rows.col(states.cols()).setOnes();
  return rows;
}

}  // namespace

RidgeSystem accumulate_system(const std::vector<Matrix>& features, const std::vector<int>& labels,
                              const std::vector<std::size_t>& items, int n_classes,
                              const ReadoutOptions& options) {
  require(!items.empty(), "no training items");
  const Index width = features[items.front()].cols() + (options.bias ? 1 : 0);
  RidgeSystem system(width, n_classes);
  for (std::size_t idx : items) {
    require(features[idx].size() > 0, "features missing for a training item");
    const Matrix rows = training_rows(features[idx], options);
    if (rows.rows() > 0) system.accumulate(rows, labels[idx], n_classes);
  }
  return system;
}

namespace {

ReadoutWeights finish(ReadoutWeights w, const ReadoutOptions& options) {
  w.bias = options.bias;
  return w;
}

}  // namespace

ReadoutWeights fit_readout(const std::vector<Matrix>& features, const std::vector<int>& labels,
                           const std::vector<std::size_t>& items, int n_classes, double lambda,
                           const ReadoutOptions& options) {
  return finish(accumulate_system(features, labels, items, n_classes, options).solve(lambda), options);
}

std::vector<int> predict(const std::vector<Matrix>& features, const std::vector<std::size_t>& items,
                         const ReadoutWeights& weights, const ReadoutOptions& options) {
  std::vector<int> out;
  out.reserve(items.size());
  for (std::size_t idx : items) {
    require(features[idx].size() > 0, "features missing for an evaluation item");
    out.push_back(classify_utterance(readout_apply(features[idx], weights), options.vote));
  }
  return out;
}

namespace {

std::vector<int> gather(const std::vector<int>& labels, const std::vector<std::size_t>& items) {
  std::vector<int> out;
  out.reserve(items.size());
  for (std::size_t i : items) out.push_back(labels[i]);
  return out;
}

}  // namespace

double holdout_error(const std::vector<Matrix>& features, const std::vector<int>& labels,
                     const std::vector<std::size_t>& fit_items, const std::vector<std::size_t>& eval_items,
                     int n_classes, double lambda, const ReadoutOptions& options) {
  const auto w = fit_readout(features, labels, fit_items, n_classes, lambda, options);
  return error_rate(predict(features, eval_items, w, options), gather(labels, eval_items));
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> stratified_holdout(
    const std::vector<std::size_t>& items, const std::vector<int>& labels, double validation_fraction,
    std::int64_t seed) {
  require(validation_fraction > 0.0 && validation_fraction < 1.0, "validation fraction must lie in (0, 1)");
  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t idx : items) by_class[labels[idx]].push_back(idx);
  std::vector<std::size_t> fit, validation;
  for (auto& [label, members] : by_class) {
    Rng rng = make_rng(static_cast<std::uint64_t>(seed), static_cast<std::uint64_t>(label));
    std::shuffle(members.begin(), members.end(), rng);
    std::size_t n_val = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(members.size())));
    if (members.size() >= 2) n_val = std::clamp<std::size_t>(n_val, 1, members.size() - 1);
    else n_val = 0;
    validation.insert(validation.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    fit.insert(fit.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(fit.begin(), fit.end());
  std::sort(validation.begin(), validation.end());
  return {fit, validation};
}

std::vector<double> default_lambda_grid() {
  std::vector<double> grid;
  for (int e = -9; e <= 0; ++e) grid.push_back(std::pow(10.0, e));
  return grid;
}

std::vector<std::size_t> inner_fold_errors(const std::vector<Matrix>& features, const std::vector<int>& labels,
                                           const std::vector<std::size_t>& train_items, int n_classes,
                                           std::size_t k, const std::vector<double>& lambdas,
                                           const ReadoutOptions& options, std::int64_t seed) {
  k = std::min(k, train_items.size());
  require(k >= 2, "inner cross-validation needs at least two training items");
  require(!lambdas.empty(), "no lambda values to score");
  const auto folds = kfold_split(train_items.size(), k, seed);

  std::vector<RidgeSystem> systems;
  std::vector<std::vector<std::size_t>> fold_items(k);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t pos : folds[f]) fold_items[f].push_back(train_items[pos]);
    systems.push_back(accumulate_system(features, labels, fold_items[f], n_classes, options));
  }
  std::vector<std::size_t> errors(lambdas.size(), 0);
  for (std::size_t f = 0; f < k; ++f) {
    RidgeSystem rest(systems[f].features(), n_classes);
    for (std::size_t g = 0; g < k; ++g)
      if (g != f) rest.merge(systems[g]);
    const auto truth = gather(labels, fold_items[f]);
    for (std::size_t j = 0; j < lambdas.size(); ++j) {
      try {
        const auto w = finish(rest.solve(lambdas[j]), options);
        const auto pred = predict(features, fold_items[f], w, options);
        for (std::size_t i = 0; i < pred.size(); ++i) errors[j] += pred[i] != truth[i];
      } catch (const Error&) {
        errors[j] += truth.size();
      }
    }
  }
  return errors;
}

double select_lambda(const std::vector<Matrix>& features, const std::vector<int>& labels,
                     const std::vector<std::size_t>& train_items, int n_classes, const LambdaChoice& choice,
                     const ReadoutOptions& options, std::int64_t seed) {
  if (choice.fixed) return *choice.fixed;
  require(!choice.grid.empty(), "lambda grid is empty");
  if (choice.grid.size() == 1) return choice.grid.front();
  const auto errors =
      inner_fold_errors(features, labels, train_items, n_classes, choice.inner_folds, choice.grid, options, seed);
  std::size_t best = 0;
  for (std::size_t j = 1; j < errors.size(); ++j)
    if (errors[j] < errors[best] || (errors[j] == errors[best] && choice.grid[j] > choice.grid[best])) best = j;
  return choice.grid[best];
}

std::string Protocol::describe() const {
  if (kind == Kind::fixed_split) return "fixed_split";
  return "kfold(k=" + std::to_string(k) + ",seed=" + std::to_string(fold_seed) + ")";
}

namespace {

std::string describe_config(const DeepConfig& config) {
  std::ostringstream os;
  for (const auto& p : config.layers)
    os << "[N=" << p.n_nodes << ",D=" << p.delay_steps << ",a=" << format_double(p.feedback_gain)
       << ",b=" << format_double(p.input_gain)
       << ",f=" << to_string(p.nonlinearity) << "]";
  // Hash mask contents; optimised masks have no seed that describes them.
  auto mask_hash = [](const Mask& m) {
    std::ostringstream ms;
    ms.precision(17);
    ms << m.rows() << "x" << m.cols() << ":";
    for (Index r = 0; r < m.rows(); ++r)
      for (Index c = 0; c < m.cols(); ++c) ms << m.values(r, c) << ',';
    return fingerprint(ms.str());
  };
  os << "in=" << mask_hash(config.input_mask);
  for (const auto& m : config.interlayer_masks) os << ";W=" << mask_hash(m);
  return os.str();
}

}  // namespace

std::vector<FoldItems> protocol_folds(const Dataset& dataset, const Protocol& protocol) {
  std::vector<FoldItems> out;
  if (protocol.kind == Protocol::Kind::fixed_split) {
    require(dataset.split.has_value(), "fixed-split protocol needs a dataset split");
    out.push_back({dataset.split->train, dataset.split->test});
    return out;
  }
  for (auto& test : kfold_split(dataset.size(), protocol.k, protocol.fold_seed)) {
    std::vector<bool> in_test(dataset.size(), false);
    for (std::size_t i : test) in_test[i] = true;
    FoldItems fold;
    for (std::size_t i = 0; i < dataset.size(); ++i)
      if (!in_test[i]) fold.train.push_back(i);
    fold.test = std::move(test);
    out.push_back(std::move(fold));
  }
  return out;
}

namespace {

struct Tally {
  EvalResult result;
  std::size_t wrong = 0;

  explicit Tally(int n_classes) { result.confusion = Eigen::MatrixXi::Zero(n_classes, n_classes); }

  void add(const std::vector<int>& labels, const std::vector<std::size_t>& test, const std::vector<int>& pred,
           double lambda) {
    std::size_t fold_wrong = 0;
    for (std::size_t i = 0; i < test.size(); ++i) {
      ++result.confusion(labels[test[i]], pred[i]);
      fold_wrong += pred[i] != labels[test[i]];
    }
    wrong += fold_wrong;
    result.per_fold_rates.push_back(static_cast<double>(fold_wrong) / static_cast<double>(test.size()));
    result.fold_sizes.push_back(test.size());
    result.lambdas.push_back(lambda);
    result.n_items += test.size();
  }

  EvalResult finish(const std::string& description) {
    result.error_rate = static_cast<double>(wrong) / static_cast<double>(result.n_items);
    result.config_fingerprint = fingerprint(description);
    return std::move(result);
  }
};

std::string describe_readout(const ReadoutOptions& options) {
  std::ostringstream os;
  os << "bias=" << options.bias << ",vote=" << static_cast<int>(options.vote) << ",washout=" << options.washout
     << ",continuous=" << options.continuous_feed;
  return os.str();
}

}  // namespace

EvalResult evaluate_pipeline(const Dataset& dataset, const DeepConfig& config, const Protocol& protocol,
                             const LambdaChoice& lambda, const ReadoutOptions& options, std::int64_t seed) {
  dataset.validate();
  config.validate(dataset.input_dim);
  const auto labels = dataset.labels();
  const auto features = compute_features(dataset, config, options.continuous_feed);
  const auto folds = protocol_folds(dataset, protocol);

  Tally tally(dataset.n_classes);
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& [train, test] = folds[f];
    const auto fold_seed = static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(seed), f));
    const double lam = select_lambda(features, labels, train, dataset.n_classes, lambda, options, fold_seed);
    const auto w = fit_readout(features, labels, train, dataset.n_classes, lam, options);
    tally.add(labels, test, predict(features, test, w, options), lam);
  }

  std::ostringstream desc;
  desc << dataset.provenance << "|n=" << dataset.size() << "|" << describe_config(config) << "|"
       << protocol.describe() << "|lambda=";
  if (lambda.fixed) desc << format_double(*lambda.fixed);
  else {
    desc << "grid(";
    for (double g : lambda.grid) desc << format_double(g) << ",";
    desc << "k=" << lambda.inner_folds << ")";
  }
  desc << "|" << describe_readout(options) << "|seed=" << seed;
  return tally.finish(desc.str());
}

EvalResult evaluate_tuned(const Dataset& dataset, const Protocol& protocol, const FoldTuner& tune,
                          const ReadoutOptions& options) {
  dataset.validate();
  const auto labels = dataset.labels();
  const auto folds = protocol_folds(dataset, protocol);
  Tally tally(dataset.n_classes);
  std::ostringstream desc;
  desc << dataset.provenance << "|n=" << dataset.size() << "|" << protocol.describe() << "|tuned";
  for (std::size_t f = 0; f < folds.size(); ++f) {
    const auto& [train, test] = folds[f];
    const FoldSetup setup = tune(train, f);
    setup.config.validate(dataset.input_dim);
    std::vector<std::size_t> items = train;
    items.insert(items.end(), test.begin(), test.end());
    const auto features = compute_features(dataset, setup.config, items, options.continuous_feed);
    const auto w = fit_readout(features, labels, train, dataset.n_classes, setup.lambda, options);
    tally.add(labels, test, predict(features, test, w, options), setup.lambda);
    desc << "|fold" << f << ":" << describe_config(setup.config) << ",lambda=" << format_double(setup.lambda);
  }
  desc << "|" << describe_readout(options);
  return tally.finish(desc.str());
}

std::string to_record_lines(const EvalResult& result, std::int64_t seed, const std::string& extra_json,
                            bool summary) {
  nlohmann::ordered_json extra;
  try {
    extra = nlohmann::ordered_json::parse(extra_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse, std::string("extra record fields: ") + e.what());
  }
  require(extra.is_object(), "extra record fields must be a JSON object");
  std::string out;
  auto line = [&](nlohmann::ordered_json rec) {
    rec.update(extra);
    out += rec.dump();
    out += '\n';
  };
  for (std::size_t f = 0; f < result.per_fold_rates.size(); ++f)
    line({{"fingerprint", result.config_fingerprint},
          {"seed", seed},
          {"fold", f},
          {"n_items", result.fold_sizes[f]},
          {"lambda", result.lambdas[f]},
          {"error_rate", result.per_fold_rates[f]}});
  if (!summary) return out;
  line({{"fingerprint", result.config_fingerprint},
        {"seed", seed},
        {"fold", "all"},
        {"n_items", result.n_items},
        {"error_rate", result.error_rate}});
  return out;
}

}  // namespace drc
