#include "drc/experiment.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <json.hpp>
#include <numeric>

#include "drc/error.hpp"
#include "drc/hash.hpp"
#include "drc/standardize.hpp"

namespace drc {

namespace {

namespace fs = std::filesystem;

// Stream indices under a repeat seed.
enum Stream : std::uint64_t { masks = 0, noise = 1, bayes = 2, cmaes = 3, folds = 4 };

std::int64_t stream_seed(std::int64_t base, Stream s) {
  return static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(base), s));
}

std::string resolve(const ExperimentConfig& c, const std::string& path) {
  if (path.empty() || fs::path(path).is_absolute() || c.source_dir.empty()) return path;
  return (fs::path(c.source_dir) / path).string();
}

fs::path prepare_dir(const std::string& dir, bool traces) {
  const fs::path root(dir);
  const fs::path target = traces ? root / "traces" : root;
  std::error_code ec;
  fs::create_directories(target, ec);
  if (ec) throw Error(ErrorCode::io, "cannot create '" + target.string() + "': " + ec.message());
  return root;
}

void say(const ProgressSink& sink, const std::string& line) {
  if (sink) sink(line);
}

BoOptions bo_options(const ExperimentConfig& c) {
  BoOptions o;
  o.budget = c.hyper.budget;
  o.init_count = c.hyper.init_count;
  return o;
}

InterlayerOptions interlayer_options(const ExperimentConfig& c) {
  InterlayerOptions io;
  io.budget_iterations = c.architecture.cmaes_budget;
  io.sigma0 = c.architecture.cmaes_sigma0;
  io.patience = c.architecture.cmaes_patience;
  io.diagonal = c.architecture.cmaes_diagonal;
  io.clip = c.architecture.cmaes_clip;
  io.validation_fraction = c.validation_fraction;
  return io;
}

// Inner k-fold error of one hyperparameter point over `train`. Reservoir
// states are computed once per point; the fold readouts share Gram blocks.
struct CrossValidationObjective {
  const Dataset& data;
  const DeepConfig& base;
  const std::vector<std::size_t>& train;
  std::size_t folds;
  std::int64_t seed;
  std::vector<int> labels = data.labels();

  double operator()(const HyperPoint& h) const {
    const auto cfg = with_gains(base, h.feedback_gain, h.input_gain);
    const auto feats = compute_features(data, cfg, train);
    const auto errors = inner_fold_errors(feats, labels, train, data.n_classes, folds, {h.lambda()}, {}, seed);
    return static_cast<double>(errors.front()) / static_cast<double>(train.size());
  }
};

HyperPoint fixed_point(const ExperimentConfig& c, double lambda) {
  return HyperPoint{c.hyper.feedback_gain, c.hyper.input_gain, std::log10(lambda)};
}

RepeatResult run_tuned(const Dataset& data, const ExperimentConfig& c, std::size_t r, std::int64_t seed,
                       const ProgressSink& progress) {
  RepeatResult rep;
  rep.repeat = r;
  rep.seed = seed;
  const DeepConfig base = make_deep_config(architecture_of(c), data.input_dim, stream_seed(seed, masks));
  Protocol protocol = c.protocol;

  if (c.hyper.mode == HyperMode::fixed) {
    LambdaChoice lambda;
    if (c.hyper.log10_lambda) lambda.fixed = std::pow(10.0, *c.hyper.log10_lambda);
    rep.eval = evaluate_pipeline(data, base, protocol, lambda, {}, stream_seed(seed, folds));
    for (double lam : rep.eval.lambdas) rep.hyper.push_back(fixed_point(c, lam));
    return rep;
  }

  const auto tune = [&](const std::vector<std::size_t>& train, std::size_t fold) {
    const auto fold_seed = static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(stream_seed(seed, bayes)), fold));
    const CrossValidationObjective objective{data, base, train, c.hyper.inner_folds, fold_seed};
    const auto found = bo_optimize(objective, c.hyper.bounds, bo_options(c), fold_seed);
    say(progress, "repeat " + std::to_string(r) + " fold " + std::to_string(fold) + ": validation error " +
                      format_double(found.best_value));
    rep.hyper.push_back(found.best);
    rep.bo_traces.push_back(found.trace);
    return FoldSetup{with_gains(base, found.best.feedback_gain, found.best.input_gain), found.best.lambda()};
  };
  rep.eval = evaluate_tuned(data, protocol, tune);
  return rep;
}

RepeatResult run_optimized(const Dataset& data, const ExperimentConfig& c, std::size_t r, std::int64_t seed,
                           const ProgressSink& progress) {
  RepeatResult rep;
  rep.repeat = r;
  rep.seed = seed;
  DeepConfig base = make_deep_config(architecture_of(c), data.input_dim, stream_seed(seed, masks));
  const auto& train = data.split->train;

  HyperPoint h;
  if (c.hyper.mode == HyperMode::fixed) {
    double lambda = 0.0;
    if (c.hyper.log10_lambda) {
      lambda = std::pow(10.0, *c.hyper.log10_lambda);
    } else {
      const auto feats = compute_features(data, base, train);
      lambda = select_lambda(feats, data.labels(), train, data.n_classes, LambdaChoice{}, {}, stream_seed(seed, folds));
    }
    h = fixed_point(c, lambda);
  } else {
    const CrossValidationObjective objective{data, base, train, c.hyper.inner_folds, stream_seed(seed, bayes)};
    const auto found = bo_optimize(objective, c.hyper.bounds, bo_options(c), stream_seed(seed, bayes));
    h = found.best;
    rep.bo_traces.push_back(found.trace);
  }
  rep.hyper.push_back(h);
  base = with_gains(base, h.feedback_gain, h.input_gain);

  InterlayerOptions io = interlayer_options(c);
  io.lambda = h.lambda();
  auto opt = optimize_interlayer(data, base, io, stream_seed(seed, cmaes));
  say(progress, "repeat " + std::to_string(r) + ": interlayer validation error " + format_double(opt.baseline_fitness) +
                    " -> " + format_double(opt.best_fitness) + " in " + std::to_string(opt.iterations_run) +
                    " generations");

  DeepConfig tuned = base;
  tuned.interlayer_masks[0] = opt.best_mask;
  rep.eval = evaluate_pipeline(data, tuned, c.protocol, LambdaChoice::fixed_value(h.lambda()), {},
                               stream_seed(seed, folds));
  rep.interlayer = std::move(opt);
  return rep;
}

nlohmann::ordered_json hyper_json(const HyperPoint& h) {
  return {{"feedback_gain", h.feedback_gain}, {"input_gain", h.input_gain}, {"log10_lambda", h.log10_lambda}};
}

}  // namespace

std::int64_t repeat_seed(const ExperimentConfig& config, std::size_t repeat) {
  return static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(config.base_seed), repeat));
}

Dataset load_task(const ExperimentConfig& c) {
  Dataset ds;
  switch (c.task.kind) {
    case TaskKind::japanese_vowels: {
      const std::string train = read_text_file(resolve(c, c.task.train_path));
      const std::string test = read_text_file(resolve(c, c.task.test_path));
      ds = parse_jv(train, test, c.task.train_counts, c.task.test_counts);
      break;
    }
    case TaskKind::feature_csv:
      ds = parse_feature_csv(read_text_file(resolve(c, c.task.table_path)), c.task.schema);
      break;
    case TaskKind::synthetic:
      ds = synth_dataset(c.task.synth);
      break;
  }
  ds.validate();
  return ds;
}

Dataset prepare_repeat_data(const Dataset& raw, const ExperimentConfig& c, std::int64_t seed) {
  Dataset ds = c.noise_snr_db ? inject_noise(raw, *c.noise_snr_db, stream_seed(seed, noise)) : raw;
  const ScalingScheme scheme = c.task.scaling.value_or(ds.split ? ScalingScheme::zscore : ScalingScheme::max_abs);
  return standardize(ds, scheme);
}

RunRecord run_experiment(const ExperimentConfig& config, const ProgressSink& progress) {
  validate(config);
  const auto start = std::chrono::steady_clock::now();
  RunRecord record;
  record.config = config;
  record.config_fingerprint = config_fingerprint(config);

  const Dataset raw = load_task(config);
  if (config.architecture.kind == ArchitectureKind::deep_optimized)
    require(raw.split.has_value(), "deep-optimized runs need a task with a train/test split");
  const Dataset shared = config.noise_snr_db ? Dataset{} : prepare_repeat_data(raw, config, 0);

  for (std::size_t r = 0; r < config.repeats; ++r) {
    const std::int64_t seed = repeat_seed(config, r);
    const Dataset data = config.noise_snr_db ? prepare_repeat_data(raw, config, seed) : shared;
    RepeatResult rep = config.architecture.kind == ArchitectureKind::deep_optimized
                           ? run_optimized(data, config, r, seed, progress)
                           : run_tuned(data, config, r, seed, progress);
    say(progress, "repeat " + std::to_string(r) + ": error " + format_double(rep.eval.error_rate));
    record.repeats.push_back(std::move(rep));
  }

  std::vector<double> errors;
  for (const auto& rep : record.repeats) errors.push_back(rep.eval.error_rate);
  record.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
  double ss = 0.0;
  for (double e : errors) ss += (e - record.mean_error) * (e - record.mean_error);
  record.sd_error = errors.size() > 1 ? std::sqrt(ss / static_cast<double>(errors.size() - 1)) : 0.0;
  record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return record;
}

std::string result_lines(const RunRecord& record) {
  const auto& c = record.config;
  nlohmann::ordered_json common{{"config", record.config_fingerprint},
                                {"name", c.name},
                                {"task", to_string(c.task.kind)},
                                {"architecture", to_string(c.architecture.kind)},
                                {"layers", c.architecture.layers},
                                {"nodes", c.architecture.nodes},
                                {"total_nodes", c.architecture.layers * c.architecture.nodes}};
  common["snr_db"] = c.noise_snr_db ? nlohmann::ordered_json(*c.noise_snr_db) : nlohmann::ordered_json();
  std::string out;
  for (const auto& rep : record.repeats) {
    nlohmann::ordered_json extra = common;
    extra["repeat"] = rep.repeat;
    extra["record"] = "fold";
    out += to_record_lines(rep.eval, rep.seed, extra.dump(), false);

    nlohmann::ordered_json line = common;
    line["record"] = "repeat";
    line["repeat"] = rep.repeat;
    line["seed"] = rep.seed;
    line["eval"] = rep.eval.config_fingerprint;
    line["n_items"] = rep.eval.n_items;
    line["error_rate"] = rep.eval.error_rate;
    auto hyper = nlohmann::ordered_json::array();
    for (const auto& h : rep.hyper) hyper.push_back(hyper_json(h));
    line["hyper"] = hyper;
    if (rep.interlayer) {
      const auto& io = *rep.interlayer;
      line["validation_error"] = io.best_fitness;
      line["baseline_validation_error"] = io.baseline_fitness;
      if (io.baseline_test_error) line["baseline_test_error"] = *io.baseline_test_error;
      line["generations"] = io.iterations_run;
    }
    out += line.dump() + '\n';
  }
  nlohmann::ordered_json summary = common;
  summary["record"] = "summary";
  summary["repeats"] = record.repeats.size();
  summary["mean_error"] = record.mean_error;
  summary["sd_error"] = record.sd_error;
  out += summary.dump() + '\n';
  return out;
}

void persist(const RunRecord& record, const std::string& dir) {
  const fs::path root = prepare_dir(dir, true);
  write_text_file((root / "config.ini").string(), to_text(record.config));
  write_text_file((root / "results.jsonl").string(), result_lines(record));
  nlohmann::ordered_json timing{{"config", record.config_fingerprint}, {"wall_seconds", record.wall_seconds}};
  write_text_file((root / "timing.json").string(), timing.dump() + '\n');
  for (const auto& rep : record.repeats) {
    const std::string r = std::to_string(rep.repeat);
    for (std::size_t f = 0; f < rep.bo_traces.size(); ++f)
      write_text_file((root / "traces" / ("bo_r" + r + "_f" + std::to_string(f) + ".tsv")).string(),
                      bo_trace_text(rep.bo_traces[f], {"feedback_gain", "input_gain", "log10_lambda"}));
    if (rep.interlayer)
      write_text_file((root / "traces" / ("cmaes_r" + r + ".tsv")).string(), interlayer_trace_text(*rep.interlayer));
  }
}

HyperSearchResult optimize_hyper(const ExperimentConfig& config, std::int64_t seed) {
  validate(config);
  const Dataset data = prepare_repeat_data(load_task(config), config, seed);
  const DeepConfig base = make_deep_config(architecture_of(config), data.input_dim, stream_seed(seed, masks));
  const auto folds = protocol_folds(data, config.protocol);
  const CrossValidationObjective objective{data, base, folds.front().train, config.hyper.inner_folds,
                                           stream_seed(seed, bayes)};
  return bo_optimize(objective, config.hyper.bounds, bo_options(config), stream_seed(seed, bayes));
}

InterlayerOptResult optimize_interlayer_for(const ExperimentConfig& config, std::int64_t seed) {
  validate(config);
  require(config.architecture.layers == 2, "architecture.layers: interlayer optimisation needs 2 layers");
  const Dataset data = prepare_repeat_data(load_task(config), config, seed);
  require(data.split.has_value(), "task: interlayer optimisation needs a train/test split");
  const DeepConfig base = make_deep_config(architecture_of(config), data.input_dim, stream_seed(seed, masks));
  InterlayerOptions io = interlayer_options(config);
  io.lambda = std::pow(10.0, config.hyper.log10_lambda.value_or(-4.0));
  return optimize_interlayer(data, base, io, stream_seed(seed, cmaes));
}

namespace {

nlohmann::ordered_json standalone_common(const ExperimentConfig& c, std::int64_t seed) {
  return {{"config", config_fingerprint(c)},
          {"name", c.name},
          {"task", to_string(c.task.kind)},
          {"architecture", to_string(c.architecture.kind)},
          {"layers", c.architecture.layers},
          {"nodes", c.architecture.nodes},
          {"seed", seed}};
}

}  // namespace

std::string dataset_summary(const Dataset& ds) {
  Index min_len = 0, max_len = 0;
  std::size_t steps = 0;
  std::vector<std::size_t> per_class(static_cast<std::size_t>(ds.n_classes), 0);
  for (const auto& s : ds.sequences) {
    const Index t = s.timesteps();
    min_len = steps == 0 ? t : std::min(min_len, t);
    max_len = std::max(max_len, t);
    steps += static_cast<std::size_t>(t);
    ++per_class[static_cast<std::size_t>(s.label)];
  }
  nlohmann::ordered_json j{{"record", "dataset"},
                           {"provenance", ds.provenance},
                           {"items", ds.size()},
                           {"classes", ds.n_classes},
                           {"input_dim", ds.input_dim},
                           {"timesteps", steps},
                           {"min_length", min_len},
                           {"max_length", max_len},
                           {"class_counts", per_class}};
  if (ds.split) {
    j["train_items"] = ds.split->train.size();
    j["test_items"] = ds.split->test.size();
  } else {
    j["train_items"] = nullptr;
    j["test_items"] = nullptr;
  }
  j["warnings"] = ds.warnings;
  j["fingerprint"] = fingerprint(write_feature_csv(ds));
  return j.dump() + '\n';
}

void persist_dataset(const Dataset& dataset, const std::string& dir) {
  const fs::path root = prepare_dir(dir, false);
  write_text_file((root / "dataset.csv").string(), write_feature_csv(dataset));
  auto j = nlohmann::ordered_json::parse(dataset_summary(dataset));
  if (dataset.split) {
    auto ids = [&](const std::vector<std::size_t>& items) {
      std::vector<std::string> out;
      for (auto i : items) out.push_back(dataset.sequences[i].id);
      return out;
    };
    j["train_ids"] = ids(dataset.split->train);
    j["test_ids"] = ids(dataset.split->test);
  }
  write_text_file((root / "dataset.json").string(), j.dump() + '\n');
}

std::string hyper_search_line(const ExperimentConfig& config, std::int64_t seed, const HyperSearchResult& result) {
  auto j = standalone_common(config, seed);
  j["record"] = "hyper_search";
  j["evaluations"] = result.trace.size();
  j["best"] = hyper_json(result.best);
  j["validation_error"] = result.best_value;
  return j.dump() + '\n';
}

std::string interlayer_line(const ExperimentConfig& config, std::int64_t seed, const InterlayerOptResult& result) {
  auto j = standalone_common(config, seed);
  j["record"] = "interlayer_search";
  j["generations"] = result.iterations_run;
  j["validation_error"] = result.best_fitness;
  j["baseline_validation_error"] = result.baseline_fitness;
  j["test_error"] = result.best_test_error ? nlohmann::ordered_json(*result.best_test_error) : nlohmann::ordered_json();
  j["baseline_test_error"] =
      result.baseline_test_error ? nlohmann::ordered_json(*result.baseline_test_error) : nlohmann::ordered_json();
  return j.dump() + '\n';
}

void persist_hyper_search(const ExperimentConfig& config, std::int64_t seed, const HyperSearchResult& result,
                          const std::string& dir) {
  const fs::path root = prepare_dir(dir, true);
  write_text_file((root / "config.ini").string(), to_text(config));
  write_text_file((root / "results.jsonl").string(), hyper_search_line(config, seed, result));
  write_text_file((root / "traces" / "bo.tsv").string(),
                  bo_trace_text(result.trace, {"feedback_gain", "input_gain", "log10_lambda"}));
}

void persist_interlayer(const ExperimentConfig& config, std::int64_t seed, const InterlayerOptResult& result,
                        const std::string& dir) {
  const fs::path root = prepare_dir(dir, true);
  write_text_file((root / "config.ini").string(), to_text(config));
  write_text_file((root / "results.jsonl").string(), interlayer_line(config, seed, result));
  write_text_file((root / "traces" / "cmaes.tsv").string(), interlayer_trace_text(result));
  std::string mask;
  const Matrix& m = result.best_mask.values;
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c) mask += '\t';
      mask += format_double(m(r, c));
    }
    mask += '\n';
  }
  write_text_file((root / "best_mask.tsv").string(), mask);
}

}  // namespace drc
