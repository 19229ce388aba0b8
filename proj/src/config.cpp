#include "drc/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>
#include <sstream>

#include "drc/error.hpp"
#include "drc/hash.hpp"

namespace drc {

namespace {

namespace pt = boost::property_tree;

[[noreturn]] void field_error(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::invalid_argument, path + ": " + what);
}

void check_field(bool ok, const std::string& path, const std::string& what) {
  if (!ok) field_error(path, what);
}

// Reads one section, tracking which keys were consumed so leftovers can be
// reported as unknown.
class Section {
 public:
  Section(const pt::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  bool has(const std::string& key) const { return tree_ && tree_->find(key) != tree_->not_found(); }
  std::string path(const std::string& key) const { return name_ + "." + key; }

  std::optional<std::string> raw(const std::string& key) {
    used_.insert(key);
    if (!has(key)) return std::nullopt;
    return tree_->get<std::string>(key);
  }

  std::string text(const std::string& key, const std::string& fallback) {
    return raw(key).value_or(fallback);
  }

  double real(const std::string& key, double fallback) {
    const auto v = raw(key);
    return v ? parse_real(key, *v) : fallback;
  }

  std::optional<double> optional_real(const std::string& key, const std::string& unset_word,
                                      std::optional<double> fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == unset_word) return std::nullopt;
    return parse_real(key, *v);
  }

  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    std::int64_t out = 0;
    const auto* end = v->data() + v->size();
    const auto [ptr, ec] = std::from_chars(v->data(), end, out);
    if (ec != std::errc() || ptr != end || v->empty()) field_error(path(key), "expected an integer, got '" + *v + "'");
    return out;
  }

  std::size_t count(const std::string& key, std::size_t fallback) {
    const auto v = integer(key, static_cast<std::int64_t>(fallback));
    check_field(v >= 0, path(key), "must be nonnegative");
    return static_cast<std::size_t>(v);
  }

  std::vector<int> int_list(const std::string& key, const std::vector<int>& fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    std::vector<int> out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
      if (b == std::string::npos) field_error(path(key), "empty list entry");
      item = item.substr(b, e - b + 1);
      int x = 0;
      const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), x);
      if (ec != std::errc() || ptr != item.data() + item.size())
        field_error(path(key), "expected a comma separated integer list, got '" + *v + "'");
      out.push_back(x);
    }
    return out;
  }

  std::vector<std::string> string_list(const std::string& key) {
    const auto v = raw(key);
    std::vector<std::string> out;
    if (!v || v->empty()) return out;
    std::stringstream ss(*v);
    std::string item;
    while (std::getline(ss, item, ',')) {
      const auto b = item.find_first_not_of(" \t"), e = item.find_last_not_of(" \t");
      out.push_back(b == std::string::npos ? std::string() : item.substr(b, e - b + 1));
    }
    return out;
  }

  std::optional<bool> tristate(const std::string& key) {
    const auto v = raw(key);
    if (!v || *v == "auto") return std::nullopt;
    if (*v == "true") return true;
    if (*v == "false") return false;
    field_error(path(key), "expected auto, true or false, got '" + *v + "'");
  }

  bool flag(const std::string& key, bool fallback) {
    const auto v = raw(key);
    if (!v) return fallback;
    if (*v == "true") return true;
    if (*v == "false") return false;
    field_error(path(key), "expected true or false, got '" + *v + "'");
  }

  /// Keys present but never read.
  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, child] : *tree_) {
      if (!child.empty()) field_error(path(key), "nested keys are not supported");
      if (!used_.count(key)) field_error(path(key), "unknown or unused key");
    }
  }

 private:
  double parse_real(const std::string& key, const std::string& v) const {
    double out = 0.0;
    const auto* end = v.data() + v.size();
    const auto [ptr, ec] = std::from_chars(v.data(), end, out);
    if (ec != std::errc() || ptr != end || v.empty()) field_error(path(key), "expected a number, got '" + v + "'");
    return out;
  }

  const pt::ptree* tree_;
  std::string name_;
  std::set<std::string> used_;
};

TaskKind parse_task_kind(const std::string& v, const std::string& path) {
  if (v == "japanese_vowels") return TaskKind::japanese_vowels;
  if (v == "synthetic") return TaskKind::synthetic;
  if (v == "feature_csv") return TaskKind::feature_csv;
  field_error(path, "expected japanese_vowels, synthetic or feature_csv, got '" + v + "'");
}

ArchitectureKind parse_architecture_kind(const std::string& v, const std::string& path) {
  if (v == "shallow") return ArchitectureKind::shallow;
  if (v == "deep") return ArchitectureKind::deep;
  if (v == "deep-optimized") return ArchitectureKind::deep_optimized;
  field_error(path, "expected shallow, deep or deep-optimized, got '" + v + "'");
}

HyperMode parse_hyper_mode(const std::string& v, const std::string& path) {
  if (v == "fixed") return HyperMode::fixed;
  if (v == "bayesian") return HyperMode::bayesian;
  field_error(path, "expected fixed or bayesian, got '" + v + "'");
}

std::string list_text(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::string delimiter_text(char d) { return d == '\t' ? "tab" : std::string(1, d); }

}  // namespace

const char* to_string(TaskKind kind) noexcept {
  switch (kind) {
    case TaskKind::japanese_vowels: return "japanese_vowels";
    case TaskKind::synthetic: return "synthetic";
    case TaskKind::feature_csv: return "feature_csv";
  }
  return "synthetic";
}

const char* to_string(ArchitectureKind kind) noexcept {
  switch (kind) {
    case ArchitectureKind::shallow: return "shallow";
    case ArchitectureKind::deep: return "deep";
    case ArchitectureKind::deep_optimized: return "deep-optimized";
  }
  return "shallow";
}

const char* to_string(HyperMode mode) noexcept {
  return mode == HyperMode::fixed ? "fixed" : "bayesian";
}

ExperimentConfig parse_config(std::string_view text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(text)};
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error(ErrorCode::parse, "config line " + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [name, child] : tree) {
    static const std::set<std::string> known{"run", "task", "architecture", "hyper", "protocol"};
    if (!known.count(name)) field_error(name, child.empty() ? "keys must live inside a section" : "unknown section");
  }
  auto section = [&](const std::string& name) {
    const auto it = tree.find(name);
    return Section(it == tree.not_found() ? nullptr : &it->second, name);
  };

  ExperimentConfig c;
  const ExperimentConfig d;

  Section run = section("run");
  c.name = run.text("name", d.name);
  c.repeats = run.count("repeats", d.repeats);
  c.base_seed = run.integer("base_seed", d.base_seed);
  c.output_dir = run.text("output_dir", d.output_dir);
  c.noise_snr_db = run.optional_real("noise_snr_db", "none", d.noise_snr_db);
  c.validation_fraction = run.real("validation_fraction", d.validation_fraction);
  run.reject_unknown();

  Section task = section("task");
  c.task.kind = parse_task_kind(task.text("kind", to_string(d.task.kind)), task.path("kind"));
  if (const auto s = task.raw("scaling"); s && *s != "auto") {
    try {
      c.task.scaling = parse_scaling_scheme(*s);
    } catch (const Error&) {
      field_error(task.path("scaling"), "expected auto, zscore, maxabs or none, got '" + *s + "'");
    }
  }
  switch (c.task.kind) {
    case TaskKind::japanese_vowels:
      c.task.train_path = task.text("train_path", "");
      c.task.test_path = task.text("test_path", "");
      c.task.train_counts = task.int_list("train_counts", d.task.train_counts);
      c.task.test_counts = task.int_list("test_counts", d.task.test_counts);
      break;
    case TaskKind::feature_csv: {
      c.task.table_path = task.text("table_path", "");
      c.task.schema.id_column = task.text("id_column", d.task.schema.id_column);
      c.task.schema.label_column = task.text("label_column", d.task.schema.label_column);
      c.task.schema.timestep_column = task.text("timestep_column", "");
      c.task.schema.classes = task.string_list("class_names");
      const auto delim = task.text("delimiter", ",");
      if (delim == "tab") c.task.schema.delimiter = '\t';
      else if (delim.size() == 1) c.task.schema.delimiter = delim[0];
      else field_error(task.path("delimiter"), "expected one character or 'tab'");
      break;
    }
    case TaskKind::synthetic: {
      auto& s = c.task.synth;
      s.n_classes = static_cast<int>(task.integer("classes", d.task.synth.n_classes));
      s.n_per_class = static_cast<int>(task.integer("per_class", d.task.synth.n_per_class));
      s.min_length = task.integer("min_length", d.task.synth.min_length);
      s.max_length = task.integer("max_length", d.task.synth.max_length);
      s.input_dim = task.integer("input_dim", d.task.synth.input_dim);
      s.difficulty = task.real("difficulty", d.task.synth.difficulty);
      s.seed = task.integer("data_seed", d.task.synth.seed);
      break;
    }
  }
  task.reject_unknown();

  Section arch = section("architecture");
  auto& a = c.architecture;
  a.kind = parse_architecture_kind(arch.text("kind", to_string(d.architecture.kind)), arch.path("kind"));
  const Index default_layers = a.kind == ArchitectureKind::shallow ? 1 : 2;
  a.layers = arch.integer("layers", default_layers);
  a.nodes = arch.integer("nodes", d.architecture.nodes);
  a.delay_offset = arch.integer("delay_offset", d.architecture.delay_offset);
  if (const auto f = arch.raw("nonlinearity")) {
    try {
      a.nonlinearity = parse_nonlinearity(*f);
    } catch (const Error&) {
      field_error(arch.path("nonlinearity"), "expected sine or tanh, got '" + *f + "'");
    }
  }
  if (a.kind == ArchitectureKind::deep_optimized) {
    a.cmaes_budget = arch.count("cmaes_budget", d.architecture.cmaes_budget);
    a.cmaes_sigma0 = arch.real("cmaes_sigma0", d.architecture.cmaes_sigma0);
    a.cmaes_patience = arch.count("cmaes_patience", d.architecture.cmaes_patience);
    a.cmaes_diagonal = arch.tristate("cmaes_diagonal");
    a.cmaes_clip = arch.flag("cmaes_clip", d.architecture.cmaes_clip);
  }
  arch.reject_unknown();

  Section hyper = section("hyper");
  auto& h = c.hyper;
  h.mode = parse_hyper_mode(hyper.text("mode", to_string(d.hyper.mode)), hyper.path("mode"));
  if (h.mode == HyperMode::fixed) {
    h.feedback_gain = hyper.real("feedback_gain", d.hyper.feedback_gain);
    h.input_gain = hyper.real("input_gain", d.hyper.input_gain);
    h.log10_lambda = hyper.optional_real("log10_lambda", "auto", d.hyper.log10_lambda);
  } else {
    h.budget = hyper.count("budget", d.hyper.budget);
    h.init_count = hyper.count("init_count", d.hyper.init_count);
    h.inner_folds = hyper.count("inner_folds", d.hyper.inner_folds);
    auto bound = [&](const std::string& key, std::pair<double, double>& b) {
      b.first = hyper.real(key + "_min", b.first);
      b.second = hyper.real(key + "_max", b.second);
    };
    bound("feedback_gain", h.bounds.feedback_gain);
    bound("input_gain", h.bounds.input_gain);
    bound("log10_lambda", h.bounds.log10_lambda);
  }
  hyper.reject_unknown();

  Section protocol = section("protocol");
  const auto kind = protocol.text("kind", c.task.kind == TaskKind::japanese_vowels ? "split" : "kfold");
  if (kind == "kfold") {
    c.protocol.kind = Protocol::Kind::kfold;
    c.protocol.k = protocol.count("folds", 10);
    c.protocol.fold_seed = protocol.integer("fold_seed", 0);
  } else if (kind == "split") {
    c.protocol.kind = Protocol::Kind::fixed_split;
  } else {
    field_error(protocol.path("kind"), "expected kfold or split, got '" + kind + "'");
  }
  protocol.reject_unknown();

  validate(c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  ExperimentConfig c = parse_config(read_text_file(path));
  c.source_dir = std::filesystem::path(path).parent_path().string();
  return c;
}

void validate(const ExperimentConfig& c) {
  check_field(!c.name.empty(), "run.name", "must not be empty");
  check_field(c.repeats >= 1, "run.repeats", "must be at least 1");
  check_field(!c.output_dir.empty(), "run.output_dir", "must not be empty");
  check_field(!c.noise_snr_db || !std::isnan(*c.noise_snr_db), "run.noise_snr_db", "must be a number or none");
  check_field(c.validation_fraction > 0.0 && c.validation_fraction < 1.0, "run.validation_fraction",
              "must lie in (0, 1)");

  const auto& t = c.task;
  const bool has_split = t.kind == TaskKind::japanese_vowels;
  switch (t.kind) {
    case TaskKind::japanese_vowels:
      check_field(!t.train_path.empty(), "task.train_path", "is required");
      check_field(!t.test_path.empty(), "task.test_path", "is required");
      check_field(!t.train_counts.empty(), "task.train_counts", "must list at least one speaker");
      check_field(t.train_counts.size() == t.test_counts.size(), "task.test_counts",
                  "must list as many speakers as task.train_counts");
      for (int n : t.train_counts) check_field(n >= 0, "task.train_counts", "entries must be nonnegative");
      for (int n : t.test_counts) check_field(n >= 0, "task.test_counts", "entries must be nonnegative");
      break;
    case TaskKind::feature_csv:
      check_field(!t.table_path.empty(), "task.table_path", "is required");
      check_field(!t.schema.id_column.empty(), "task.id_column", "must not be empty");
      check_field(!t.schema.label_column.empty(), "task.label_column", "must not be empty");
      break;
    case TaskKind::synthetic:
      check_field(t.synth.n_classes >= 2, "task.classes", "must be at least 2");
      check_field(t.synth.n_per_class >= 1, "task.per_class", "must be at least 1");
      check_field(t.synth.min_length >= 1, "task.min_length", "must be at least 1");
      check_field(t.synth.max_length >= t.synth.min_length, "task.max_length", "must be at least task.min_length");
      check_field(t.synth.input_dim >= 1, "task.input_dim", "must be at least 1");
      check_field(t.synth.difficulty > 0.0 && t.synth.difficulty <= 1.0, "task.difficulty", "must lie in (0, 1]");
      break;
  }
  check_field(!(t.scaling == ScalingScheme::zscore && !has_split), "task.scaling",
              "zscore needs a task with a train/test split");

  const auto& a = c.architecture;
  check_field(a.nodes >= 1, "architecture.nodes", "must be at least 1");
  check_field(a.nodes + a.delay_offset >= 1, "architecture.delay_offset", "makes the delay shorter than one step");
  switch (a.kind) {
    case ArchitectureKind::shallow:
      check_field(a.layers == 1, "architecture.layers", "must be 1 for a shallow reservoir");
      break;
    case ArchitectureKind::deep:
      check_field(a.layers >= 1, "architecture.layers", "must be at least 1");
      break;
    case ArchitectureKind::deep_optimized:
      check_field(a.layers == 2, "architecture.layers", "must be 2 for interlayer optimisation");
      check_field(a.cmaes_budget >= 1, "architecture.cmaes_budget", "must be at least 1");
      check_field(a.cmaes_sigma0 > 0.0 && std::isfinite(a.cmaes_sigma0), "architecture.cmaes_sigma0", "must be positive");
      check_field(a.cmaes_patience >= 1, "architecture.cmaes_patience", "must be at least 1");
      check_field(c.protocol.kind == Protocol::Kind::fixed_split, "architecture.kind",
                  "deep-optimized needs the split protocol");
      break;
  }

  const auto& h = c.hyper;
  if (h.mode == HyperMode::fixed) {
    check_field(std::isfinite(h.feedback_gain), "hyper.feedback_gain", "must be finite");
    check_field(std::isfinite(h.input_gain), "hyper.input_gain", "must be finite");
    check_field(!h.log10_lambda || std::isfinite(*h.log10_lambda), "hyper.log10_lambda", "must be finite or auto");
  } else {
    check_field(h.init_count >= 2, "hyper.init_count", "must be at least 2");
    check_field(h.budget >= h.init_count, "hyper.budget", "must be at least hyper.init_count");
    check_field(h.inner_folds >= 2, "hyper.inner_folds", "must be at least 2");
    auto bounds = [](const std::pair<double, double>& b, const std::string& key) {
      check_field(std::isfinite(b.first) && std::isfinite(b.second) && b.first < b.second, "hyper." + key + "_max",
                  "must be finite and above hyper." + key + "_min");
    };
    bounds(h.bounds.feedback_gain, "feedback_gain");
    bounds(h.bounds.input_gain, "input_gain");
    bounds(h.bounds.log10_lambda, "log10_lambda");
  }

  if (c.protocol.kind == Protocol::Kind::kfold) {
    check_field(c.protocol.k >= 2, "protocol.folds", "must be at least 2");
    if (t.kind == TaskKind::synthetic)
      check_field(c.protocol.k <= static_cast<std::size_t>(t.synth.n_classes * t.synth.n_per_class), "protocol.folds",
                  "exceeds the number of utterances");
  } else {
    check_field(has_split, "protocol.kind", "split needs a task with a train/test split");
  }
}

std::string to_text(const ExperimentConfig& c) {
  std::ostringstream os;
  auto kv = [&](const std::string& key, const std::string& value) { os << key << " = " << value << '\n'; };
  auto real = [](double v) { return format_double(v); };

  os << "[run]\n";
  kv("name", c.name);
  kv("repeats", std::to_string(c.repeats));
  kv("base_seed", std::to_string(c.base_seed));
  kv("output_dir", c.output_dir);
  kv("noise_snr_db", c.noise_snr_db ? real(*c.noise_snr_db) : "none");
  kv("validation_fraction", real(c.validation_fraction));

  const auto& t = c.task;
  os << "\n[task]\n";
  kv("kind", to_string(t.kind));
  kv("scaling", t.scaling ? to_string(*t.scaling) : "auto");
  switch (t.kind) {
    case TaskKind::japanese_vowels:
      kv("train_path", t.train_path);
      kv("test_path", t.test_path);
      kv("train_counts", list_text(t.train_counts));
      kv("test_counts", list_text(t.test_counts));
      break;
    case TaskKind::feature_csv: {
      kv("table_path", t.table_path);
      kv("id_column", t.schema.id_column);
      kv("label_column", t.schema.label_column);
      kv("timestep_column", t.schema.timestep_column);
      std::string names;
      for (std::size_t i = 0; i < t.schema.classes.size(); ++i) names += (i ? "," : "") + t.schema.classes[i];
      kv("class_names", names);
      kv("delimiter", delimiter_text(t.schema.delimiter));
      break;
    }
    case TaskKind::synthetic:
      kv("classes", std::to_string(t.synth.n_classes));
      kv("per_class", std::to_string(t.synth.n_per_class));
      kv("min_length", std::to_string(t.synth.min_length));
      kv("max_length", std::to_string(t.synth.max_length));
      kv("input_dim", std::to_string(t.synth.input_dim));
      kv("difficulty", real(t.synth.difficulty));
      kv("data_seed", std::to_string(t.synth.seed));
      break;
  }

  const auto& a = c.architecture;
  os << "\n[architecture]\n";
  kv("kind", to_string(a.kind));
  kv("layers", std::to_string(a.layers));
  kv("nodes", std::to_string(a.nodes));
  kv("delay_offset", std::to_string(a.delay_offset));
  kv("nonlinearity", to_string(a.nonlinearity));
  if (a.kind == ArchitectureKind::deep_optimized) {
    kv("cmaes_budget", std::to_string(a.cmaes_budget));
    kv("cmaes_sigma0", real(a.cmaes_sigma0));
    kv("cmaes_patience", std::to_string(a.cmaes_patience));
    kv("cmaes_diagonal", a.cmaes_diagonal ? (*a.cmaes_diagonal ? "true" : "false") : "auto");
    kv("cmaes_clip", a.cmaes_clip ? "true" : "false");
  }

  const auto& h = c.hyper;
  os << "\n[hyper]\n";
  kv("mode", to_string(h.mode));
  if (h.mode == HyperMode::fixed) {
    kv("feedback_gain", real(h.feedback_gain));
    kv("input_gain", real(h.input_gain));
    kv("log10_lambda", h.log10_lambda ? real(*h.log10_lambda) : "auto");
  } else {
    kv("budget", std::to_string(h.budget));
    kv("init_count", std::to_string(h.init_count));
    kv("inner_folds", std::to_string(h.inner_folds));
    kv("feedback_gain_min", real(h.bounds.feedback_gain.first));
    kv("feedback_gain_max", real(h.bounds.feedback_gain.second));
    kv("input_gain_min", real(h.bounds.input_gain.first));
    kv("input_gain_max", real(h.bounds.input_gain.second));
    kv("log10_lambda_min", real(h.bounds.log10_lambda.first));
    kv("log10_lambda_max", real(h.bounds.log10_lambda.second));
  }

  os << "\n[protocol]\n";
  if (c.protocol.kind == Protocol::Kind::kfold) {
    kv("kind", "kfold");
    kv("folds", std::to_string(c.protocol.k));
    kv("fold_seed", std::to_string(c.protocol.fold_seed));
  } else {
    kv("kind", "split");
  }
  return os.str();
}

std::string config_fingerprint(const ExperimentConfig& config) {
  ExperimentConfig located = config;
  located.output_dir.clear();
  return fingerprint(to_text(located));
}

ReservoirArchitecture architecture_of(const ExperimentConfig& c) {
  ReservoirArchitecture arch;
  arch.layer_nodes.assign(static_cast<std::size_t>(c.architecture.layers), c.architecture.nodes);
  arch.feedback_gain = c.hyper.feedback_gain;
  arch.input_gain = c.hyper.input_gain;
  arch.delay_offset = c.architecture.delay_offset;
  arch.nonlinearity = c.architecture.nonlinearity;
  return arch;
}

}  // namespace drc
