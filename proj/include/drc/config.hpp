#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "drc/bayes_opt.hpp"
#include "drc/data_io.hpp"
#include "drc/pipeline.hpp"
#include "drc/standardize.hpp"
#include "drc/synth.hpp"

namespace drc {

enum class TaskKind { japanese_vowels, synthetic, feature_csv };
enum class ArchitectureKind { shallow, deep, deep_optimized };
enum class HyperMode { fixed, bayesian };

struct TaskConfig {
  TaskKind kind = TaskKind::synthetic;
  // japanese_vowels
  std::string train_path;
  std::string test_path;
  std::vector<int> train_counts = default_jv_train_counts();
  std::vector<int> test_counts = default_jv_test_counts();
  // feature_csv
  std::string table_path;
  CsvSchema schema;
  // synthetic
  SynthOptions synth;
  std::optional<ScalingScheme> scaling;  // unset: zscore with a split, maxabs without
};

struct ArchitectureConfig {
  ArchitectureKind kind = ArchitectureKind::shallow;
  Index layers = 1;
  Index nodes = 100;
  Index delay_offset = 1;
  Nonlinearity nonlinearity = Nonlinearity::sine;
  // deep_optimized
  std::size_t cmaes_budget = 40;
  double cmaes_sigma0 = 0.2;
  std::size_t cmaes_patience = 10;
  std::optional<bool> cmaes_diagonal;
  /// Clip optimised mask entries to [-1, 1].
  bool cmaes_clip = true;
};

struct HyperConfig {
  HyperMode mode = HyperMode::fixed;
  double feedback_gain = 0.8;
  double input_gain = 0.5;
  /// Unset: lambda chosen per training set from the default grid.
  std::optional<double> log10_lambda;
  HyperBounds bounds;
  std::size_t budget = 30;
  std::size_t init_count = 5;
  /// The search objective is the inner k-fold error on the training items.
  std::size_t inner_folds = 5;
};

struct ExperimentConfig {
  std::string name = "experiment";
  TaskConfig task;
  ArchitectureConfig architecture;
  HyperConfig hyper;
  Protocol protocol;
  /// Share of each training set held out to score candidates (BO, CMA-ES).
  double validation_fraction = 1.0 / 3.0;
  std::size_t repeats = 1;
  std::optional<double> noise_snr_db;
  std::int64_t base_seed = 0;
  std::string output_dir = "results";
  /// Directory relative data paths resolve against. Not part of the text form.
  std::string source_dir;
};

/// Sectioned key = value text. Unknown keys, bad values and inconsistent
/// settings raise invalid_argument naming the field path (section.key).
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::string& path);

/// Canonical text: every field, sections and keys in a fixed order, doubles
/// in shortest round-trip form. parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

/// Fingerprint of the canonical text, so key order and comments do not matter.
/// output_dir is left out: where results land does not change them.
std::string config_fingerprint(const ExperimentConfig& config);

void validate(const ExperimentConfig& config);

ReservoirArchitecture architecture_of(const ExperimentConfig& config);

const char* to_string(TaskKind kind) noexcept;
const char* to_string(ArchitectureKind kind) noexcept;
const char* to_string(HyperMode mode) noexcept;

}  // namespace drc
