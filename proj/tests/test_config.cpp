#include <doctest.h>

#include "drc/config.hpp"
#include "drc/error.hpp"

using namespace drc;

namespace {

std::string error_of(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    return e.what();
  }
  return "";
}

const char* kSynthetic = R"(
[run]
name = sweep
repeats = 3
base_seed = 11

[task]
kind = synthetic
classes = 4
per_class = 5
difficulty = 0.3

[architecture]
kind = deep
layers = 3
nodes = 20

[hyper]
mode = fixed
feedback_gain = 0.7
input_gain = 0.25
log10_lambda = -5

[protocol]
kind = kfold
folds = 5
)";

const char* kVowels = R"(
[task]
kind = japanese_vowels
train_path = ae.train
test_path = ae.test

[architecture]
kind = deep-optimized
nodes = 50
cmaes_budget = 40

[hyper]
mode = bayesian
budget = 30
)";

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("fields are read and defaults fill the rest") {
    const auto c = parse_config(kSynthetic);
    CHECK(c.name == "sweep");
    CHECK(c.repeats == 3);
    CHECK(c.base_seed == 11);
    CHECK(c.task.kind == TaskKind::synthetic);
    CHECK(c.task.synth.n_classes == 4);
    CHECK(c.task.synth.difficulty == 0.3);
    CHECK(c.task.synth.input_dim == SynthOptions{}.input_dim);
    CHECK(c.architecture.kind == ArchitectureKind::deep);
    CHECK(c.architecture.layers == 3);
    CHECK(c.hyper.log10_lambda == -5.0);
    CHECK(c.protocol.kind == Protocol::Kind::kfold);
    CHECK(c.protocol.k == 5);
    CHECK(!c.noise_snr_db.has_value());

    const auto v = parse_config(kVowels);
    CHECK(v.protocol.kind == Protocol::Kind::fixed_split);
    CHECK(v.architecture.layers == 2);
    CHECK(v.hyper.mode == HyperMode::bayesian);
    CHECK(v.hyper.bounds.feedback_gain.second == 1.2);
    CHECK(v.task.train_counts.size() == 9);
  }

  TEST_CASE("text form round trips losslessly") {
    for (const char* text : {kSynthetic, kVowels}) {
      const auto c = parse_config(text);
      const auto canonical = to_text(c);
      const auto back = parse_config(canonical);
      CHECK(to_text(back) == canonical);
      CHECK(config_fingerprint(back) == config_fingerprint(c));
    }
    auto c = parse_config(kSynthetic);
    c.noise_snr_db = 3.0;
    c.validation_fraction = 0.1;
    c.hyper.feedback_gain = 1.0 / 3.0;
    const auto back = parse_config(to_text(c));
    CHECK(back.noise_snr_db == 3.0);
    CHECK(back.validation_fraction == 0.1);
    CHECK(back.hyper.feedback_gain == 1.0 / 3.0);
  }

  TEST_CASE("fingerprint ignores order, comments and whitespace") {
    const char* shuffled = R"(
; same settings, different layout
[protocol]
folds=5
kind=kfold
[hyper]
log10_lambda = -5
input_gain = 0.25
feedback_gain = 0.7
mode = fixed
[architecture]
nodes = 20
layers = 3
kind = deep
[task]
difficulty = 0.30
per_class = 5
classes = 4
kind = synthetic
[run]
base_seed = 11
repeats = 3
name = sweep
)";
    CHECK(config_fingerprint(parse_config(shuffled)) == config_fingerprint(parse_config(kSynthetic)));
    auto changed = parse_config(kSynthetic);
    changed.base_seed = 12;
    CHECK(config_fingerprint(changed) != config_fingerprint(parse_config(kSynthetic)));
    auto moved = parse_config(kSynthetic);
    moved.output_dir = "elsewhere";
    CHECK(config_fingerprint(moved) == config_fingerprint(parse_config(kSynthetic)));
  }

  TEST_CASE("errors name the offending field") {
    CHECK(error_of("[task]\ndifficulty = 2\n").rfind("task.difficulty:", 0) == 0);
    CHECK(error_of("[architecture]\nnodez = 3\n").rfind("architecture.nodez:", 0) == 0);
    CHECK(error_of("[run]\nrepeats = many\n").rfind("run.repeats:", 0) == 0);
    CHECK(error_of("[run]\nrepeats = 0\n").rfind("run.repeats:", 0) == 0);
    CHECK(error_of("[architecture]\nkind = shallow\nlayers = 2\n").rfind("architecture.layers:", 0) == 0);
    CHECK(error_of("[architecture]\nkind = wide\n").rfind("architecture.kind:", 0) == 0);
    CHECK(error_of("[task]\nscaling = zscore\n").rfind("task.scaling:", 0) == 0);
    CHECK(error_of("[protocol]\nkind = split\n").rfind("protocol.kind:", 0) == 0);
    CHECK(error_of("[architecture]\nkind = deep-optimized\n").rfind("architecture.kind:", 0) == 0);
    CHECK(error_of("[task]\nkind = japanese_vowels\ntrain_path = a\ntest_path = b\ndifficulty = 0.1\n")
              .rfind("task.difficulty:", 0) == 0);
    CHECK(error_of("[hyper]\nmode = bayesian\nbudget = 3\n").rfind("hyper.budget:", 0) == 0);
    CHECK(error_of("[hyper]\nmode = bayesian\ninput_gain_min = 3\n").rfind("hyper.input_gain_max:", 0) == 0);
    CHECK(error_of("[extra]\nx = 1\n").rfind("extra:", 0) == 0);
    CHECK(error_of("[task]\nkind = japanese_vowels\ntest_path = b\n").rfind("task.train_path:", 0) == 0);
  }

  TEST_CASE("malformed text is a parse error") {
    try {
      parse_config("[run\nname = x\n");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::parse);
    }
    CHECK_THROWS_AS(parse_config("[run]\nname = a\nname = b\n"), Error);
  }

  TEST_CASE("architecture mapping") {
    const auto arch = architecture_of(parse_config(kSynthetic));
    CHECK(arch.layer_nodes == std::vector<Index>{20, 20, 20});
    CHECK(arch.feedback_gain == 0.7);
    CHECK(arch.total_nodes() == 60);
  }
}
