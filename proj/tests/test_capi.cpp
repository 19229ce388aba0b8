#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <string>
#include <unistd.h>
#include <vector>

#include "drc/drc.h"

namespace fs = std::filesystem;

namespace {

std::string take(char* text) {
  std::string out = text ? text : "";
  drc_string_free(text);
  return out;
}

const char* kSmallRun = R"(
[run]
repeats = 2
base_seed = 3
[task]
kind = synthetic
classes = 3
per_class = 10
input_dim = 6
min_length = 8
max_length = 12
[architecture]
kind = shallow
nodes = 12
[hyper]
log10_lambda = -3
[protocol]
kind = kfold
folds = 5
)";

}  // namespace

TEST_CASE("status names and the thread-local error message") {
  CHECK(std::string(drc_status_name(DRC_OK)) == "ok");
  CHECK(std::string(drc_status_name(DRC_ERR_INVALID_ARGUMENT)) == "invalid_argument");
  CHECK(std::string(drc_status_name(DRC_ERR_IO)) == "io_error");
  CHECK(std::string(drc_status_name(static_cast<drc_status>(99))) == "unknown");

  drc_config* cfg = nullptr;
  CHECK(drc_config_parse("[architecture]\nnodes = many\n", &cfg) == DRC_ERR_INVALID_ARGUMENT);
  CHECK(cfg == nullptr);
  CHECK(std::string(drc_last_error()).find("architecture.nodes") != std::string::npos);
  CHECK(drc_config_parse("[architecture\n", &cfg) == DRC_ERR_PARSE);
  CHECK(drc_config_load("/nonexistent/config.ini", &cfg) == DRC_ERR_IO);
  CHECK(std::string(drc_last_error()).find("/nonexistent/config.ini") != std::string::npos);

  double ei = 0.0;
  CHECK(drc_expected_improvement(0.0, 1.0, 0.0, &ei) == DRC_OK);
  CHECK(std::string(drc_last_error()).empty());
  CHECK(drc_expected_improvement(0.0, 1.0, 0.0, nullptr) == DRC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("expected improvement at the incumbent is sigma times the normal density at zero") {
  double ei = 0.0;
  REQUIRE(drc_expected_improvement(2.0, 4.0, 2.0, &ei) == DRC_OK);
  CHECK(ei == doctest::Approx(2.0 / std::sqrt(2.0 * std::numbers::pi)).epsilon(1e-14));
}

TEST_CASE("masks are reproducible and bounded") {
  std::vector<double> a(12), b(12), c(12);
  REQUIRE(drc_mask_uniform(3, 4, 7, a.data()) == DRC_OK);
  REQUIRE(drc_mask_uniform(3, 4, 7, b.data()) == DRC_OK);
  REQUIRE(drc_mask_uniform(3, 4, 8, c.data()) == DRC_OK);
  CHECK(a == b);
  CHECK(a != c);
  for (double v : a) CHECK(std::abs(v) <= 1.0);
  CHECK(drc_mask_uniform(0, 4, 7, a.data()) == DRC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("delay run matches a direct flat-time loop") {
  const std::size_t t = 5, k = 2, n = 4, d = n + 1;
  std::vector<double> u(t * k), mask(n * k), states(t * n);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = std::sin(0.7 * static_cast<double>(i)) - 0.2;
  REQUIRE(drc_mask_uniform(n, k, 11, mask.data()) == DRC_OK);
  REQUIRE(drc_delay_run(u.data(), t, k, mask.data(), n, d, 0.9, 0.6, DRC_SINE, states.data()) == DRC_OK);

  std::vector<double> flat(t * n, 0.0);
  for (std::size_t s = 0; s < t * n; ++s) {
    const std::size_t step = s / n, node = s % n;
    double drive = 0.0;
    for (std::size_t j = 0; j < k; ++j) drive += mask[node * k + j] * u[step * k + j];
    const double past = s >= d ? flat[s - d] : 0.0;
    flat[s] = std::sin(0.9 * past + 0.6 * drive);
  }
  for (std::size_t i = 0; i < flat.size(); ++i) CHECK(states[i] == doctest::Approx(flat[i]).epsilon(1e-15));
  CHECK(drc_delay_run(u.data(), t, k, mask.data(), n, d, 0.9, 0.6, static_cast<drc_nonlinearity>(5),
                      states.data()) == DRC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("ridge through the C layer matches the one-feature closed form") {
  const std::vector<double> x{1.0, 2.0, -1.0, 0.5};
  const std::vector<double> y{1.0, -1.0, 0.5, 2.0, -0.5, 0.0, 1.0, 1.0};  // 4 x 2
  std::vector<double> w(2);
  REQUIRE(drc_ridge_train(x.data(), 4, 1, y.data(), 2, 0.3, w.data()) == DRC_OK);
  double xx = 0.0, xy0 = 0.0, xy1 = 0.0;
  for (int i = 0; i < 4; ++i) {
    xx += x[i] * x[i];
    xy0 += x[i] * y[2 * i];
    xy1 += x[i] * y[2 * i + 1];
  }
  CHECK(w[0] == doctest::Approx(xy0 / (xx + 0.3)).epsilon(1e-12));
  CHECK(w[1] == doctest::Approx(xy1 / (xx + 0.3)).epsilon(1e-12));

  const std::vector<double> zero(4, 0.0);
  CHECK(drc_ridge_train(zero.data(), 4, 1, y.data(), 2, 0.0, w.data()) == DRC_ERR_SINGULAR_MATRIX);
}

TEST_CASE("ask/tell minimises a sphere") {
  const std::vector<double> mean0{1.0, -2.0, 0.5};
  drc_cmaes* es = nullptr;
  REQUIRE(drc_cmaes_create(3, mean0.data(), 0.5, 4, 0, 0, &es) == DRC_OK);
  std::size_t lambda = 0;
  REQUIRE(drc_cmaes_popsize(es, &lambda) == DRC_OK);
  CHECK(lambda == 7);
  std::vector<double> batch(lambda * 3), again(lambda * 3), fit(lambda);
  for (int g = 0; g < 150; ++g) {
    REQUIRE(drc_cmaes_ask(es, batch.data()) == DRC_OK);
    if (g == 0) {
      REQUIRE(drc_cmaes_ask(es, again.data()) == DRC_OK);
      CHECK(batch == again);
    }
    for (std::size_t i = 0; i < lambda; ++i)
      fit[i] = batch[3 * i] * batch[3 * i] + batch[3 * i + 1] * batch[3 * i + 1] + batch[3 * i + 2] * batch[3 * i + 2];
    REQUIRE(drc_cmaes_tell(es, batch.data(), fit.data()) == DRC_OK);
  }
  std::vector<double> mean(3);
  double sigma = 0.0;
  REQUIRE(drc_cmaes_mean(es, mean.data(), &sigma) == DRC_OK);
  CHECK(mean[0] * mean[0] + mean[1] * mean[1] + mean[2] * mean[2] < 1e-12);
  CHECK(sigma < 1e-4);
  drc_cmaes_free(es);
  CHECK(drc_cmaes_create(0, mean0.data(), 0.5, 4, 0, 0, &es) == DRC_ERR_INVALID_ARGUMENT);
}

TEST_CASE("config handle overrides and text round trip") {
  drc_config* cfg = nullptr;
  REQUIRE(drc_config_parse(kSmallRun, &cfg) == DRC_OK);
  char* text = nullptr;
  REQUIRE(drc_config_text(cfg, &text) == DRC_OK);
  const std::string before = take(text);
  char* fp = nullptr;
  REQUIRE(drc_config_fingerprint(cfg, &fp) == DRC_OK);
  const std::string fp_before = take(fp);
  CHECK(fp_before.size() == 16);

  drc_config* copy = nullptr;
  REQUIRE(drc_config_parse(before.c_str(), &copy) == DRC_OK);
  REQUIRE(drc_config_fingerprint(copy, &fp) == DRC_OK);
  CHECK(take(fp) == fp_before);
  drc_config_free(copy);

  REQUIRE(drc_config_set_snr_db(cfg, 3.0) == DRC_OK);
  REQUIRE(drc_config_fingerprint(cfg, &fp) == DRC_OK);
  CHECK(take(fp) != fp_before);
  REQUIRE(drc_config_set_snr_db(cfg, NAN) == DRC_OK);
  REQUIRE(drc_config_fingerprint(cfg, &fp) == DRC_OK);
  CHECK(take(fp) == fp_before);

  REQUIRE(drc_config_set_base_seed(cfg, 42) == DRC_OK);
  std::int64_t seed = 0;
  REQUIRE(drc_config_base_seed(cfg, &seed) == DRC_OK);
  CHECK(seed == 42);
  CHECK(drc_config_set_repeats(cfg, 0) == DRC_ERR_INVALID_ARGUMENT);
  REQUIRE(drc_config_set_output_dir(cfg, "somewhere") == DRC_OK);
  char* dir = nullptr;
  REQUIRE(drc_config_output_dir(cfg, &dir) == DRC_OK);
  CHECK(take(dir) == "somewhere");
  drc_config_free(cfg);
}

TEST_CASE("run, persist and report through handles") {
  const fs::path root = fs::temp_directory_path() / ("drc_capi_" + std::to_string(::getpid()));
  fs::remove_all(root);
  drc_config* cfg = nullptr;
  REQUIRE(drc_config_parse(kSmallRun, &cfg) == DRC_OK);

  std::vector<std::string> progress;
  auto sink = [](const char* line, void* user) { static_cast<std::vector<std::string>*>(user)->push_back(line); };
  drc_run* run = nullptr;
  REQUIRE(drc_run_experiment(cfg, sink, &progress, &run) == DRC_OK);
  CHECK(progress.size() == 2);
  double mean = -1.0, sd = -1.0;
  REQUIRE(drc_run_error(run, &mean, &sd) == DRC_OK);
  CHECK(mean >= 0.0);
  CHECK(mean <= 1.0);
  CHECK(sd >= 0.0);

  drc_run* again = nullptr;
  REQUIRE(drc_run_experiment(cfg, nullptr, nullptr, &again) == DRC_OK);
  char* a = nullptr;
  char* b = nullptr;
  REQUIRE(drc_run_records(run, &a) == DRC_OK);
  REQUIRE(drc_run_records(again, &b) == DRC_OK);
  CHECK(take(a) == take(b));
  drc_run_free(again);

  const std::string dir = (root / "run").string();
  REQUIRE(drc_run_persist(run, dir.c_str()) == DRC_OK);
  drc_run_free(run);
  const std::string results = dir + "/results.jsonl";
  const char* paths[] = {results.c_str()};
  char* table = nullptr;
  char* svg = nullptr;
  REQUIRE(drc_report(paths, 1, nullptr, "demo", &table, &svg) == DRC_OK);
  const std::string t = take(table);
  CHECK(t.rfind("architecture\t", 0) == 0);
  CHECK(t.find("shallow\tsynthetic\tnone\t1\t12\t12\t2\t") != std::string::npos);
  CHECK(take(svg).find("class=\"series\"") != std::string::npos);
  CHECK(drc_report(paths, 1, "deep", nullptr, &table, nullptr) == DRC_ERR_INVALID_ARGUMENT);
  CHECK(drc_report(paths, 0, nullptr, nullptr, &table, nullptr) == DRC_ERR_INVALID_ARGUMENT);

  drc_dataset* ds = nullptr;
  REQUIRE(drc_dataset_from_config(cfg, &ds) == DRC_OK);
  char* summary = nullptr;
  REQUIRE(drc_dataset_summary(ds, &summary) == DRC_OK);
  CHECK(take(summary).find("\"items\":30") != std::string::npos);
  REQUIRE(drc_dataset_persist(ds, (root / "data").string().c_str()) == DRC_OK);
  CHECK(fs::exists(root / "data" / "dataset.csv"));
  CHECK(fs::exists(root / "data" / "dataset.json"));
  drc_dataset_free(ds);

  std::string bayes_text = kSmallRun;
  bayes_text.replace(bayes_text.find("log10_lambda = -3"), 17, "mode = bayesian\nbudget = 4\ninit_count = 2");
  drc_config* bayes = nullptr;
  REQUIRE(drc_config_parse(bayes_text.c_str(), &bayes) == DRC_OK);
  char* line = nullptr;
  const std::string hp_dir = (root / "hp").string();
  REQUIRE(drc_optimize_hyper(bayes, 9, hp_dir.c_str(), &line) == DRC_OK);
  CHECK(take(line).find("\"record\":\"hyper_search\"") != std::string::npos);
  std::ifstream trace(hp_dir + "/traces/bo.tsv");
  std::size_t rows = 0;
  for (std::string row; std::getline(trace, row);) ++rows;
  CHECK(rows == 5);
  CHECK(drc_optimize_interlayer(bayes, 9, nullptr, nullptr) == DRC_ERR_INVALID_ARGUMENT);
  drc_config_free(bayes);
  drc_config_free(cfg);
  fs::remove_all(root);
}
