#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "drc/drc.h"

namespace fs = std::filesystem;

namespace {

// Raised to unwind with a status already recorded by the library or the CLI.
struct Failure {
  drc_status status;
  std::string message;
};

void check(drc_status status) {
  if (status != DRC_OK) throw Failure{status, drc_last_error()};
}

std::string take(char* text) {
  std::string out = text ? text : "";
  drc_string_free(text);
  return out;
}

std::string quoted(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out += c;
  }
  return out + '"';
}

int report_failure(drc_status status, const std::string& message) {
  std::cerr << "error: code=" << drc_status_name(status) << " message=" << quoted(message) << '\n';
  return static_cast<int>(status);
}

struct ConfigDeleter {
  void operator()(drc_config* c) const { drc_config_free(c); }
};
using ConfigPtr = std::unique_ptr<drc_config, ConfigDeleter>;

struct Overrides {
  std::string config_path;
  std::optional<std::int64_t> seed;
  std::optional<std::size_t> repeats;
  std::optional<double> snr_db;
  std::string out_dir;
};

ConfigPtr load(const Overrides& o) {
  drc_config* raw = nullptr;
  check(drc_config_load(o.config_path.c_str(), &raw));
  ConfigPtr config(raw);
  if (o.seed) check(drc_config_set_base_seed(config.get(), *o.seed));
  if (o.repeats) check(drc_config_set_repeats(config.get(), *o.repeats));
  if (o.snr_db) check(drc_config_set_snr_db(config.get(), *o.snr_db));
  if (!o.out_dir.empty()) check(drc_config_set_output_dir(config.get(), o.out_dir.c_str()));
  return config;
}

std::string output_dir(const drc_config* config) {
  char* dir = nullptr;
  check(drc_config_output_dir(config, &dir));
  return take(dir);
}

std::int64_t seed_of(const drc_config* config) {
  std::int64_t seed = 0;
  check(drc_config_base_seed(config, &seed));
  return seed;
}

void progress_line(const char* line, void*) { std::cerr << "progress: " << line << '\n'; }

void do_ingest(const Overrides& o) {
  auto config = load(o);
  drc_dataset* ds = nullptr;
  check(drc_dataset_from_config(config.get(), &ds));
  std::unique_ptr<drc_dataset, void (*)(drc_dataset*)> guard(ds, drc_dataset_free);
  char* summary = nullptr;
  check(drc_dataset_summary(ds, &summary));
  std::cout << take(summary);
  if (!o.out_dir.empty()) check(drc_dataset_persist(ds, o.out_dir.c_str()));
}

void do_run(const Overrides& o) {
  auto config = load(o);
  drc_run* run = nullptr;
  check(drc_run_experiment(config.get(), progress_line, nullptr, &run));
  std::unique_ptr<drc_run, void (*)(drc_run*)> guard(run, drc_run_free);
  const std::string dir = output_dir(config.get());
  check(drc_run_persist(run, dir.c_str()));
  char* lines = nullptr;
  check(drc_run_records(run, &lines));
  const std::string all = take(lines);
  const auto last = all.rfind('\n', all.size() - 2);
  std::cout << all.substr(last == std::string::npos ? 0 : last + 1);
}

void do_optimize(const Overrides& o, bool interlayer) {
  auto config = load(o);
  const std::string dir = output_dir(config.get());
  const std::int64_t seed = seed_of(config.get());
  char* line = nullptr;
  check(interlayer ? drc_optimize_interlayer(config.get(), seed, dir.c_str(), &line)
                   : drc_optimize_hyper(config.get(), seed, dir.c_str(), &line));
  std::cout << take(line);
}

void do_report(const std::vector<std::string>& inputs, const std::string& architecture, const std::string& title,
               const std::string& out_dir) {
  std::vector<std::string> files;
  for (const auto& in : inputs) files.push_back(fs::is_directory(in) ? (fs::path(in) / "results.jsonl").string() : in);
  std::vector<const char*> paths;
  for (const auto& f : files) paths.push_back(f.c_str());
  char* table = nullptr;
  char* svg = nullptr;
  check(drc_report(paths.data(), paths.size(), architecture.c_str(), title.c_str(), &table, &svg));
  const std::string t = take(table), s = take(svg);
  std::cout << t;
  if (out_dir.empty()) return;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Failure{DRC_ERR_IO, "cannot create '" + out_dir + "': " + ec.message()};
  for (const auto& [name, text] : {std::pair{"report.tsv", &t}, std::pair{"report.svg", &s}}) {
    const auto path = (fs::path(out_dir) / name).string();
    std::ofstream f(path, std::ios::binary);
    if (!(f << *text)) throw Failure{DRC_ERR_IO, "cannot write '" + path + "'"};
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delay-based reservoir computing experiments"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(drc_version()));

  Overrides o;
  auto add_common = [&](CLI::App* sub, bool run_flags) {
    sub->add_option("--config", o.config_path, "Experiment config (INI)")->required()->check(CLI::ExistingFile);
    sub->add_option("--out", o.out_dir, "Output directory (overrides run.output_dir)");
    if (!run_flags) return;
    sub->add_option("--seed", o.seed, "Base seed");
    sub->add_option("--snr-db", o.snr_db, "Additive white noise level in dB");
  };

  auto* ingest = app.add_subcommand("ingest", "Validate a task's data and optionally export it as a feature table");
  add_common(ingest, false);
  auto* run = app.add_subcommand("run", "Run an experiment and persist its records");
  add_common(run, true);
  run->add_option("--repeats", o.repeats, "Number of mask seeds")->check(CLI::PositiveNumber);
  auto* hp = app.add_subcommand("optimize-hp", "Standalone Bayesian search over gains and ridge strength");
  add_common(hp, true);
  auto* il = app.add_subcommand("optimize-interlayer", "Standalone CMA-ES search over a two-layer interlayer mask");
  add_common(il, true);

  std::vector<std::string> inputs;
  std::string architecture, title, report_out;
  auto* report = app.add_subcommand("report", "Tabulate and plot results.jsonl files or run directories");
  report->add_option("results", inputs, "results.jsonl files or run directories")->required()->check(CLI::ExistingPath);
  report->add_option("--architecture", architecture, "Keep one architecture only");
  report->add_option("--title", title, "Plot title");
  report->add_option("--out", report_out, "Directory for report.tsv and report.svg");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_failure(DRC_ERR_INVALID_ARGUMENT, e.what());
  }

  try {
    if (*ingest) do_ingest(o);
    if (*run) do_run(o);
    if (*hp) do_optimize(o, false);
    if (*il) do_optimize(o, true);
    if (*report) do_report(inputs, architecture, title, report_out);
  } catch (const Failure& f) {
    return report_failure(f.status, f.message);
  } catch (const std::exception& e) {
    return report_failure(DRC_ERR_INTERNAL, e.what());
  }
  return 0;
}
