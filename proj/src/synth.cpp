#include "drc/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <set>
#include <numbers>
#include <string>

#include "drc/data_io.hpp"
#include "drc/error.hpp"

namespace drc {

namespace {

constexpr std::uint64_t kSharedStream = 1'000'003;
constexpr std::uint64_t kUtteranceStream = 2'000'003;

// Smooth profile across channels: a few Gaussian bumps, normalised to unit rms.
Vector channel_profile(Rng& rng, Index channels) {
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  Vector v = Vector::Zero(channels);
  const double k = static_cast<double>(channels);
  for (int bump = 0; bump < 3; ++bump) {
    const double amp = (u01(rng) < 0.5 ? -1.0 : 1.0) * (0.3 + 0.7 * u01(rng));
    const double centre = u01(rng) * k;
    const double width = std::max(1.0, k / 12.0 + u01(rng) * (k / 4.0 - k / 12.0));
    for (Index c = 0; c < channels; ++c) {
      const double d = (static_cast<double>(c) - centre) / width;
      v[c] += amp * std::exp(-0.5 * d * d);
    }
  }
  const double rms = std::sqrt(v.squaredNorm() / k);
  return rms > 0.0 ? Vector(v / rms) : v;
}

constexpr int kInventory = 6;
constexpr int kSegments = 3;

// Every class is an ordered sequence of segments drawn from a shared
// inventory of spectral shapes, so a single frame is ambiguous between
// classes and the order carries the identity.
struct TaskModel {
  Vector shared;
  std::vector<Vector> inventory;
  std::vector<std::array<int, kSegments>> classes;
  // Slow amplitude modulation per class: frequency (cycles per utterance), phase.
  std::vector<std::pair<double, double>> modulation;
};

TaskModel build_model(const SynthOptions& o) {
  TaskModel model;
  const auto seed = static_cast<std::uint64_t>(o.seed);
  Rng rng = make_rng(seed, kSharedStream);
  model.shared = channel_profile(rng, o.input_dim);
  for (int p = 0; p < kInventory; ++p) model.inventory.push_back(channel_profile(rng, o.input_dim));
  std::uniform_int_distribution<int> pick(0, kInventory - 1);
  std::set<std::array<int, kSegments>> used;
  while (static_cast<int>(model.classes.size()) < o.n_classes) {
    std::array<int, kSegments> seq{};
    for (int k = 0; k < kSegments; ++k) {
      do {
        seq[static_cast<std::size_t>(k)] = pick(rng);
      } while (k > 0 && seq[static_cast<std::size_t>(k)] == seq[static_cast<std::size_t>(k - 1)]);
    }
    if (used.insert(seq).second) model.classes.push_back(seq);
  }
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  for (int c = 0; c < o.n_classes; ++c)
    model.modulation.emplace_back(0.5 + 1.5 * u01(rng), 2.0 * std::numbers::pi * u01(rng));
  return model;
}

// Normalised time tau in (0, 1) maps to one template row. Neighbouring
// segments blend with Gaussian weights.
Eigen::RowVectorXd template_row(const TaskModel& model, int label, double tau, double gain) {
  const auto& seq = model.classes[static_cast<std::size_t>(label)];
  const double onset = std::sqrt(std::max(0.0, std::sin(std::numbers::pi * std::clamp(tau, 0.0, 1.0))));
  const double pos = std::clamp(tau, 0.0, 1.0) * kSegments;
  Vector mix = 0.5 * model.shared;
  double total = 0.0;
  std::array<double, kSegments> w{};
  for (int k = 0; k < kSegments; ++k) {
    const double d = (pos - (k + 0.5)) / 0.35;
    w[static_cast<std::size_t>(k)] = std::exp(-0.5 * d * d);
    total += w[static_cast<std::size_t>(k)];
  }
  for (int k = 0; k < kSegments; ++k)
    mix += (w[static_cast<std::size_t>(k)] / total) * model.inventory[static_cast<std::size_t>(seq[static_cast<std::size_t>(k)])];
  const auto [freq, phase] = model.modulation[static_cast<std::size_t>(label)];
  const double am = 1.0 + 0.3 * std::sin(2.0 * std::numbers::pi * freq * tau + phase);
  return (gain * onset * am) * mix.transpose();
}

void check(const SynthOptions& o) {
  require(o.n_classes >= 1 && o.n_per_class >= 1, "synthetic task needs classes and items");
  require(o.min_length >= 1 && o.max_length >= o.min_length, "invalid sequence length range");
  require(o.input_dim >= 1, "input_dim must be positive");
  require(o.n_classes <= kInventory * (kInventory - 1) * (kInventory - 1), "too many classes for the segment inventory");
  require(o.difficulty > 0.0 && o.difficulty <= 1.0, "difficulty must lie in (0, 1]");
}

}  // namespace

Matrix synth_template(const SynthOptions& options, int label, Index length) {
  check(options);
  require(label >= 0 && label < options.n_classes, "label out of range");
  require(length >= 1, "length must be positive");
  const TaskModel model = build_model(options);
  Matrix m(length, options.input_dim);
  for (Index t = 0; t < length; ++t)
    m.row(t) = template_row(model, label, (static_cast<double>(t) + 0.5) / static_cast<double>(length), 1.0);
  return m;
}

Dataset synth_dataset(const SynthOptions& options) {
  check(options);
  const TaskModel model = build_model(options);
  const double d = options.difficulty;
  Dataset ds;
  ds.input_dim = options.input_dim;
  ds.n_classes = options.n_classes;
  ds.provenance = "synthetic(C=" + std::to_string(options.n_classes) +
                  ",difficulty=" + format_double(options.difficulty) +
                  ",seed=" + std::to_string(options.seed) + ")";
  const int total = options.n_classes * options.n_per_class;
  for (int u = 0; u < total; ++u) {
    const int label = u % options.n_classes;
    Rng rng = make_rng(static_cast<std::uint64_t>(options.seed), kUtteranceStream + static_cast<std::uint64_t>(u));
    std::uniform_int_distribution<Index> length_dist(options.min_length, options.max_length);
    std::normal_distribution<double> normal(0.0, 1.0);
    const Index length = length_dist(rng);
    const double warp = 0.25 * d * normal(rng);
    const double shift = 0.1 * d * normal(rng);
    const double gain = 1.0 + 0.3 * d * normal(rng);
    Matrix m(length, options.input_dim);
    for (Index t = 0; t < length; ++t) {
      const double tau = (static_cast<double>(t) + 0.5) / static_cast<double>(length);
      const double warped = tau + shift + warp * std::sin(std::numbers::pi * tau) * tau;
      m.row(t) = template_row(model, label, warped, gain);
    }
    for (Index t = 0; t < length; ++t)
      for (Index k = 0; k < options.input_dim; ++k) m(t, k) += 1.5 * d * normal(rng);
    ds.sequences.push_back({std::move(m), label, "synth-" + std::to_string(u)});
  }
  return ds;
}

}  // namespace drc
