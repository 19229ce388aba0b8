#include "drc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "drc/error.hpp"

namespace drc {

std::vector<int> Dataset::labels() const {
  std::vector<int> out;
  out.reserve(sequences.size());
  for (const auto& s : sequences) out.push_back(s.label);
  return out;
}

void Dataset::validate() const {
  require(!sequences.empty(), "dataset is empty");
  require(input_dim >= 1 && n_classes >= 1, "dataset needs positive K and C");
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    const auto& s = sequences[i];
    const std::string where = "sequence " + std::to_string(i) + " ('" + s.id + "')";
    require(s.values.rows() >= 1, where + " is empty");
    require(s.values.cols() == input_dim, where + " has " + std::to_string(s.values.cols()) +
                                              " features, expected " + std::to_string(input_dim));
    require(s.values.allFinite(), where + " contains non-finite values");
    require(s.label >= 0 && s.label < n_classes, where + " has label out of range");
  }
  if (!split) return;
  std::vector<int> seen(sequences.size(), 0);
  for (const auto* part : {&split->train, &split->test})
    for (std::size_t idx : *part) {
      require(idx < sequences.size(), "split index out of range");
      require(seen[idx]++ == 0, "split index " + std::to_string(idx) + " appears twice");
    }
  std::vector<bool> covered(static_cast<std::size_t>(n_classes), false);
  for (std::size_t idx : split->train) covered[static_cast<std::size_t>(sequences[idx].label)] = true;
  require(std::all_of(covered.begin(), covered.end(), [](bool b) { return b; }),
          "train split does not cover every class");
}

FeatureSequence inject_noise(const FeatureSequence& sequence, double snr_db, std::int64_t seed) {
  require(sequence.values.size() > 0, "cannot add noise to an empty sequence");
  require(!std::isnan(snr_db), "snr_db must not be NaN");
  FeatureSequence out = sequence;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  require(std::isfinite(snr_db), "snr_db must be finite or +inf");
  const double power = sequence.values.squaredNorm() / static_cast<double>(sequence.values.size());
  const double sd = std::sqrt(power / std::pow(10.0, snr_db / 10.0));
  Rng rng(static_cast<std::uint64_t>(seed));
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Index r = 0; r < out.values.rows(); ++r)
    for (Index c = 0; c < out.values.cols(); ++c) out.values(r, c) += sd * normal(rng);
  return out;
}

Dataset inject_noise(const Dataset& dataset, double snr_db, std::int64_t seed) {
  Dataset out = dataset;
  if (std::isinf(snr_db) && snr_db > 0) return out;
  for (std::size_t i = 0; i < out.sequences.size(); ++i)
    out.sequences[i] = inject_noise(dataset.sequences[i], snr_db,
                                    static_cast<std::int64_t>(derive_seed(static_cast<std::uint64_t>(seed), i)));
  out.provenance += ";noise_snr_db=" + std::to_string(snr_db);
  return out;
}

Dataset shuffle_labels(const Dataset& dataset, std::int64_t seed) {
  Dataset out = dataset;
  std::vector<int> labels = dataset.labels();
  Rng rng(static_cast<std::uint64_t>(seed));
  std::shuffle(labels.begin(), labels.end(), rng);
  for (std::size_t i = 0; i < labels.size(); ++i) out.sequences[i].label = labels[i];
  out.provenance += ";shuffled_labels";
  return out;
}

}  // namespace drc
