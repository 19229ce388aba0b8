#pragma once

#include <optional>
#include <string>
#include <vector>

#include "drc/types.hpp"

namespace drc {

/// One utterance: T x K feature matrix, row n is u(n).
struct FeatureSequence {
  Matrix values;
  int label = 0;
  std::string id;

  Index timesteps() const { return values.rows(); }
};

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

struct Dataset {
  std::vector<FeatureSequence> sequences;
  Index input_dim = 0;
  int n_classes = 0;
  std::optional<Split> split;
  std::string provenance;
  std::vector<std::string> warnings;

  std::size_t size() const { return sequences.size(); }
  std::vector<int> labels() const;
  /// Checks shared K, finite values, label range, split disjointness and that
  /// the train split covers every class.
  void validate() const;
};

/// Same input noise seed -> same noisy sequence. Signal power is the mean
/// square over all entries; noise variance = power / 10^(snr_db / 10). An
/// infinite snr_db disables the noise.
FeatureSequence inject_noise(const FeatureSequence& sequence, double snr_db, std::int64_t seed);

/// Sequence i draws from derive_seed(seed, i).
Dataset inject_noise(const Dataset& dataset, double snr_db, std::int64_t seed);

/// Relabels every sequence with a seeded permutation of the label vector.
Dataset shuffle_labels(const Dataset& dataset, std::int64_t seed);

}  // namespace drc
