#pragma once

#include <cstdint>

#include "drc/dataset.hpp"

namespace drc {

struct SynthOptions {
  int n_classes = 10;
  int n_per_class = 50;
  Index min_length = 20;
  Index max_length = 40;
  Index input_dim = 86;
  /// In (0, 1]. Scales time warping, gain spread and per-sample jitter.
  double difficulty = 0.2;
  std::int64_t seed = 0;
};

/// Multi-class sequence task: each class is an ordered chain of spectral
/// shapes taken from a small shared inventory, under a class-specific slow
/// amplitude oscillation. Sequence u has label
/// u mod n_classes, so every class gets n_per_class items.
Dataset synth_dataset(const SynthOptions& options);

/// The clean class template sampled at `length` timesteps.
Matrix synth_template(const SynthOptions& options, int label, Index length);

}  // namespace drc
