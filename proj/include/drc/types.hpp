#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <cstdint>
#include <random>

namespace drc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;
using Rng = std::mt19937_64;

/// SplitMix64 finalizer over (base, unit). Work units (repeats, folds,
/// offspring, sequences) get their own stream so evaluation order never
/// changes the numbers.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t unit) noexcept {
  std::uint64_t z = base + 0x9E3779B97F4A7C15ULL * (unit + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline Rng make_rng(std::uint64_t base, std::uint64_t unit) {
  return Rng(derive_seed(base, unit));
}

}  // namespace drc
