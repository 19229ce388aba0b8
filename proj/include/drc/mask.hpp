#pragma once

#include <cstdint>

#include "drc/types.hpp"

namespace drc {

/// Random projection with entries in [-1, 1]. Plays both the input mask
/// (N x K) and the interlayer mask (N x N_prev) roles.
struct Mask {
  Matrix values;
  std::int64_t seed = 0;

  Index rows() const { return values.rows(); }
  Index cols() const { return values.cols(); }
};

/// Entries are drawn row by row from Uniform(-1, 1); identical (rows, cols,
/// seed) give bit-identical masks.
Mask generate_uniform_mask(Index rows, Index cols, std::int64_t seed);

/// Clips every entry into [-1, 1].
Mask clipped(Mask mask);

}  // namespace drc
