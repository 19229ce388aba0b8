#include "drc/mask.hpp"

#include <string>

#include "drc/error.hpp"

namespace drc {

Mask generate_uniform_mask(Index rows, Index cols, std::int64_t seed) {
  require(rows >= 1 && cols >= 1,
          "mask dimensions must be positive, got " + std::to_string(rows) + "x" +
              std::to_string(cols));
  Rng rng(static_cast<std::uint64_t>(seed));
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Mask mask{Matrix(rows, cols), seed};
  for (Index r = 0; r < rows; ++r)
    for (Index c = 0; c < cols; ++c) mask.values(r, c) = uniform(rng);
  return mask;
}

Mask clipped(Mask mask) {
  mask.values = mask.values.cwiseMax(-1.0).cwiseMin(1.0);
  return mask;
}

}  // namespace drc
