#pragma once

#include "drc/dataset.hpp"

namespace drc {

enum class ScalingScheme { zscore, max_abs, none };

ScalingScheme parse_scaling_scheme(const std::string& name);
const char* to_string(ScalingScheme s) noexcept;

/// Statistics come from the train split (all sequences when there is no split,
/// max_abs only). Zero-variance features pass through untouched and are listed
/// in Dataset::warnings.
Dataset standardize(const Dataset& dataset, ScalingScheme scheme);

}  // namespace drc
