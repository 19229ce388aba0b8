#include "drc/standardize.hpp"

#include <cmath>
#include <numeric>

#include "drc/error.hpp"

namespace drc {

ScalingScheme parse_scaling_scheme(const std::string& name) {
  if (name == "zscore") return ScalingScheme::zscore;
  if (name == "maxabs" || name == "max_abs") return ScalingScheme::max_abs;
  if (name == "none") return ScalingScheme::none;
  throw_invalid("unknown scaling scheme '" + name + "'");
}

const char* to_string(ScalingScheme s) noexcept {
  switch (s) {
    case ScalingScheme::zscore: return "zscore";
    case ScalingScheme::max_abs: return "maxabs";
    case ScalingScheme::none: return "none";
  }
  return "none";
}

Dataset standardize(const Dataset& dataset, ScalingScheme scheme) {
  require(!dataset.sequences.empty(), "cannot standardize an empty dataset");
  if (scheme == ScalingScheme::none) return dataset;

  std::vector<std::size_t> stats_items;
  if (dataset.split) {
    stats_items = dataset.split->train;
  } else {
    require(scheme != ScalingScheme::zscore, "z-score standardization needs a train split");
    stats_items.resize(dataset.size());
    std::iota(stats_items.begin(), stats_items.end(), std::size_t{0});
  }

  Dataset out = dataset;
  const Index k = dataset.input_dim;
  if (scheme == ScalingScheme::max_abs) {
    double peak = 0.0;
    for (std::size_t i : stats_items) peak = std::max(peak, dataset.sequences[i].values.cwiseAbs().maxCoeff());
    if (peak > 0.0) {
      for (auto& s : out.sequences) s.values /= peak;
    } else {
      out.warnings.push_back("max-abs scaling skipped: training data is all zero");
    }
    out.provenance += ";scale=maxabs(" + std::to_string(peak) + ")";
    return out;
  }

  // Two-pass mean / variance over every training row.
  Vector mean = Vector::Zero(k);
  double rows = 0.0;
  for (std::size_t i : stats_items) {
    mean += dataset.sequences[i].values.colwise().sum().transpose();
    rows += static_cast<double>(dataset.sequences[i].values.rows());
  }
  mean /= rows;
  Vector var = Vector::Zero(k);
  for (std::size_t i : stats_items)
    var += (dataset.sequences[i].values.rowwise() - mean.transpose()).array().square().colwise().sum().matrix().transpose();
  var /= rows;

  Vector scale = Vector::Ones(k);
  Vector shift = Vector::Zero(k);
  for (Index c = 0; c < k; ++c) {
    if (var[c] > 0.0) {
      shift[c] = mean[c];
      scale[c] = 1.0 / std::sqrt(var[c]);
    } else {
      out.warnings.push_back("feature " + std::to_string(c) + " has zero variance; passed through");
    }
  }
  for (auto& s : out.sequences)
    s.values = ((s.values.rowwise() - shift.transpose()).array().rowwise() * scale.transpose().array()).matrix();
  out.provenance += ";scale=zscore";
  return out;
}

}  // namespace drc
