#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "drc/types.hpp"

namespace drc {

/// (mu/mu_w, lambda)-CMA-ES state. Strategy constants follow the standard
/// defaults:
///   popsize  = 4 + floor(3 ln n),  mu = floor(popsize / 2)
///   w_i      ~ ln((popsize + 1) / 2) - ln i, normalised to sum 1
///   mu_eff   = 1 / sum w_i^2
///   c_sigma  = (mu_eff + 2) / (n + mu_eff + 5)
///   d_sigma  = 1 + 2 max(0, sqrt((mu_eff - 1) / (n + 1)) - 1) + c_sigma
///   c_c      = (4 + mu_eff / n) / (n + 4 + 2 mu_eff / n)
///   c_1      = 2 / ((n + 1.3)^2 + mu_eff)
///   c_mu     = min(1 - c_1, 2 (mu_eff - 2 + 1 / mu_eff) / ((n + 2)^2 + mu_eff))
/// The diagonal variant multiplies c_1 and c_mu by (n + 2) / 3 and keeps only
/// the variances.
struct CmaesState {
  Index dim = 0;
  Vector mean;
  double step_size = 1.0;
  bool diagonal = false;
  /// Full covariance (empty in diagonal mode).
  Matrix covariance;
  /// Variances in diagonal mode.
  Vector variances;
  /// Cached eigendecomposition C = B diag(D^2) B^T, refreshed lazily.
  Matrix eigenbasis;
  Vector axis_lengths;
  bool basis_is_identity = true;
  std::size_t eigen_generation = 0;

  Vector path_sigma;
  Vector path_c;
  std::size_t popsize = 0;
  std::size_t parent_count = 0;
  Vector recombination_weights;
  double mu_eff = 0.0;
  double c_sigma = 0.0, d_sigma = 0.0, c_c = 0.0, c_1 = 0.0, c_mu = 0.0, chi_n = 0.0;

  std::size_t generation = 0;
  std::int64_t rng_seed = 0;
  /// Number of covariance repairs (eigenvalues lifted to stay positive).
  std::size_t repairs = 0;

  /// Smallest eigenvalue of the current covariance (recomputed, not cached).
  double min_eigenvalue() const;
};

struct CmaesOptions {
  std::size_t popsize = 0;  // 0 -> default
  bool diagonal = false;
};

CmaesState cmaes_init(Index dim, const Vector& mean0, double sigma0, std::int64_t seed,
                      const CmaesOptions& options = {});

/// popsize samples mean + sigma * B D z with z drawn from a stream seeded by
/// (rng_seed, generation); asking twice without a tell gives the same set.
std::vector<Vector> cmaes_ask(const CmaesState& state);

/// Lower fitness is better. Ranking is a stable sort, so equal fitnesses keep
/// candidate order.
void cmaes_tell(CmaesState& state, const std::vector<Vector>& candidates, std::span<const double> fitness);

struct CmaesRun {
  Vector best;
  double best_value = 0.0;
  std::size_t evaluations = 0;
  std::size_t generations = 0;
};

/// Ask/tell loop until `target` is reached or `max_evaluations` is spent.
CmaesRun cmaes_minimize(const std::function<double(const Vector&)>& objective, const Vector& mean0,
                        double sigma0, std::size_t max_evaluations, double target, std::int64_t seed,
                        const CmaesOptions& options = {});

}  // namespace drc
