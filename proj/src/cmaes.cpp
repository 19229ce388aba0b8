#include "drc/cmaes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "drc/error.hpp"

namespace drc {

namespace {

constexpr double kEigenFloor = 1e-14;

void refresh_eigensystem(CmaesState& s) {
  s.eigen_generation = s.generation;
  if (s.diagonal) {
    const double top = s.variances.maxCoeff();
    for (Index i = 0; i < s.dim; ++i)
      if (!(s.variances[i] > kEigenFloor * top)) {
        s.variances[i] = std::max(kEigenFloor * top, std::numeric_limits<double>::min());
        ++s.repairs;
      }
    s.axis_lengths = s.variances.cwiseSqrt();
    return;
  }
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(s.covariance);
  if (solver.info() != Eigen::Success) throw Error(ErrorCode::numeric, "covariance eigendecomposition failed");
  Vector values = solver.eigenvalues();
  const double top = std::max(values.maxCoeff(), std::numeric_limits<double>::min());
  bool repaired = false;
  for (Index i = 0; i < values.size(); ++i)
    if (!(values[i] > kEigenFloor * top)) {
      values[i] = kEigenFloor * top;
      repaired = true;
    }
  s.eigenbasis = solver.eigenvectors();
  s.axis_lengths = values.cwiseSqrt();
  s.basis_is_identity = false;
  if (repaired) {
    ++s.repairs;
    s.covariance = s.eigenbasis * values.asDiagonal() * s.eigenbasis.transpose();
  }
}

// C^{-1/2} v
Vector inverse_sqrt_times(const CmaesState& s, const Vector& v) {
  if (s.diagonal || s.basis_is_identity) return v.cwiseQuotient(s.axis_lengths);
  return s.eigenbasis * (s.eigenbasis.transpose() * v).cwiseQuotient(s.axis_lengths);
}

}  // namespace

double CmaesState::min_eigenvalue() const {
  if (diagonal) return variances.minCoeff();
  Eigen::SelfAdjointEigenSolver<Matrix> solver(covariance, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

CmaesState cmaes_init(Index dim, const Vector& mean0, double sigma0, std::int64_t seed,
                      const CmaesOptions& options) {
  require(dim >= 1, "CMA-ES dimension must be positive");
  require(mean0.size() == dim, "initial mean has the wrong dimension");
  require(mean0.allFinite(), "initial mean must be finite");
  require(sigma0 > 0.0 && std::isfinite(sigma0), "sigma0 must be positive");
  const double n = static_cast<double>(dim);

  CmaesState s;
  s.dim = dim;
  s.mean = mean0;
  s.step_size = sigma0;
  s.diagonal = options.diagonal;
  s.rng_seed = seed;
  s.popsize = options.popsize ? options.popsize : 4 + static_cast<std::size_t>(std::floor(3.0 * std::log(n)));
  require(s.popsize >= 2, "population size must be at least 2");
  s.parent_count = s.popsize / 2;

  const std::size_t mu = s.parent_count;
  s.recombination_weights.resize(static_cast<Index>(mu));
  for (std::size_t i = 0; i < mu; ++i)
    s.recombination_weights[static_cast<Index>(i)] =
        std::log((static_cast<double>(s.popsize) + 1.0) / 2.0) - std::log(static_cast<double>(i + 1));
  s.recombination_weights /= s.recombination_weights.sum();
  s.mu_eff = 1.0 / s.recombination_weights.squaredNorm();

  const double me = s.mu_eff;
  s.c_sigma = (me + 2.0) / (n + me + 5.0);
  s.d_sigma = 1.0 + 2.0 * std::max(0.0, std::sqrt((me - 1.0) / (n + 1.0)) - 1.0) + s.c_sigma;
  s.c_c = (4.0 + me / n) / (n + 4.0 + 2.0 * me / n);
  s.c_1 = 2.0 / ((n + 1.3) * (n + 1.3) + me);
  s.c_mu = std::min(1.0 - s.c_1, 2.0 * (me - 2.0 + 1.0 / me) / ((n + 2.0) * (n + 2.0) + me));
  if (s.diagonal) {
    const double boost = (n + 2.0) / 3.0;
    s.c_1 = std::min(1.0, s.c_1 * boost);
    s.c_mu = std::min(1.0 - s.c_1, s.c_mu * boost);
  }
  s.chi_n = std::sqrt(n) * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

  s.path_sigma = Vector::Zero(dim);
  s.path_c = Vector::Zero(dim);
  s.axis_lengths = Vector::Ones(dim);
  if (s.diagonal) {
    s.variances = Vector::Ones(dim);
  } else {
    s.covariance = Matrix::Identity(dim, dim);
    s.basis_is_identity = true;
  }
  return s;
}

std::vector<Vector> cmaes_ask(const CmaesState& s) {
  Rng rng = make_rng(static_cast<std::uint64_t>(s.rng_seed), s.generation);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Vector> out;
  out.reserve(s.popsize);
  Vector z(s.dim);
  for (std::size_t k = 0; k < s.popsize; ++k) {
    for (Index i = 0; i < s.dim; ++i) z[i] = normal(rng);
    const Vector scaled = s.axis_lengths.cwiseProduct(z);
    if (s.diagonal || s.basis_is_identity)
      out.push_back(s.mean + s.step_size * scaled);
    else
      out.push_back(s.mean + s.step_size * (s.eigenbasis * scaled));
  }
  return out;
}

void cmaes_tell(CmaesState& s, const std::vector<Vector>& candidates, std::span<const double> fitness) {
  require(candidates.size() == s.popsize && fitness.size() == s.popsize,
          "tell expects exactly popsize candidates and fitness values");
  for (double f : fitness) require(std::isfinite(f), "fitness values must be finite");
  for (const auto& c : candidates) require(c.size() == s.dim, "candidate has the wrong dimension");

  std::vector<std::size_t> order(s.popsize);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return fitness[a] < fitness[b]; });

  const double n = static_cast<double>(s.dim);
  const std::size_t mu = s.parent_count;
  Matrix steps(s.dim, static_cast<Index>(mu));  // y_i = (x_i - m) / sigma
  for (std::size_t i = 0; i < mu; ++i) steps.col(static_cast<Index>(i)) = (candidates[order[i]] - s.mean) / s.step_size;
  const Vector mean_step = steps * s.recombination_weights;
  s.mean += s.step_size * mean_step;

  s.path_sigma = (1.0 - s.c_sigma) * s.path_sigma +
                 std::sqrt(s.c_sigma * (2.0 - s.c_sigma) * s.mu_eff) * inverse_sqrt_times(s, mean_step);
  const double ps_norm = s.path_sigma.norm();
  const double decay = 1.0 - std::pow(1.0 - s.c_sigma, 2.0 * static_cast<double>(s.generation + 1));
  const bool h_sigma = ps_norm / std::sqrt(decay) < (1.4 + 2.0 / (n + 1.0)) * s.chi_n;
  s.path_c = (1.0 - s.c_c) * s.path_c +
             (h_sigma ? std::sqrt(s.c_c * (2.0 - s.c_c) * s.mu_eff) : 0.0) * mean_step;

  const double keep = 1.0 - s.c_1 - s.c_mu + (h_sigma ? 0.0 : s.c_1 * s.c_c * (2.0 - s.c_c));
  if (s.diagonal) {
    Vector rank_mu = Vector::Zero(s.dim);
    for (std::size_t i = 0; i < mu; ++i)
      rank_mu += s.recombination_weights[static_cast<Index>(i)] * steps.col(static_cast<Index>(i)).cwiseAbs2();
    s.variances = keep * s.variances + s.c_1 * s.path_c.cwiseAbs2() + s.c_mu * rank_mu;
  } else {
    s.covariance *= keep;
    s.covariance.selfadjointView<Eigen::Lower>().rankUpdate(s.path_c, s.c_1);
    const Matrix weighted = steps * (s.c_mu * s.recombination_weights).cwiseSqrt().asDiagonal();
    s.covariance.selfadjointView<Eigen::Lower>().rankUpdate(weighted);
    s.covariance.triangularView<Eigen::StrictlyUpper>() = s.covariance.transpose();
  }

  s.step_size *= std::exp((s.c_sigma / s.d_sigma) * (ps_norm / s.chi_n - 1.0));
  if (!(s.step_size > 0.0) || !std::isfinite(s.step_size))
    throw Error(ErrorCode::numeric, "CMA-ES step size left (0, inf)");
  ++s.generation;

  const double gap = static_cast<double>(s.popsize) / (s.c_1 + s.c_mu) / n / 10.0;
  if (s.diagonal || static_cast<double>(s.generation - s.eigen_generation) > gap) refresh_eigensystem(s);
}

CmaesRun cmaes_minimize(const std::function<double(const Vector&)>& objective, const Vector& mean0,
                        double sigma0, std::size_t max_evaluations, double target, std::int64_t seed,
                        const CmaesOptions& options) {
  CmaesState state = cmaes_init(mean0.size(), mean0, sigma0, seed, options);
  CmaesRun run;
  run.best = mean0;
  run.best_value = std::numeric_limits<double>::infinity();
  while (run.evaluations + state.popsize <= max_evaluations) {
    const auto candidates = cmaes_ask(state);
    std::vector<double> values;
    values.reserve(candidates.size());
    for (const auto& c : candidates) {
      values.push_back(objective(c));
      ++run.evaluations;
      if (values.back() < run.best_value) {
        run.best_value = values.back();
        run.best = c;
      }
    }
    cmaes_tell(state, candidates, values);
    ++run.generations;
    if (run.best_value < target) break;
  }
  return run;
}

}  // namespace drc
