#include "drc/gp.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "drc/error.hpp"

namespace drc {

namespace {

constexpr double kSqrt5 = 2.23606797749978969640;

inline double matern52_of_r(double r) {
  return (1.0 + kSqrt5 * r + 5.0 * r * r / 3.0) * std::exp(-kSqrt5 * r);
}

struct Normalisation {
  double mean = 0.0;
  double scale = 1.0;
};

Normalisation normalisation_of(const Vector& values, bool normalize) {
  if (!normalize) return {};
  const double mean = values.mean();
  const double var = (values.array() - mean).square().mean();
  return {mean, var > 0.0 ? std::sqrt(var) : 1.0};
}

void check_data(const Matrix& points, const Vector& values) {
  require(points.rows() >= 2, "a GP needs at least two observations");
  require(points.rows() == values.size(), "points and values differ in count");
  require(points.cols() >= 1, "GP inputs need at least one dimension");
  require(values.allFinite() && points.allFinite(), "GP observations must be finite");
}

// Returns false when the kernel matrix is not numerically positive definite.
bool factorise(GpModel& m, const Matrix& kernel_matrix, const Vector& y_norm) {
  Matrix k = kernel_matrix;
  k.diagonal().array() += m.noise_variance;
  m.factor.compute(k);
  if (m.factor.info() != Eigen::Success) return false;
  m.weights = m.factor.solve(y_norm);
  const Matrix& l = m.factor.matrixLLT();
  const double n = static_cast<double>(y_norm.size());
  m.log_marginal_likelihood = -0.5 * y_norm.dot(m.weights) - l.diagonal().array().log().sum() -
                              0.5 * n * std::log(2.0 * std::numbers::pi);
  return std::isfinite(m.log_marginal_likelihood);
}

}  // namespace

double MaternKernel::operator()(const Vector& a, const Vector& b) const {
  const double r = (a - b).cwiseQuotient(lengthscales).norm();
  return signal_variance * matern52_of_r(r);
}

GpModel gp_fit_fixed(const Matrix& points, const Vector& values, const MaternKernel& kernel,
                     double noise_variance, bool normalize) {
  check_data(points, values);
  require(kernel.lengthscales.size() == points.cols(), "one lengthscale per input dimension expected");
  require(noise_variance > 0.0, "noise variance must be positive");
  GpModel m;
  m.points = points;
  m.values = values;
  m.kernel = kernel;
  m.noise_variance = noise_variance;
  const auto norm = normalisation_of(values, normalize);
  m.y_mean = norm.mean;
  m.y_scale = norm.scale;
  const Index n = points.rows();
  Matrix k(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) k(i, j) = kernel(points.row(i).transpose(), points.row(j).transpose());
  const Vector y = (values.array() - m.y_mean) / m.y_scale;
  if (!factorise(m, k, y)) throw Error(ErrorCode::numeric, "GP kernel matrix is not positive definite");
  return m;
}

GpModel gp_fit(const Matrix& points, const Vector& values, const GpFitOptions& options) {
  check_data(points, values);
  require(!options.lengthscale_grid.empty() && !options.signal_variance_grid.empty() &&
              !options.noise_grid.empty(),
          "GP hyperparameter grids must not be empty");
  const Index n = points.rows();
  const Index d = points.cols();
  const auto norm = normalisation_of(values, true);
  const Vector y = (values.array() - norm.mean) / norm.scale;

  std::vector<Matrix> sq_dist(static_cast<std::size_t>(d), Matrix(n, n));
  for (Index dim = 0; dim < d; ++dim)
    for (Index i = 0; i < n; ++i)
      for (Index j = 0; j < n; ++j) {
        const double diff = points(i, dim) - points(j, dim);
        sq_dist[static_cast<std::size_t>(dim)](i, j) = diff * diff;
      }

  const std::size_t g = options.lengthscale_grid.size();
  std::size_t combos = 1;
  for (Index dim = 0; dim < d; ++dim) combos *= g;

  GpModel best;
  best.log_marginal_likelihood = -std::numeric_limits<double>::infinity();
  bool found = false;
  GpModel trial;
  trial.points = points;
  trial.values = values;
  trial.y_mean = norm.mean;
  trial.y_scale = norm.scale;
  Vector ls(d);
  Matrix r2(n, n), shape(n, n);
  for (std::size_t combo = 0; combo < combos; ++combo) {
    std::size_t rest = combo;
    for (Index dim = 0; dim < d; ++dim) {
      ls[dim] = options.lengthscale_grid[rest % g];
      rest /= g;
    }
    r2.setZero();
    for (Index dim = 0; dim < d; ++dim) r2 += sq_dist[static_cast<std::size_t>(dim)] / (ls[dim] * ls[dim]);
    shape = r2.unaryExpr([](double v) { return matern52_of_r(std::sqrt(v)); });
    for (double s2 : options.signal_variance_grid)
      for (double noise : options.noise_grid) {
        trial.kernel = {ls, s2};
        trial.noise_variance = std::max(noise, options.jitter_floor);
        if (!factorise(trial, s2 * shape, y)) continue;
        if (trial.log_marginal_likelihood > best.log_marginal_likelihood) {
          best = trial;
          found = true;
        }
      }
  }
  if (!found) throw Error(ErrorCode::numeric, "no GP hyperparameter candidate gave a valid factorisation");
  return best;
}

GpPrediction gp_predict(const GpModel& model, const Vector& x) {
  require(x.size() == model.points.cols(), "prediction point has the wrong dimension");
  const Index n = model.points.rows();
  Vector k_star(n);
  for (Index i = 0; i < n; ++i) k_star[i] = model.kernel(model.points.row(i).transpose(), x);
  const double mean = k_star.dot(model.weights);
  const Vector v = model.factor.matrixL().solve(k_star);
  const double var = std::max(0.0, model.kernel.signal_variance - v.squaredNorm());
  return {model.y_mean + model.y_scale * mean, var * model.y_scale * model.y_scale};
}

double expected_improvement(double mean, double variance, double best) {
  const double gain = best - mean;
  const double s = variance > 0.0 ? std::sqrt(variance) : 0.0;
  if (!(s > 0.0)) return std::max(0.0, gain);
  const double z = gain / s;
  const double cdf = 0.5 * std::erfc(-z / std::numbers::sqrt2);
  const double pdf = std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
  return std::max(0.0, gain * cdf + s * pdf);
}

double expected_improvement(const GpModel& model, const Vector& x, double best) {
  const auto p = gp_predict(model, x);
  return expected_improvement(p.mean, p.variance, best);
}

}  // namespace drc
