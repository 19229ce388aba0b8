#pragma once

#include <vector>

#include "drc/types.hpp"

namespace drc {

/// Matern-5/2 with one lengthscale per input dimension:
///   k(r) = s2 (1 + sqrt5 r + 5 r^2 / 3) exp(-sqrt5 r),  r^2 = sum ((a_i - b_i) / l_i)^2
struct MaternKernel {
  Vector lengthscales;
  double signal_variance = 1.0;

  double operator()(const Vector& a, const Vector& b) const;
};

struct GpFitOptions {
  std::vector<double> lengthscale_grid{0.1, 0.2, 0.4, 0.8, 1.6};
  /// Signal variance and noise are relative to the normalised targets.
  std::vector<double> signal_variance_grid{0.5, 1.0, 2.0};
  std::vector<double> noise_grid{1e-6, 1e-3, 1e-2, 1e-1};
  double jitter_floor = 1e-6;
};

struct GpModel {
  Matrix points;  // n x d, one observation per row
  Vector values;
  MaternKernel kernel;
  double noise_variance = 1e-6;
  /// Targets are modelled as y_mean + y_scale * f with f ~ GP(0, k).
  double y_mean = 0.0;
  double y_scale = 1.0;
  double log_marginal_likelihood = 0.0;
  Eigen::LLT<Matrix> factor;
  Vector weights;  // (K + noise I)^{-1} (y - y_mean) / y_scale

  double prior_variance() const { return kernel.signal_variance * y_scale * y_scale; }
};

/// Chooses the kernel by grid-scored log marginal likelihood; the grid order
/// is fixed so refits on the same data return the same model.
GpModel gp_fit(const Matrix& points, const Vector& values, const GpFitOptions& options = {});

/// Fit with fixed kernel hyperparameters. `normalize` = false keeps a zero
/// prior mean and unit output scale.
GpModel gp_fit_fixed(const Matrix& points, const Vector& values, const MaternKernel& kernel,
                     double noise_variance, bool normalize = false);

struct GpPrediction {
  double mean = 0.0;
  double variance = 0.0;  // latent function variance, noise excluded
};

GpPrediction gp_predict(const GpModel& model, const Vector& x);

/// Minimisation convention: improvement = best - f.
double expected_improvement(double mean, double variance, double best);
double expected_improvement(const GpModel& model, const Vector& x, double best);

}  // namespace drc
